"""Three ways a sequence can fail or succeed to converge in L^p.

Truncations converge.  An escaping bump leaks mass to infinity (tightness
fails).  A concentrating spike piles its mass on shrinking cells (uniform
integrability fails).  The criterion should agree with the direct norm
computation in every case.
"""
from stochwave.vitali import FAMILIES, vitali_verdict

for name, make in FAMILIES.items():
    seq, limit = make()
    rep = vitali_verdict(seq, limit, p=4.0)
    print(f"{name:14s} tight={rep.a_pass!s:5s} uniformly integrable={rep.b_pass!s:5s} "
          f"predicted={rep.predicted!s:5s} direct={rep.oracle_converges!s:5s} agree={rep.consistent}")
