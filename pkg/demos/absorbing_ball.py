"""Big states get absorbed.

Every noise path has its own absorbing radius R(omega).  States with
E-norm up to ten times that radius, started 40 time units in the past,
all land inside the ball.  Large amplitudes make the cubic term stiff, so
the step is h/16 here.
"""
import numpy as np

from stochwave import NoiseContext, Params, System, member_seed, sample_path
from stochwave.attractor import absorb_experiment

system = System.default(Params())
h = system.grid.h
paths = [sample_path(member_seed(3, i), -40.0, 0.0, h / 32) for i in range(4)]
ctx = NoiseContext.from_paths(paths, system.params.delta)
rep = absorb_experiment(ctx, system, 40.0, 3, np.random.default_rng(3), scale=10.0, dt=h / 16)

for s, R in enumerate(rep.radius):
    start = ", ".join(f"{v:7.1f}" for v in rep.initial_norms[s])
    end = ", ".join(f"{v:.4f}" for v in rep.final_norms[s])
    print(f"path {s}: R={R:6.2f}  start [{start}]  end [{end}]")
print("all inside:", rep.ok)
