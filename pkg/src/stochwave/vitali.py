"""Vitali-type L^p convergence criterion on weighted lattices, with direct oracles.

A :class:`LatticeFunction` lives on countably many cells with positive
measure.  Cells are indexed by integer ids; the exhaustion ``{id <= K}``
plays the role of the finite-measure sets in condition (a).
"""
from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LatticeFunction",
    "PointwiseConvergenceError",
    "lp_norm",
    "check_condition_a",
    "check_condition_b",
    "sup_mass_bruteforce",
    "vitali_verdict",
    "radon_riesz_check",
    "truncation_family",
    "escaping_bump_family",
    "spike_family",
    "FAMILIES",
    "load_family_csv",
]


class PointwiseConvergenceError(ValueError):
    """The sequence does not converge pointwise to the proposed limit."""


@dataclass(frozen=True)
class LatticeFunction:
    ids: np.ndarray
    measures: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        mu = np.asarray(self.measures, dtype=float)
        val = np.asarray(self.values, dtype=float)
        if not (ids.shape == mu.shape == val.shape) or ids.ndim != 1:
            raise ValueError("ids, measures and values must be 1-D arrays of equal length")
        if len(np.unique(ids)) != len(ids):
            raise ValueError("cell ids must be unique")
        if np.any(~(mu > 0)) or np.any(~np.isfinite(mu)):
            raise ValueError("cell measures must be positive and finite")
        if np.any(~np.isfinite(val)):
            raise ValueError("values must be finite")
        order = np.argsort(ids, kind="stable")
        object.__setattr__(self, "ids", ids[order])
        object.__setattr__(self, "measures", mu[order])
        object.__setattr__(self, "values", val[order])

    @classmethod
    def from_entries(cls, entries) -> "LatticeFunction":
        entries = list(entries)
        if not entries:
            return cls.empty()
        ids, mu, val = zip(*entries)
        return cls(np.array(ids), np.array(mu), np.array(val))

    @classmethod
    def empty(cls) -> "LatticeFunction":
        return cls(np.zeros(0, np.int64), np.zeros(0), np.zeros(0))

    def __len__(self) -> int:
        return len(self.ids)

    def measure_of(self) -> dict[int, float]:
        return dict(zip(self.ids.tolist(), self.measures.tolist()))

    def value_at(self, cell_ids) -> np.ndarray:
        pos = np.searchsorted(self.ids, cell_ids)
        pos = np.minimum(pos, max(len(self.ids) - 1, 0))
        hit = (len(self.ids) > 0) & (self.ids[pos] == cell_ids) if len(self.ids) else np.zeros(len(cell_ids), bool)
        return np.where(hit, self.values[pos] if len(self.ids) else 0.0, 0.0)

    def __sub__(self, other: "LatticeFunction") -> "LatticeFunction":
        mu = self.measure_of()
        for k, m in other.measure_of().items():
            if k in mu and mu[k] != m:
                raise ValueError(f"cell {k} has measure {mu[k]} in one function and {m} in the other")
            mu[k] = m
        ids = np.array(sorted(mu), dtype=np.int64)
        return LatticeFunction(ids, np.array([mu[k] for k in ids.tolist()]),
                               self.value_at(ids) - other.value_at(ids))

    def scaled(self, c: float) -> "LatticeFunction":
        return LatticeFunction(self.ids, self.measures, c * self.values)

    def restricted(self, keep) -> "LatticeFunction":
        keep = np.asarray(keep, bool)
        return LatticeFunction(self.ids[keep], self.measures[keep], self.values[keep])


def lp_norm(f: LatticeFunction, p: float) -> float:
    if not p >= 1:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    return float(np.sum(f.measures * np.abs(f.values) ** p) ** (1.0 / p))


def _mass(f: LatticeFunction, p: float) -> np.ndarray:
    return f.measures * np.abs(f.values) ** p


# -- condition (a) ---------------------------------------------------------------

def _cells(seq) -> dict[int, float]:
    mu: dict[int, float] = {}
    for f in seq:
        for k, m in f.measure_of().items():
            if mu.setdefault(k, m) != m:
                raise ValueError(f"cell {k} carries inconsistent measures across the sequence")
    return mu


def _min_prefix(seq, p: float, epsilon: float, cells: np.ndarray) -> int:
    """Smallest ``K`` such that every member has tail mass ``< epsilon`` outside ``cells[:K]``."""
    need = 0
    for f in seq:
        if len(f) == 0:
            continue
        mass = _mass(f, p)
        pos = np.searchsorted(cells, f.ids)
        # tail[j] = mass of f on cells[j:], as a function of cut position j
        tail = np.zeros(len(cells) + 1)
        np.add.at(tail, pos, mass)
        tail = np.cumsum(tail[::-1])[::-1]
        ok = np.nonzero(tail < epsilon)[0]
        need = max(need, int(ok[0]))
    return need


@dataclass
class ConditionA:
    verdict: bool
    witness: np.ndarray  # cell ids of A_eps for the whole prefix
    measure: float
    half_prefix_measure: float
    epsilon: float

    def as_dict(self) -> dict:
        return {"verdict": self.verdict, "witness_cells": self.witness.tolist(), "measure": self.measure,
                "half_prefix_measure": self.half_prefix_measure, "epsilon": self.epsilon}


def check_condition_a(seq, p: float, epsilon: float, growth_tol: float = 0.1) -> ConditionA:
    """Finite-prefix test of uniform tail smallness.

    The witness is the shortest initial segment (in id order) of the cells
    seen so far outside of which every member has L^p mass ``< epsilon``.
    Condition (a) asks for one finite-measure set serving the whole
    sequence, so the verdict is "pass" when the witness for the full prefix
    is no larger than ``(1 + growth_tol)`` times the witness for the first
    half: a witness that keeps growing with the prefix has no finite limit.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    seq = list(seq)
    mu = _cells(seq)
    cells = np.array(sorted(mu), dtype=np.int64)
    meas = np.array([mu[k] for k in cells.tolist()])
    k_full = _min_prefix(seq, p, epsilon, cells)
    k_half = _min_prefix(seq[: max(1, len(seq) // 2)], p, epsilon, cells)
    m_full, m_half = float(meas[:k_full].sum()), float(meas[:k_half].sum())
    verdict = m_full <= (1.0 + growth_tol) * m_half + 1e-15
    return ConditionA(bool(verdict), cells[:k_full], m_full, m_half, epsilon)


# -- condition (b) ---------------------------------------------------------------

def _sup_greedy(f: LatticeFunction, p: float, threshold: float) -> tuple[float, float]:
    """(fractional supremum, pure-atom greedy value) of ``int_Y |f|^p`` over ``mu(Y) <= threshold``."""
    if len(f) == 0:
        return 0.0, 0.0
    dens = np.abs(f.values) ** p
    order = np.argsort(-dens, kind="stable")
    mu, d = f.measures[order], dens[order]
    frac, room = 0.0, threshold
    for m_i, d_i in zip(mu, d):
        take = min(m_i, room)
        frac += take * d_i
        room -= take
        if room <= 0:
            break
    atom, room = 0.0, threshold
    for m_i, d_i in zip(mu, d):
        if m_i <= room:
            atom += m_i * d_i
            room -= m_i
    return float(frac), float(atom)


def sup_mass_bruteforce(f: LatticeFunction, p: float, threshold: float) -> tuple[float, float]:
    """Exhaustive (fractional, atomic) suprema; exponential, intended for <= 15 cells.

    An optimal fractional set is a whole-cell subset plus part of at most one
    further cell, so enumerating subsets and the best partial cell is exact.
    """
    n = len(f)
    if n > 20:
        raise ValueError("brute force limited to 20 cells")
    mass, mu = _mass(f, p), f.measures
    dens = np.abs(f.values) ** p
    best_frac = best_atom = 0.0
    for r in range(n + 1):
        for sub in itertools.combinations(range(n), r):
            s = list(sub)
            used = mu[s].sum()
            if used > threshold:
                continue
            got = mass[s].sum()
            best_atom = max(best_atom, got)
            rest = np.setdiff1d(np.arange(n), s)
            extra = float(np.max(np.minimum(mu[rest], threshold - used) * dens[rest])) if len(rest) else 0.0
            best_frac = max(best_frac, got + extra)
    return float(best_frac), float(best_atom)


@dataclass
class ConditionB:
    verdict: bool
    sup: float
    sup_atomic: float
    worst_member: int
    threshold: float
    bound: float

    def as_dict(self) -> dict:
        return {"verdict": self.verdict, "sup": self.sup, "sup_atomic": self.sup_atomic,
                "worst_member": self.worst_member, "threshold": self.threshold, "bound": self.bound}


def check_condition_b(seq, p: float, mu_threshold: float, bound: float) -> ConditionB:
    """``max_m sup_{mu(Y) <= mu_threshold} int_Y |f_m|^p`` against ``bound``."""
    if not mu_threshold > 0:
        raise ValueError("mu_threshold must be positive")
    sups = [_sup_greedy(f, p, mu_threshold) for f in seq]
    if not sups:
        return ConditionB(True, 0.0, 0.0, -1, mu_threshold, bound)
    frac = np.array([s[0] for s in sups])
    w = int(np.argmax(frac))
    return ConditionB(bool(frac[w] < bound), float(frac[w]), float(max(s[1] for s in sups)), w,
                      mu_threshold, bound)


# -- verdict ---------------------------------------------------------------------

def _check_pointwise(seq, f_limit: LatticeFunction, tol: float) -> None:
    """Cells seen in the first half of the prefix (or in the limit) must have settled by the last member."""
    early = _cells(seq[: max(1, len(seq) // 2)])
    cells = np.array(sorted(set(early) | set(f_limit.ids.tolist())), dtype=np.int64)
    if len(cells) == 0:
        return
    gap = np.abs(seq[-1].value_at(cells) - f_limit.value_at(cells))
    scale = max(1.0, float(np.max(np.abs(f_limit.values), initial=0.0)))
    bad = np.nonzero(gap > tol * scale)[0]
    if len(bad):
        c = int(cells[bad[0]])
        raise PointwiseConvergenceError(
            f"no pointwise convergence at cell {c}: last member differs from the limit by {gap[bad[0]]:.3g}")


@dataclass
class VitaliReport:
    condition_a: list[ConditionA]
    condition_b: list[ConditionB]
    distances: np.ndarray
    oracle_tol: float

    @property
    def a_pass(self) -> bool:
        return all(c.verdict for c in self.condition_a)

    @property
    def b_pass(self) -> bool:
        return all(c.verdict for c in self.condition_b)

    @property
    def predicted(self) -> bool:
        return self.a_pass and self.b_pass

    @property
    def oracle_converges(self) -> bool:
        return bool(self.distances[-1] <= self.oracle_tol)

    @property
    def consistent(self) -> bool:
        return self.predicted == self.oracle_converges

    @property
    def decreasing_from(self) -> int | None:
        """First index after which oracle distances strictly decrease (or hit 0), if any."""
        d = self.distances
        for i in range(len(d) - 1):
            tail = d[i:]
            if np.all((np.diff(tail) < 0) | (tail[1:] == 0)):
                return i
        return None

    def as_dict(self) -> dict:
        return {
            "condition_a": self.a_pass,
            "condition_b": self.b_pass,
            "criterion_predicts_convergence": self.predicted,
            "oracle_converges": self.oracle_converges,
            "consistent": self.consistent,
            "oracle_distances": [float(x) for x in self.distances],
            "oracle_decreasing_from": self.decreasing_from,
            "details_a": [c.as_dict() for c in self.condition_a],
            "details_b": [c.as_dict() for c in self.condition_b],
        }


def vitali_verdict(seq, f_limit: LatticeFunction, p: float, eps_schedule=(0.5, 0.2, 0.1),
                   threshold_schedule=None, oracle_tol: float = 1e-2, pointwise_tol: float = 0.05) -> VitaliReport:
    """Criterion verdicts, direct oracle ``||f_m - f||_p`` and their agreement.

    Condition (b) at level ``eps`` uses the threshold paired with it
    (default ``eps**2``) and passes when the supremum stays below ``eps``.
    """
    seq = list(seq)
    if not seq:
        raise ValueError("empty sequence")
    eps_schedule = list(eps_schedule)
    thr = [e**2 for e in eps_schedule] if threshold_schedule is None else list(threshold_schedule)
    if len(thr) != len(eps_schedule):
        raise ValueError("epsilon and threshold schedules differ in length")
    _check_pointwise(seq, f_limit, pointwise_tol)
    ca = [check_condition_a(seq, p, e) for e in eps_schedule]
    cb = [check_condition_b(seq, p, d, e) for e, d in zip(eps_schedule, thr)]
    dist = np.array([lp_norm(f - f_limit, p) for f in seq])
    return VitaliReport(ca, cb, dist, oracle_tol)


@dataclass
class RadonRieszReport:
    norm_gaps: np.ndarray
    distances: np.ndarray
    hypothesis_met: bool
    conclusion_holds: bool
    correlation: float | None

    @property
    def ok(self) -> bool:
        return (not self.hypothesis_met) or self.conclusion_holds

    def as_dict(self) -> dict:
        return {"hypothesis_met": self.hypothesis_met, "conclusion_holds": self.conclusion_holds,
                "correlation": self.correlation, "ok": self.ok,
                "norm_gaps": self.norm_gaps.tolist(), "distances": self.distances.tolist()}


def radon_riesz_check(seq, f: LatticeFunction, p: float, tol: float = 1e-2) -> RadonRieszReport:
    """Norm convergence plus pointwise convergence should force L^p convergence."""
    seq = list(seq)
    nf = lp_norm(f, p)
    gaps = np.array([abs(lp_norm(g, p) - nf) for g in seq])
    dist = np.array([lp_norm(g - f, p) for g in seq])
    scale = max(nf, 1.0)
    hyp = bool(gaps[-1] <= tol * scale)
    concl = bool(dist[-1] <= tol * scale)
    corr = None
    if len(seq) > 2 and np.std(gaps) > 0 and np.std(dist) > 0:
        corr = float(np.corrcoef(gaps, dist)[0, 1])
    return RadonRieszReport(gaps, dist, hyp, concl, corr)


# -- bundled families --------------------------------------------------------------

def truncation_family(members: int = 40, p: float = 4.0, cells: int = 60):
    """``f_m = f * 1_{cells <= m}`` with ``f(k) = 2^-k`` on unit cells; converges in L^p."""
    k = np.arange(1, cells + 1)
    f = LatticeFunction(k, np.ones(cells), 2.0 ** -k.astype(float))
    seq = [f.restricted(k <= m) for m in range(1, members + 1)]
    return seq, f


def escaping_bump_family(members: int = 40, p: float = 4.0):
    """``f_m`` = indicator of unit cell ``m``; tends to 0 pointwise, not in L^p."""
    seq = [LatticeFunction(np.array([m]), np.ones(1), np.ones(1)) for m in range(1, members + 1)]
    return seq, LatticeFunction.empty()


def spike_family(members: int = 40, p: float = 4.0):
    """``f_m = 2^(m/p)`` on a cell of measure ``2^-m``; unit L^p mass concentrating on ever smaller sets.

    Dyadic cells keep the total measure finite, so only condition (b) fails.
    """
    seq = [LatticeFunction(np.array([m]), np.array([2.0**-m]), np.array([2.0 ** (m / p)]))
           for m in range(1, members + 1)]
    return seq, LatticeFunction.empty()


FAMILIES = {
    "truncation": truncation_family,
    "escaping_bump": escaping_bump_family,
    "spike": spike_family,
}


def load_family_csv(fname):
    """Read ``cell, measure, value, member`` rows; member ``limit`` (or ``-1``) gives the limit."""
    rows: dict[str, list] = {}
    with open(fname, newline="") as fh:
        for row in csv.DictReader(fh):
            key = row["member"].strip()
            key = "limit" if key in ("limit", "-1") else str(int(key))
            rows.setdefault(key, []).append((int(row["cell"]), float(row["measure"]), float(row["value"])))
    members = sorted((k for k in rows if k != "limit"), key=int)
    if not members:
        raise ValueError(f"{fname}: no sequence members")
    seq = [LatticeFunction.from_entries(rows[k]) for k in members]
    limit = LatticeFunction.from_entries(rows.get("limit", []))
    return seq, limit


def write_verdict_json(report: VitaliReport, fname, extra: dict | None = None) -> None:
    with open(fname, "w") as fh:
        json.dump({**report.as_dict(), **(extra or {})}, fh, indent=2, sort_keys=True)
