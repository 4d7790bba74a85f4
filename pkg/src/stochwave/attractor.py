"""Finite-sample pullback attractor: clouds, Hausdorff semidistance and convergence experiments."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import NoiseContext, State, System, evolve
from .energy import e_norm, path_radius
from .params import decay_rate_sigma

__all__ = [
    "StateCloud",
    "hausdorff_semidist",
    "sample_ball",
    "AttractorApprox",
    "approximate_attractor",
    "ConvergenceReport",
    "pullback_convergence_test",
    "InvarianceReport",
    "invariance_check",
    "AbsorbReport",
    "absorb_experiment",
]


@dataclass
class StateCloud:
    """Finite set of states (leading member axis) with one provenance record per member."""

    states: State
    provenance: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.provenance) not in (0, len(self)):
            raise ValueError("provenance must have one record per member")

    def __len__(self) -> int:
        return self.states.u.shape[0]

    @classmethod
    def from_states(cls, states: State, grid_ndim: int, **prov) -> "StateCloud":
        """Flatten every batch axis of ``states`` into the member axis."""
        shp = states.u.shape[: states.u.ndim - grid_ndim]
        flat = State(states.u.reshape((-1,) + states.u.shape[len(shp):]),
                     states.v.reshape((-1,) + states.v.shape[len(shp):]))
        recs = [dict(prov, member=list(ix)) for ix in np.ndindex(*shp)] if shp else [dict(prov, member=[])]
        return cls(flat, recs)

    @classmethod
    def concat(cls, clouds) -> "StateCloud":
        clouds = list(clouds)
        st = State(np.concatenate([c.states.u for c in clouds]), np.concatenate([c.states.v for c in clouds]))
        return cls(st, [r for c in clouds for r in c.provenance])

    def norms(self, system: System) -> np.ndarray:
        return np.asarray(e_norm(self.states, system))

    def save(self, fname) -> None:
        """Field archive: ``.npy`` array of shape ``(members, 2, *grid)``."""
        np.save(fname, np.stack([self.states.u, self.states.v], axis=1))

    def manifest(self, system: System) -> dict:
        return {
            "members": len(self),
            "provenance": self.provenance,
            "e_norms": [float(x) for x in self.norms(system)],
            "pairwise_distances": pairwise_distances(self, self, system).tolist(),
        }

    def write_manifest(self, fname, system: System, extra: dict | None = None) -> None:
        with open(fname, "w") as fh:
            json.dump({**self.manifest(system), **(extra or {})}, fh, indent=2, sort_keys=True)


def pairwise_distances(A: StateCloud, B: StateCloud, system: System, chunk: int = 64) -> np.ndarray:
    """``e_norm(a - b)`` for every pair; shape ``(len(A), len(B))``."""
    if len(A) == 0 or len(B) == 0:
        raise ValueError("clouds must be nonempty")
    if A.states.u.shape[1:] != B.states.u.shape[1:]:
        raise ValueError("clouds live on different grids")
    rows = []
    for s in range(0, len(A), chunk):
        a = A.states[s:s + chunk]
        diff = State(a.u[:, None] - B.states.u[None], a.v[:, None] - B.states.v[None])
        rows.append(np.asarray(e_norm(diff, system)))
    return np.concatenate(rows)


def hausdorff_semidist(A: StateCloud, B: StateCloud, system: System) -> float:
    """``max_{a in A} min_{b in B} e_norm(a - b)``; not symmetric."""
    return float(pairwise_distances(A, B, system).min(axis=1).max())


def _smooth_directions(system: System, rng: np.random.Generator, count: int, modes: int) -> State:
    grid = system.grid
    phase = [(c + grid.L) / (2 * grid.L) for c in grid.coords]
    basis = []
    for ks in np.ndindex(*([modes] * grid.n)):
        b = np.ones(grid.shape)
        for k, ph in zip(ks, phase):
            b = b * np.sin((k + 1) * np.pi * ph)
        basis.append(b / np.prod(np.array(ks) + 1.0))
    basis = np.stack(basis)
    cu = rng.standard_normal((count, len(basis)))
    cv = rng.standard_normal((count, len(basis)))
    u = np.tensordot(cu, basis, axes=1)
    v = np.tensordot(cv, basis, axes=1)
    return State(u, v)


def sample_ball(system: System, radius, count: int, rng: np.random.Generator, modes: int = 8) -> State:
    """Random smooth states with E-norms stratified over ``(0, radius]``.

    Directions are random combinations of the first ``modes`` sine modes per
    axis; member ``i`` is rescaled to norm ``radius * (i + U_i) / count``.
    The E-norm is positively 1-homogeneous, so rescaling is exact.
    """
    d = _smooth_directions(system, rng, count, modes)
    target = np.asarray(radius, float)[..., None] * (np.arange(count) + rng.uniform(0.5, 1.0, count)) / count
    scale = target / np.asarray(e_norm(d, system))
    ex = (...,) + (None,) * system.grid.n
    return State(scale[ex] * d.u, scale[ex] * d.v)


# -- attractor approximation -------------------------------------------------------

def _pull_all(init: State, ctx: NoiseContext, system: System, depths, base: float, dt) -> list[State]:
    return [evolve(init, base - T, base, ctx, system, dt, record_every=None).final for T in depths]


@dataclass
class AttractorApprox:
    cloud: StateCloud
    stages: list  # StateCloud per pullback time
    times: np.ndarray
    stage_gaps: np.ndarray  # dist(stage_i, stage_{i-1}) for i >= 1

    def as_dict(self) -> dict:
        return {"pullback_times": self.times.tolist(), "stage_gaps": self.stage_gaps.tolist(),
                "cloud_size": len(self.cloud)}


def approximate_attractor(ctx: NoiseContext, system: System, init: State, pullback_times,
                          dt: float | None = None, keep_last: int | None = None,
                          base: float = 0.0, seed=None) -> AttractorApprox:
    """Cloud ``{Phi(T_i, theta_{-T_i} omega, x_j)}`` at ``base`` plus inter-stage semidistances.

    ``keep_last`` restricts the returned cloud to the deepest stages (the
    finite stand-in for the nested intersection); all stages are kept in
    ``stages`` regardless.
    """
    T = np.asarray(pullback_times, dtype=float)
    if T.ndim != 1 or len(T) == 0 or np.any(np.diff(T) <= 0) or T[0] < 0:
        raise ValueError("pullback times must be nonnegative and increasing")
    finals = _pull_all(init, ctx, system, T, base, dt)
    stages = [StateCloud.from_states(s, system.grid.n, seed=seed, pullback_time=float(t))
              for s, t in zip(finals, T)]
    gaps = np.array([hausdorff_semidist(stages[i], stages[i - 1], system) for i in range(1, len(stages))])
    k = len(stages) if keep_last is None else keep_last
    return AttractorApprox(StateCloud.concat(stages[-k:]), stages, T, gaps)


@dataclass
class ConvergenceReport:
    times: np.ndarray
    differences: np.ndarray  # (len(times) - 1, *batch)
    benchmark: float  # e^{-sigma * mean spacing}
    fitted_rate: np.ndarray | None  # per mean spacing, per member
    terminal_spread: float | None

    @property
    def insufficient(self) -> bool:
        return self.differences.shape[0] < 2

    @property
    def strictly_decreasing(self) -> np.ndarray:
        return np.all(np.diff(self.differences, axis=0) < 0, axis=0)

    def rate_ok(self, slack: float = 0.1) -> bool:
        return (not self.insufficient) and bool(np.all(self.fitted_rate <= self.benchmark * (1 + slack)))

    def as_dict(self, slack: float = 0.1) -> dict:
        d = self.differences.reshape(self.differences.shape[0], -1)
        return {
            "times": self.times.tolist(),
            "insufficient_data": self.insufficient,
            "differences": d.tolist(),
            "benchmark_rate": self.benchmark,
            "fitted_rate": None if self.fitted_rate is None else np.ravel(self.fitted_rate).tolist(),
            "rate_within_benchmark": self.rate_ok(slack),
            "strictly_decreasing_fraction": float(np.mean(self.strictly_decreasing)) if not self.insufficient else None,
            "terminal_spread": self.terminal_spread,
        }


def pullback_convergence_test(ctx: NoiseContext, system: System, init: State, t_schedule,
                              dt: float | None = None, member_axis: int | None = None) -> ConvergenceReport:
    """Consecutive pullback differences ``e_norm(Phi(t_{i+1}) - Phi(t_i))`` and their geometric fit.

    ``member_axis`` names the batch axis that indexes distinct initial states;
    the spread of terminal states along it is reported for comparison with
    the last Cauchy gap.
    """
    t = np.asarray(t_schedule, dtype=float)
    if t.ndim != 1 or len(t) == 0 or np.any(np.diff(t) <= 0):
        raise ValueError("t schedule must be nonempty and increasing")
    sigma = decay_rate_sigma(system.params)
    finals = _pull_all(init, ctx, system, t, 0.0, dt)
    diffs = np.array([np.asarray(e_norm(finals[i + 1] - finals[i], system)) for i in range(len(t) - 1)])
    spacing = float(np.mean(np.diff(t))) if len(t) > 1 else 0.0
    bench = float(np.exp(-sigma * spacing))
    rate = None
    if len(diffs) >= 2:
        x = t[:-1]
        y = np.log(np.maximum(diffs, np.finfo(float).tiny)).reshape(len(diffs), -1)
        slope = np.polyfit(x - x.mean(), y, 1)[0]
        rate = np.exp(slope * spacing).reshape(diffs.shape[1:])
    spread = None
    if member_axis is not None:
        last = finals[-1]
        ax = member_axis % (last.u.ndim - system.grid.n)
        n = last.u.shape[ax]
        pairs = [np.asarray(e_norm(State(np.take(last.u, i, ax) - np.take(last.u, j, ax),
                                         np.take(last.v, i, ax) - np.take(last.v, j, ax)), system))
                 for i in range(n) for j in range(i + 1, n)]
        spread = float(np.max(pairs)) if pairs else 0.0
    return ConvergenceReport(t, diffs.reshape((len(t) - 1,) + np.shape(diffs)[1:]), bench, rate, spread)


@dataclass
class InvarianceReport:
    t: float
    pushed_to_shifted: float
    shifted_to_pushed: float
    cauchy_gap: float
    dist_to_zero: float
    factor: float = 3.0
    atol: float = 1e-10

    @property
    def ok(self) -> bool:
        lim = self.factor * self.cauchy_gap + self.atol
        return self.pushed_to_shifted <= lim and self.shifted_to_pushed <= lim

    def as_dict(self) -> dict:
        return {"t": self.t, "pushed_to_shifted": self.pushed_to_shifted,
                "shifted_to_pushed": self.shifted_to_pushed, "cauchy_gap": self.cauchy_gap,
                "dist_to_zero": self.dist_to_zero, "factor": self.factor, "ok": self.ok}


def invariance_check(ctx: NoiseContext, system: System, init: State, pullback_times, t: float,
                     dt: float | None = None, keep_last: int = 2, factor: float = 3.0) -> InvarianceReport:
    """Push the cloud at ``omega`` forward by ``t`` and compare with the cloud built at ``theta_t omega``.

    Both clouds keep their ``keep_last`` deepest stages; the tolerance is
    ``factor`` times the largest symmetric Hausdorff distance between
    consecutive kept stages of either cloud.
    """
    here = approximate_attractor(ctx, system, init, pullback_times, dt, keep_last)
    there = approximate_attractor(ctx, system, init, pullback_times, dt, keep_last, base=t)
    if t:
        pushed_states = evolve(here.cloud.states, 0.0, t, ctx, system, dt, record_every=None).final
    else:
        pushed_states = here.cloud.states
    pushed = StateCloud(pushed_states, here.cloud.provenance)
    gaps = [max(hausdorff_semidist(a.stages[i], a.stages[i - 1], system),
                hausdorff_semidist(a.stages[i - 1], a.stages[i], system))
            for a in (here, there) for i in range(len(a.stages) - keep_last + 1, len(a.stages))]
    gap = float(max(gaps)) if gaps else 0.0
    zero = StateCloud(State.zeros(system.grid, (1,)))
    return InvarianceReport(
        float(t),
        hausdorff_semidist(pushed, there.cloud, system),
        hausdorff_semidist(there.cloud, pushed, system),
        gap,
        hausdorff_semidist(pushed, zero, system),
        factor,
    )


@dataclass
class AbsorbReport:
    radius: np.ndarray  # R(omega) per path
    initial_norms: np.ndarray  # (*paths, members)
    final_norms: np.ndarray
    horizon: float

    @property
    def entered(self) -> np.ndarray:
        return self.final_norms <= self.radius[..., None]

    @property
    def ok(self) -> bool:
        return bool(np.all(self.entered))

    def as_dict(self) -> dict:
        return {"horizon": self.horizon, "radius": np.ravel(self.radius).tolist(),
                "max_initial_over_radius": float(np.max(self.initial_norms / self.radius[..., None])),
                "max_final_over_radius": float(np.max(self.final_norms / self.radius[..., None])),
                "all_entered": self.ok}


def absorb_experiment(ctx: NoiseContext, system: System, horizon: float, members: int,
                      rng: np.random.Generator, scale: float = 10.0, dt: float | None = None) -> AbsorbReport:
    """Pull back ``members`` states per path, E-norms stratified up to ``scale * R(omega)``.

    ``ctx`` holds a batch of paths along its leading axis (or a single path).
    """
    R = np.atleast_1d(path_radius(ctx, system))
    init = sample_ball(system, scale * R, members, rng)
    z = ctx.z if ctx.z.ndim > 2 else ctx.z[None]
    ctx_b = NoiseContext(ctx.t_min, ctx.dt, ctx.n_steps, z[:, None], ctx.paths)
    end = evolve(init, -horizon, 0.0, ctx_b, system, dt, record_every=None).final
    return AbsorbReport(R, np.asarray(e_norm(init, system)), np.asarray(e_norm(end, system)), float(horizon))
