"""Transformed pathwise system, RK4 stepping, semiflow, cocycle and pullback.

With ``xi = u_t + delta*u`` and ``v = xi - eps*z(theta_t omega)`` the
stochastic wave equation becomes the random PDE

    u_t = v + eps*z - delta*u
    v_t = delta*v - (delta^2 + alpha)*u + lap(u) - f(u) + g
          - beta*(v + eps*z - delta*u) + 2*eps*delta*z

which is integrated pathwise with classical RK4, the OU field ``z`` being
known exactly at every stage time.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, GridMismatch
from .noise import NoisePath, NoiseProfile, _ou_on_path, default_profile
from .nonlin import Nonlinearity
from .params import Params, validate

__all__ = [
    "State",
    "Forcing",
    "System",
    "NoiseContext",
    "Trajectory",
    "SimulationError",
    "stiff_dt",
    "CFLError",
    "transform_initial",
    "recover_physical",
    "rhs",
    "step",
    "evolve",
    "pullback",
    "cocycle",
]

CFL_DEFAULT = 0.5
_FINITE_CHECK_EVERY = 32
# RK4 stays stable up to |lambda dt| ~ 2.8 on the imaginary axis; energy moving
# into larger amplitudes later in a run needs headroom
STIFF_LIMIT = 1.5


class SimulationError(RuntimeError):
    pass


class CFLError(ValueError):
    pass


@dataclass(frozen=True)
class State:
    """Phase-space point ``(u, v)``; arrays may carry leading batch axes."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if np.shape(self.u) != np.shape(self.v):
            raise GridMismatch(f"u {np.shape(self.u)} and v {np.shape(self.v)} differ in shape")

    def __add__(self, other: "State") -> "State":
        return State(self.u + other.u, self.v + other.v)

    def __sub__(self, other: "State") -> "State":
        return State(self.u - other.u, self.v - other.v)

    def __mul__(self, c) -> "State":
        return State(c * self.u, c * self.v)

    __rmul__ = __mul__

    def __getitem__(self, idx) -> "State":
        return State(self.u[idx], self.v[idx])

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return np.shape(self.u)

    @classmethod
    def zeros(cls, grid: Grid, batch=()) -> "State":
        return cls(grid.zeros(batch), grid.zeros(batch))

    @classmethod
    def stack(cls, states) -> "State":
        states = list(states)
        return cls(np.stack([s.u for s in states]), np.stack([s.v for s in states]))


@dataclass(frozen=True)
class Forcing:
    """Deterministic forcing ``g`` (``None`` means zero) and the noise profile ``h_j``."""

    profile: NoiseProfile
    g: np.ndarray | None = None

    @property
    def g_field(self):
        return 0.0 if self.g is None else self.g


@dataclass(frozen=True)
class System:
    """Everything the right-hand side needs besides the state and the noise values."""

    params: Params
    grid: Grid
    nl: Nonlinearity
    forcing: Forcing
    cfl: float = CFL_DEFAULT

    @classmethod
    def default(cls, params: Params | None = None, grid: Grid | None = None,
                nl: Nonlinearity | None = None, g=None, profile_kind: str = "gaussian") -> "System":
        params = params or Params()
        grid = grid or Grid()
        nl = nl or Nonlinearity(params.p)
        return cls(params, grid, nl, Forcing(default_profile(grid, params.m, profile_kind), g))

    def __post_init__(self):
        if self.forcing.profile.grid != self.grid:
            raise GridMismatch("noise profile lives on a different grid")
        if self.forcing.g is not None:
            self.grid.check(self.forcing.g)

    def max_dt(self) -> float:
        return self.cfl * self.grid.h


@dataclass(frozen=True)
class NoiseContext:
    """OU values along one path (or a batch of aligned paths) on the path grid.

    ``z`` has shape ``(*batch, m, n_steps + 1)``; the batch axes broadcast
    against the state's batch axes.
    """

    t_min: float
    dt: float
    n_steps: int
    z: np.ndarray
    paths: tuple = field(default=(), repr=False)

    @classmethod
    def from_path(cls, path: NoisePath, delta: float) -> "NoiseContext":
        return cls(path.t_min, path.dt, path.n_steps, _ou_on_path(path, delta), (path,))

    @classmethod
    def from_paths(cls, paths, delta: float) -> "NoiseContext":
        """Stack aligned paths along a new leading batch axis."""
        paths = list(paths)
        p0 = paths[0]
        for p in paths[1:]:
            if (p.t_min, p.dt, p.n_steps) != (p0.t_min, p0.dt, p0.n_steps):
                raise ValueError("paths in an ensemble must share t_min, dt and length")
        z = np.stack([_ou_on_path(p, delta) for p in paths])
        return cls(p0.t_min, p0.dt, p0.n_steps, z, tuple(paths))

    @classmethod
    def silent(cls, t_min: float, t_max: float, dt: float, m: int = 1) -> "NoiseContext":
        """Identically zero noise on ``[t_min, t_max]``."""
        n = int(round((t_max - t_min) / dt))
        return cls(t_min, dt, n, np.zeros((m, n + 1)))

    @property
    def t_max(self) -> float:
        return self.t_min + self.n_steps * self.dt

    def index(self, t: float) -> int:
        k = int(round((t - self.t_min) / self.dt))
        if abs(self.t_min + k * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not on the noise grid (t_min={self.t_min}, dt={self.dt})")
        if not 0 <= k <= self.n_steps:
            raise SimulationError(f"time {t} outside noise support [{self.t_min}, {self.t_max}]")
        return k

    def time(self, k: int) -> float:
        return self.t_min + k * self.dt

    def zvals(self, k: int) -> np.ndarray:
        return self.z[..., k]

    def field(self, profile: NoiseProfile, k: int) -> np.ndarray:
        return profile.field(self.z[..., k])


def transform_initial(u0, u1, params: Params, eps_z_tau) -> State:
    """``(u0, u1)`` in physical variables to ``(u0, u1 + delta*u0 - eps*z(tau))``."""
    u0, u1 = np.asarray(u0, float), np.asarray(u1, float)
    if u0.shape != u1.shape:
        raise GridMismatch("u0 and u1 differ in shape")
    return State(u0.copy(), u1 + params.delta * u0 - eps_z_tau)


def recover_physical(state: State, eps: float, z_now, delta: float):
    """Return ``(u, u_t)`` with ``u_t = v + eps*z - delta*u``."""
    return state.u, state.v + eps * np.asarray(z_now) - delta * state.u


def rhs(state: State, z_now, system: System) -> State:
    """Time derivative of the transformed system at one instant."""
    p = system.params
    u, v = state.u, state.v
    ez = p.epsilon * z_now
    ut = v + ez - p.delta * u
    vt = (p.delta * v - (p.delta**2 + p.alpha) * u + system.grid.laplacian(u)
          - system.nl.f(u) + system.forcing.g_field - p.beta * ut + 2.0 * p.delta * ez)
    return State(ut, vt)


def _z_stage(ctx: NoiseContext, system: System, k: int):
    if system.params.epsilon == 0:
        return 0.0
    return ctx.field(system.forcing.profile, k)


def _steps_per_dt(ctx: NoiseContext, dt: float) -> int:
    q2 = dt / ctx.dt
    q = int(round(q2))
    if q < 2 or q % 2 or abs(q - q2) > 1e-9 * q2:
        raise ValueError(f"step {dt} must be an even multiple of the noise resolution {ctx.dt}")
    return q


def _check_cfl(system: System, dt: float) -> None:
    if dt > system.max_dt() * (1 + 1e-12):
        raise CFLError(f"dt={dt} exceeds the stability bound {system.cfl}*h = {system.max_dt()}")


def stiff_dt(state: State, system: System) -> float:
    """Largest step keeping ``dt * omega_max`` at :data:`STIFF_LIMIT` for the given state.

    ``omega_max^2 = 4n/h^2 + alpha + max f'(u)`` bounds the linearised frequencies.
    Without a nonlinear contribution the CFL check alone applies and this is infinite.
    """
    p, g = system.params, system.grid
    if system.nl.kind != "canonical" or not np.size(state.u):
        return np.inf
    fp = (system.nl.p - 1.0) * float(np.max(np.abs(state.u))) ** (system.nl.p - 2.0)
    if fp == 0.0:
        return np.inf
    return STIFF_LIMIT / float(np.sqrt(4.0 * g.n / g.h**2 + p.alpha + fp))


def _rk4(state: State, k: int, q: int, dt: float, ctx: NoiseContext, system: System) -> State:
    z0 = _z_stage(ctx, system, k)
    zh = _z_stage(ctx, system, k + q // 2)
    z1 = _z_stage(ctx, system, k + q)
    k1 = rhs(state, z0, system)
    k2 = rhs(state + k1 * (0.5 * dt), zh, system)
    k3 = rhs(state + k2 * (0.5 * dt), zh, system)
    k4 = rhs(state + k3 * dt, z1, system)
    return State(
        state.u + (dt / 6.0) * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
        state.v + (dt / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
    )


def step(state: State, t: float, dt: float, ctx: NoiseContext, system: System) -> State:
    """One RK4 step from ``t`` to ``t + dt``; noise sampled at ``t``, ``t + dt/2``, ``t + dt``."""
    _check_cfl(system, dt)
    q = _steps_per_dt(ctx, dt)
    k = ctx.index(t)
    ctx.index(t + dt)
    return _rk4(state, k, q, dt, ctx, system)


@dataclass(frozen=True)
class Trajectory:
    """Recorded snapshots: ``u[i]``, ``v[i]`` at ``times[i]`` (noise-grid index ``index[i]``)."""

    times: np.ndarray
    index: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, i) -> State:
        return State(self.u[i], self.v[i])

    @property
    def final(self) -> State:
        return self[-1]


def evolve(state: State, tau: float, t: float, ctx: NoiseContext, system: System,
           dt: float | None = None, record_every: int | None = 1) -> Trajectory:
    """Semiflow ``S(t, tau; omega)`` applied to ``state``.

    ``dt`` defaults to twice the noise resolution.  Snapshots are kept every
    ``record_every`` steps plus the endpoints; ``record_every=None`` keeps
    only the endpoints.
    """
    if tau > t:
        raise ValueError(f"evolve needs tau <= t, got tau={tau}, t={t}")
    if ctx.t_min > tau + 1e-12 or ctx.t_max < t - 1e-12:
        raise SimulationError(f"noise path covers [{ctx.t_min}, {ctx.t_max}], need [{tau}, {t}]")
    dt = 2.0 * ctx.dt if dt is None else dt
    _check_cfl(system, dt)
    if dt > stiff_dt(state, system):
        raise SimulationError(f"dt={dt} too large for the initial amplitude; "
                              f"need dt <= {stiff_dt(state, system):.3g}")
    q = _steps_per_dt(ctx, dt)
    k0, k1 = ctx.index(tau), ctx.index(t)
    if (k1 - k0) % q:
        raise ValueError(f"[{tau}, {t}] is not a whole number of steps of size {dt}")
    nsteps = (k1 - k0) // q
    idx, us, vs = [k0], [state.u], [state.v]
    for i in range(nsteps):
        k = k0 + i * q
        with np.errstate(over="ignore", invalid="ignore"):
            state = _rk4(state, k, q, dt, ctx, system)
        last = i == nsteps - 1
        keep = last or (record_every and (i + 1) % record_every == 0)
        if keep or (i + 1) % _FINITE_CHECK_EVERY == 0:
            if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.v))):
                raise SimulationError(f"non-finite state at t={ctx.time(k + q)}; reduce dt")
        if keep:
            idx.append(k + q)
            us.append(state.u)
            vs.append(state.v)
    index = np.array(idx)
    # the initial state may lack batch axes that the noise adds after one step
    shape = np.broadcast_shapes(*(a.shape for a in us))
    us = [np.broadcast_to(a, shape) for a in us]
    vs = [np.broadcast_to(a, shape) for a in vs]
    return Trajectory(ctx.t_min + index * ctx.dt, index, np.stack(us), np.stack(vs))


def pullback(t_back: float, ctx: NoiseContext, g0: State, system: System, dt: float | None = None) -> State:
    """Pullback quasi-trajectory ``Phi(t_back, theta_{-t_back} omega, g0)``: evolve from ``-t_back`` to 0."""
    if t_back < 0:
        raise ValueError("t_back must be nonnegative")
    return evolve(g0, -t_back, 0.0, ctx, system, dt, record_every=None).final


def cocycle(t: float, base: float, ctx: NoiseContext, x: State, system: System, dt: float | None = None) -> State:
    """``Phi(t, theta_base omega, x) = S(base + t, base; omega) x``."""
    return evolve(x, base, base + t, ctx, system, dt, record_every=None).final


def admissible(system: System) -> list[str]:
    """Configuration problems that should stop a run before it starts."""
    out = list(validate(system.params))
    if system.nl.p != system.params.p:
        out.append(f"nonlinearity exponent {system.nl.p} != params.p {system.params.p}")
    elif system.nl.kind == "canonical":
        got = (system.params.c1, system.params.c2, system.params.c3)
        if not np.allclose(got, system.nl.constants, rtol=1e-12):
            out.append(f"(c1, c2, c3) = {got} but the canonical nonlinearity has {system.nl.constants}")
    if system.forcing.profile.m != system.params.m:
        out.append(f"profile has {system.forcing.profile.m} modes, params.m = {system.params.m}")
    return out
