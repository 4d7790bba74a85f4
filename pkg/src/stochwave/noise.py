"""Two-sided Wiener paths, exact Ornstein-Uhlenbeck sampling and noise profiles."""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, GridMismatch

__all__ = [
    "NoisePath",
    "OuState",
    "OuTrajectory",
    "NoiseProfile",
    "sample_path",
    "ou_step",
    "ou_trajectory",
    "z_field",
    "estimate_r0",
    "member_seed",
    "default_profile",
    "save_path",
    "load_path",
    "write_path_csv",
]

_HEADER = struct.Struct("<qdddq")  # seed, t_min, t_max, dt, m


def member_seed(master: int, index: int) -> int:
    """Per-member seed: first 63 bits of ``SeedSequence(master, spawn_key=(index,))``.

    Counter-based, so member ``i`` gets the same seed however the ensemble
    is scheduled or chunked.
    """
    ss = np.random.SeedSequence(master, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _grid_index(t: float, t0: float, dt: float) -> int:
    k = round((t - t0) / dt)
    if abs(t0 + k * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"time {t} is not on the path grid (t0={t0}, dt={dt})")
    return int(k)


@dataclass(frozen=True)
class NoisePath:
    """Brownian increments of ``m`` independent two-sided Wiener processes.

    ``increments[j, k]`` is ``W_j(t_k + dt) - W_j(t_k)`` with
    ``t_k = t_min + k*dt``; the path is anchored by ``W_j(0) = 0``.
    """

    seed: int
    t_min: float
    t_max: float
    dt: float
    increments: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (self.t_min <= 0 <= self.t_max):
            raise ValueError(f"need t_min <= 0 <= t_max, got [{self.t_min}, {self.t_max}]")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        n = _grid_index(self.t_max, self.t_min, self.dt)
        _grid_index(0.0, self.t_min, self.dt)
        if self.increments.ndim != 2 or self.increments.shape[1] != n:
            raise ValueError(f"increments must have shape (m, {n}), got {self.increments.shape}")

    @property
    def m(self) -> int:
        return self.increments.shape[0]

    @property
    def n_steps(self) -> int:
        return self.increments.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t_min + np.arange(self.n_steps + 1) * self.dt

    def index(self, t: float) -> int:
        """Position of time ``t`` on the path grid (error if off-grid or outside)."""
        k = _grid_index(t, self.t_min, self.dt)
        if not 0 <= k <= self.n_steps:
            raise ValueError(f"time {t} outside path support [{self.t_min}, {self.t_max}]")
        return k

    def covers(self, t0: float, t1: float) -> bool:
        return self.t_min - 1e-12 <= t0 and t1 <= self.t_max + 1e-12

    @property
    def W(self) -> np.ndarray:
        """Path values on :attr:`times`, shape ``(m, n_steps + 1)``, zero at t = 0."""
        w = np.concatenate([np.zeros((self.m, 1)), np.cumsum(self.increments, axis=1)], axis=1)
        return w - w[:, [self.index(0.0)]]

    @property
    def init_draw(self) -> np.ndarray:
        """Standard-normal draws for the stationary OU start at ``t_min``."""
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(2,)))
        return rng.standard_normal(self.m)

    def shift(self, s: float) -> "NoisePath":
        """The shifted path ``theta_s omega``: same increments, time origin moved to ``s``."""
        _grid_index(s, self.t_min, self.dt)
        return NoisePath(self.seed, self.t_min - s, self.t_max - s, self.dt, self.increments)


def sample_path(seed: int, t_min: float, t_max: float, dt: float, m: int = 1) -> NoisePath:
    """Sample a two-sided path on ``[t_min, t_max]``.

    The positive and negative half-lines come from independent child
    streams of ``seed`` and are generated outward from ``t = 0``, so a longer
    horizon extends a shorter one without changing it.
    """
    if t_min > 0 or t_max < 0:
        raise ValueError(f"need t_min <= 0 <= t_max, got [{t_min}, {t_max}]")
    if not dt > 0:
        raise ValueError("dt must be positive")
    n_neg = _grid_index(0.0, t_min, dt)
    n_pos = _grid_index(t_max, 0.0, dt)
    pos_ss, neg_ss = np.random.SeedSequence(seed).spawn(2)
    sq = math.sqrt(dt)
    pos = np.random.default_rng(pos_ss).standard_normal((n_pos, m)).T * sq
    neg = np.random.default_rng(neg_ss).standard_normal((n_neg, m)).T * sq
    inc = np.concatenate([neg[:, ::-1], pos], axis=1)
    return NoisePath(int(seed), float(t_min), float(t_max), float(dt), np.ascontiguousarray(inc))


def ou_step(z, delta: float, dt: float, xi):
    """Exact transition of ``dz + delta z dt = dW`` over a step ``dt``."""
    decay = math.exp(-delta * dt)
    scale = math.sqrt(-math.expm1(-2.0 * delta * dt) / (2.0 * delta))
    return decay * np.asarray(z) + scale * np.asarray(xi)


@dataclass(frozen=True)
class OuState:
    t: float
    z: np.ndarray
    delta: float


@dataclass(frozen=True)
class OuTrajectory:
    """OU coordinates ``z_j(theta_t omega)``; ``z`` has shape ``(..., m, len(times))``."""

    times: np.ndarray
    z: np.ndarray
    delta: float

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, k: int) -> OuState:
        return OuState(float(self.times[k]), self.z[..., k], self.delta)


def _ou_on_path(path: NoisePath, delta: float, z0=None) -> np.ndarray:
    z = np.empty((path.m, path.n_steps + 1))
    z[:, 0] = path.init_draw / math.sqrt(2.0 * delta) if z0 is None else z0
    decay = math.exp(-delta * path.dt)
    scale = math.sqrt(-math.expm1(-2.0 * delta * path.dt) / (2.0 * delta)) / math.sqrt(path.dt)
    for k in range(path.n_steps):
        z[:, k + 1] = decay * z[:, k] + scale * path.increments[:, k]
    return z


def ou_trajectory(path: NoisePath, delta: float, t_grid=None, z0=None) -> OuTrajectory:
    """OU coordinates along ``path`` sampled at ``t_grid`` (default: every path time).

    The process starts at ``t_min`` from the stationary law ``N(0, 1/(2 delta))``
    (or from ``z0`` if given) and advances with :func:`ou_step`, using
    ``increment / sqrt(dt)`` as the standard-normal draw.
    """
    z = _ou_on_path(path, delta, z0)
    if t_grid is None:
        return OuTrajectory(path.times, z, delta)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be increasing")
    idx = [path.index(t) for t in t_grid]
    return OuTrajectory(t_grid.copy(), z[:, idx], delta)


@dataclass(frozen=True)
class NoiseProfile:
    """Spatial shapes ``h_j`` of the noise modes, array of shape ``(m, *grid.shape)``."""

    grid: Grid
    h: np.ndarray

    def __post_init__(self):
        if self.h.shape[1:] != self.grid.shape:
            raise GridMismatch(f"profile shape {self.h.shape} does not match grid {self.grid.shape}")

    @property
    def m(self) -> int:
        return self.h.shape[0]

    @property
    def l2(self) -> np.ndarray:
        return np.array([self.grid.norm_l2(hj) for hj in self.h])

    @property
    def h1_semi(self) -> np.ndarray:
        return np.sqrt([self.grid.grad_sq_norm(hj) for hj in self.h])

    def lp(self, p: float) -> np.ndarray:
        return np.array([self.grid.norm_lp(hj, p) for hj in self.h])

    def field(self, z) -> np.ndarray:
        """``sum_j h_j z_j`` for ``z`` of shape ``(..., m)``."""
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.m:
            raise ValueError(f"expected {self.m} OU coordinates, got shape {z.shape}")
        return np.tensordot(z, self.h, axes=([-1], [0]))


def bump(grid: Grid, radius: float = 2.0, amplitude: float = 1.0) -> np.ndarray:
    """Compactly supported ``amplitude * (1 - |x|^2/radius^2)^4`` (C^3)."""
    s = np.clip(1.0 - grid.radius**2 / radius**2, 0.0, None)
    return amplitude * s**4


def default_profile(grid: Grid, m: int = 1, kind: str = "gaussian", radius: float = 2.0) -> NoiseProfile:
    """``gaussian``: every mode ``exp(-|x|^2)``; ``bump``: every mode a radius-``radius`` bump.

    Modes beyond the first are shifted copies so that they are distinct.
    """
    hs = []
    for j in range(m):
        if kind == "gaussian":
            shift = 0.5 * j
            hs.append(np.exp(-((grid.coords[0] - shift) ** 2 + sum(c**2 for c in grid.coords[1:]))))
        elif kind == "bump":
            hs.append(bump(grid, radius) * (1.0 - 0.25 * j))
        else:
            raise ValueError(f"unknown profile kind {kind!r}")
    return NoiseProfile(grid, np.stack(hs))


def z_field(profile: NoiseProfile, ou: OuState) -> np.ndarray:
    return profile.field(ou.z)


def estimate_r0(traj: OuTrajectory, sigma: float, p: float):
    """Sampled tempered bound: ``max_t exp(-sigma|t|/2) * sum_j(|z_j|^2 + |z_j|^p)``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    az = np.abs(traj.z)
    s = np.sum(az**2 + az**p, axis=-2)
    return np.max(np.exp(-0.5 * sigma * np.abs(traj.times)) * s, axis=-1)


def save_path(path: NoisePath, fname) -> None:
    """Binary dump: header (seed, t_min, t_max, dt, m) then little-endian float64 increments."""
    with open(fname, "wb") as fh:
        fh.write(_HEADER.pack(path.seed, path.t_min, path.t_max, path.dt, path.m))
        fh.write(np.ascontiguousarray(path.increments, dtype="<f8").tobytes())


def load_path(fname) -> NoisePath:
    with open(fname, "rb") as fh:
        seed, t_min, t_max, dt, m = _HEADER.unpack(fh.read(_HEADER.size))
        body = np.frombuffer(fh.read(), dtype="<f8")
    n = _grid_index(t_max, t_min, dt)
    if body.size != m * n:
        raise ValueError(f"noise file body has {body.size} values, expected {m * n}")
    return NoisePath(seed, t_min, t_max, dt, body.reshape(m, n).astype(float))


def write_path_csv(path: NoisePath, fname) -> None:
    W = path.W
    with open(fname, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"W{j + 1}" for j in range(path.m)])
        for k, t in enumerate(path.times):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in W[:, k]])
