"""Truncated cell-centred lattice on [-L, L]^n with zero Dirichlet ghosts.

Grid functions ("fields") are plain numpy arrays whose trailing ``n`` axes
have shape ``grid.shape``; any leading axes are treated as a batch, so one
call can act on a whole ensemble.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["Grid", "GridMismatch", "cutoff_rho", "tail_mask", "write_field_csv"]


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    n: int = 1
    L: float = 8.0
    N: int = 256

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"only n in {{1, 2}} is supported, got n={self.n}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"L must be positive and finite, got {self.L}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    @cached_property
    def axis(self) -> np.ndarray:
        """Cell-centre coordinates along one axis."""
        return -self.L + (np.arange(self.N) + 0.5) * self.h

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.n), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        """``|x|`` at every cell centre."""
        return np.sqrt(sum(c**2 for c in self.coords))

    def zeros(self, batch: tuple[int, ...] = ()) -> np.ndarray:
        return np.zeros(tuple(batch) + self.shape)

    def check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape[f.ndim - self.n:] != self.shape or f.ndim < self.n:
            raise GridMismatch(f"field shape {f.shape} does not end with grid shape {self.shape}")
        return f

    def _axes(self, f: np.ndarray) -> tuple[int, ...]:
        return tuple(range(f.ndim - self.n, f.ndim))

    def _links(self, f: np.ndarray, ax: int) -> np.ndarray:
        # forward differences over N+1 links, zero ghost on each side
        pad = [(0, 0)] * f.ndim
        pad[ax] = (1, 1)
        return np.diff(np.pad(f, pad), axis=ax) / self.h

    # -- operators -----------------------------------------------------------

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """3-point / 5-point Laplacian with zero Dirichlet ghost cells."""
        f = self.check(f)
        out = -2.0 * self.n * f
        for ax in self._axes(f):
            lo = [slice(None)] * f.ndim
            hi = [slice(None)] * f.ndim
            lo[ax], hi[ax] = slice(None, -1), slice(1, None)
            out[tuple(hi)] += f[tuple(lo)]
            out[tuple(lo)] += f[tuple(hi)]
        return out / self.h**2

    def grad_sq_norm(self, f: np.ndarray) -> np.ndarray | float:
        """``h^n * sum over links of (forward difference / h)^2``."""
        f = self.check(f)
        axes = self._axes(f)
        total = sum(np.sum(self._links(f, ax) ** 2, axis=axes) for ax in axes)
        return total * self.cell_volume

    def grad_inner(self, f: np.ndarray, g: np.ndarray) -> np.ndarray | float:
        """Discrete ``<grad f, grad g>``; equals ``-<f, lap g>`` exactly in exact arithmetic."""
        f, g = self.check(f), self.check(g)
        f, g = np.broadcast_arrays(f, g)
        axes = self._axes(f)
        total = sum(np.sum(self._links(f, ax) * self._links(g, ax), axis=axes) for ax in axes)
        return total * self.cell_volume

    def grad_density(self, f: np.ndarray) -> np.ndarray:
        """Per-cell share of ``|grad f|^2``; sums (times ``h^n``) to :meth:`grad_sq_norm`.

        Each interior link is split half/half between its two cells, a
        boundary link goes entirely to its interior cell.
        """
        f = self.check(f)
        dens = np.zeros_like(f)
        for ax in self._axes(f):
            d2 = self._links(f, ax) ** 2
            lo = np.take(d2, np.arange(self.N), axis=ax)
            hi = np.take(d2, np.arange(1, self.N + 1), axis=ax)
            part = 0.5 * (lo + hi)
            first = [slice(None)] * f.ndim
            first[ax] = 0
            last = [slice(None)] * f.ndim
            last[ax] = -1
            part[tuple(first)] += 0.5 * lo[tuple(first)]
            part[tuple(last)] += 0.5 * hi[tuple(last)]
            dens += part
        return dens

    # -- quadrature ------------------------------------------------------------

    def integrate(self, f: np.ndarray) -> np.ndarray | float:
        f = self.check(f)
        return np.sum(f, axis=self._axes(f)) * self.cell_volume

    def inner(self, f: np.ndarray, g: np.ndarray) -> np.ndarray | float:
        return self.integrate(np.multiply(*np.broadcast_arrays(self.check(f), self.check(g))))

    def norm_l2(self, f: np.ndarray) -> np.ndarray | float:
        return np.sqrt(self.integrate(self.check(f) ** 2))

    def norm_lp(self, f: np.ndarray, p: float) -> np.ndarray | float:
        if not p >= 1:
            raise ValueError(f"norm_lp needs p >= 1, got {p}")
        return self.integrate(np.abs(self.check(f)) ** p) ** (1.0 / p)


def cutoff_rho(s):
    """Smooth nondecreasing cutoff: 0 on [0, 1], 1 on [2, inf), smoothstep between.

    ``rho'`` peaks at 1.5 at ``s = 1.5``.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("cutoff_rho is defined for s >= 0")
    tau = np.clip(s - 1.0, 0.0, 1.0)
    out = tau * tau * (3.0 - 2.0 * tau)
    return float(out) if out.ndim == 0 else out


def tail_mask(grid: Grid, r: float) -> np.ndarray:
    """``rho(|x|^2 / r^2)`` on every cell."""
    if not r > 0:
        raise ValueError(f"tail_mask needs r > 0, got {r}")
    return cutoff_rho(grid.radius**2 / r**2)


def write_field_csv(path, grid: Grid, f: np.ndarray, name: str = "value") -> None:
    """One row per cell: coordinates then value."""
    f = grid.check(f)
    if f.shape != grid.shape:
        raise GridMismatch("write_field_csv takes a single (unbatched) field")
    cols = [c.ravel() for c in grid.coords]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(grid.n)] + [name])
        for row in zip(*cols, f.ravel()):
            w.writerow([repr(float(x)) for x in row])
