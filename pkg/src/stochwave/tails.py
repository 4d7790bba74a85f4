"""Tail functionals outside a ball and the ensemble tail experiment."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import NoiseContext, State, System, evolve
from .energy import e_norm, energy_q
from .grid import tail_mask

__all__ = ["tail_norm", "tail_energy", "TailReport", "tail_experiment", "finite_speed_radius"]


def tail_norm(state: State, r: float, system: System):
    """E-norm with every sum restricted to cells with ``|x| > r`` (sharp cut)."""
    if not r > 0:
        raise ValueError(f"tail_norm needs r > 0, got {r}")
    return e_norm(state, system, mask=system.grid.radius > r)


def tail_energy(state: State, r: float, system: System):
    """Q-functional with every integrand weighted by ``rho(|x|^2 / r^2)``."""
    return energy_q(state, system, mask=tail_mask(system.grid, r))


def finite_speed_radius(system: System, support: float, t: float, dt: float) -> float:
    """Radius beyond which an explicit 3-point RK4 solution started from data,
    profile and forcing supported in ``|x| <= support`` is exactly zero at time ``t``.

    Each RK4 step widens the support by four cells (one per stage).
    """
    steps = int(np.ceil(t / dt - 1e-9))
    return support + 4 * steps * system.grid.h + system.grid.h


@dataclass
class TailReport:
    """Max-over-ensemble tail norms on a (t, r) schedule."""

    t_schedule: np.ndarray
    r_schedule: np.ndarray
    values: np.ndarray  # (len(t), len(r)), max over the ensemble
    eta: float
    members: int
    per_member: np.ndarray | None = field(default=None, repr=False)  # (len(t), len(r), members)

    @property
    def passed(self) -> np.ndarray:
        return self.values < self.eta

    @property
    def frontier(self) -> tuple[float, float] | None:
        """Smallest ``(T, V)`` such that every cell with ``t >= T`` and ``r >= V`` passes.

        Minimises ``T`` first, then ``V``; ``None`` if even the last cell fails.
        """
        ok = self.passed
        for i in range(len(self.t_schedule)):
            for j in range(len(self.r_schedule)):
                if ok[i:, j:].all():
                    return float(self.t_schedule[i]), float(self.r_schedule[j])
        return None

    def summary(self) -> dict:
        fr = self.frontier
        return {
            "eta": self.eta,
            "members": self.members,
            "t_schedule": [float(t) for t in self.t_schedule],
            "r_schedule": [float(r) for r in self.r_schedule],
            "frontier": None if fr is None else {"T": fr[0], "V": fr[1]},
            "max_tail": float(np.max(self.values)),
            "all_pass_at_last_cell": bool(self.passed[-1, -1]),
        }

    def write_csv(self, fname) -> None:
        with open(fname, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"r={float(r)!r}" for r in self.r_schedule])
            for t, row in zip(self.t_schedule, self.values):
                w.writerow([repr(float(t))] + [repr(float(x)) for x in row])

    def write_json(self, fname) -> None:
        with open(fname, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def tail_experiment(system: System, ctx: NoiseContext, initial: State, t_schedule, r_schedule,
                    eta: float = 0.1, dt: float | None = None, r_max_fraction: float = 0.75) -> TailReport:
    """Pull back every initial state from ``-t`` to 0 for each ``t`` and measure tails at 0.

    ``initial`` carries a leading member axis (states and noise batches must
    broadcast).  Initial data are given in the transformed variables at the
    starting time.
    """
    t_schedule = np.asarray(t_schedule, dtype=float)
    r_schedule = np.asarray(r_schedule, dtype=float)
    for name, s in (("t", t_schedule), ("r", r_schedule)):
        if s.ndim != 1 or len(s) == 0 or np.any(np.diff(s) <= 0):
            raise ValueError(f"{name} schedule must be nonempty and increasing")
    if np.any(r_schedule > r_max_fraction * system.grid.L):
        raise ValueError(f"r schedule exceeds {r_max_fraction} * L, where the walls distort tails")
    vals = []
    for t in t_schedule:
        end = evolve(initial, -float(t), 0.0, ctx, system, dt=dt, record_every=None).final
        vals.append(np.stack([np.asarray(tail_norm(end, r, system)) for r in r_schedule]))
    per = np.asarray(vals)
    per = per.reshape(per.shape[:2] + (-1,))
    return TailReport(t_schedule, r_schedule, per.max(axis=-1), eta, per.shape[-1], per)
