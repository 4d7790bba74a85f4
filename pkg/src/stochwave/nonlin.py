"""Nonlinearity family ``f(u) = |u|^(p-2) u`` and its structural constants."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Nonlinearity", "f_eval", "F_eval", "verify_assumption2", "Assumption2Report"]

KINDS = ("canonical", "zero")


@dataclass(frozen=True)
class Nonlinearity:
    """Pointwise nonlinearity with its growth constants.

    ``kind="canonical"`` is ``|u|^(p-2) u`` with ``phi1 = phi2 = phi3 = 0``
    and ``(C1, C2, C3) = (1, p, 1/p)``.  ``kind="zero"`` switches the
    nonlinearity off; it violates the coercivity bound and exists only for
    linear convergence studies.
    """

    p: float = 4.0
    kind: str = "canonical"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}; expected one of {KINDS}")
        if not self.p > 2:
            raise ValueError(f"p must exceed 2, got {self.p}")

    @property
    def constants(self) -> tuple[float, float, float]:
        return 1.0, self.p, 1.0 / self.p

    # phi1, phi2, phi3 vanish for every supported kind
    phi1 = phi2 = phi3 = 0.0

    def f(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(u)
        return np.abs(u) ** (self.p - 2.0) * u

    def F(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(u)
        return np.abs(u) ** self.p / self.p


def f_eval(u, nl: Nonlinearity):
    out = nl.f(u)
    return float(out) if out.ndim == 0 else out


def F_eval(u, nl: Nonlinearity):
    out = nl.F(u)
    return float(out) if out.ndim == 0 else out


@dataclass
class Assumption2Report:
    """Worst margins of the three structural inequalities over a sample.

    A margin is the slack of the inequality (nonnegative means it holds).
    ``scale`` is the largest term magnitude seen; margins within
    ``rtol * scale`` of zero count as rounding, not violations.
    """

    growth_margin: float
    growth_argmin: float
    coercive_margin: float
    coercive_argmin: float
    lower_margin: float
    lower_argmin: float
    scale: float = 1.0
    rtol: float = 1e-12

    def _bad(self, margin: float) -> bool:
        return margin < -self.rtol * self.scale

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def violations(self) -> list[str]:
        out = []
        if self._bad(self.growth_margin):
            out.append(f"|f(u)| <= C1|u|^(p-1) + phi1 fails at u={self.growth_argmin}")
        if self._bad(self.coercive_margin):
            out.append(f"f(u)u - C2 F(u) >= phi2 fails at u={self.coercive_argmin}")
        if self._bad(self.lower_margin):
            out.append(f"F(u) >= C3|u|^p - phi3 fails at u={self.lower_argmin}")
        return out


def verify_assumption2(nl: Nonlinearity, samples, constants=None) -> Assumption2Report:
    """Check growth, coercivity and lower-bound inequalities at every sample.

    ``constants`` overrides ``(C1, C2, C3)`` so that deliberately wrong
    constants can be probed; violations are reported, never raised.
    """
    u = np.atleast_1d(np.asarray(samples, dtype=float))
    c1, c2, c3 = nl.constants if constants is None else constants
    p = nl.p
    f, F = nl.f(u), nl.F(u)
    au = np.abs(u)
    growth = c1 * au ** (p - 1.0) + nl.phi1 - np.abs(f)
    coercive = f * u - c2 * F - nl.phi2
    lower = F - c3 * au**p + nl.phi3
    i, j, k = np.argmin(growth), np.argmin(coercive), np.argmin(lower)
    return Assumption2Report(
        float(growth[i]), float(u[i]),
        float(coercive[j]), float(u[j]),
        float(lower[k]), float(u[k]),
        scale=float(max(1.0, np.max(np.abs(u) ** p, initial=0.0))),
    )
