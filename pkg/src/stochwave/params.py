"""Model constants and the admissible parameter region."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

__all__ = [
    "Params",
    "InvalidParams",
    "validate",
    "max_noise_intensity",
    "decay_rate_sigma",
    "P_STAR",
]


class InvalidParams(ValueError):
    """Raised when a computation needs admissible parameters and gets others."""


@dataclass(frozen=True)
class Params:
    """Scalar constants of the damped stochastic wave equation.

    ``alpha`` is the restoring coefficient, ``beta`` the damping, ``delta``
    the shift in ``xi = u_t + delta*u`` (also the OU drift), ``epsilon`` the
    noise intensity, ``p`` the nonlinearity exponent, ``c1, c2, c3`` the
    growth/coercivity constants of the nonlinearity and ``m`` the number of
    noise modes.
    """

    alpha: float = 1.0
    beta: float = 1.0
    delta: float = 0.25
    epsilon: float = 0.1
    p: float = 4.0
    c1: float = 1.0
    c2: float = 4.0
    c3: float = 0.25
    m: int = 1

    @property
    def a(self) -> float:
        """Weight of ``||u||^2`` in the energy norm, ``alpha + delta^2 - beta*delta``."""
        return self.alpha + self.delta**2 - self.beta * self.delta

    def replace(self, **changes) -> "Params":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return Params(**kw)


P_STAR = Params()


def _non_finite(params: Params) -> list[str]:
    bad = []
    for f in fields(params):
        x = getattr(params, f.name)
        if not isinstance(x, (int, float)) or not math.isfinite(x):
            bad.append(f"non-finite field: {f.name}={x!r}")
    return bad


def _threshold(params: Params) -> float:
    return params.epsilon * params.c1 * (params.p - 1.0) / (params.c3 * params.p)


def validate(params: Params) -> list[str]:
    """Return the list of violated admissibility constraints (empty if valid).

    Non-finite fields short-circuit with a ``non-finite field`` diagnostic.
    All inequalities are strict and compared without tolerance.
    """
    bad = _non_finite(params)
    if bad:
        return bad
    out = []
    if not params.p > 2:
        out.append(f"p > 2 violated: p={params.p}")
    for name in ("alpha", "beta", "delta", "c1", "c2", "c3"):
        if not getattr(params, name) > 0:
            out.append(f"{name} > 0 violated: {name}={getattr(params, name)}")
    if params.epsilon < 0:
        out.append(f"epsilon >= 0 violated: epsilon={params.epsilon}")
    if int(params.m) != params.m or params.m < 1:
        out.append(f"m >= 1 integer violated: m={params.m}")
    if out:
        return out
    if not params.a > 0:
        out.append(f"alpha + delta^2 - beta*delta > 0 violated: value={params.a}")
    if not params.beta - 3 * params.delta > 0:
        out.append(f"beta - 3*delta > 0 violated: value={params.beta - 3 * params.delta}")
    eps_max = max_noise_intensity(params)
    if not params.epsilon < eps_max:
        out.append(f"epsilon < {eps_max} violated: epsilon={params.epsilon}")
    return out


def max_noise_intensity(params: Params) -> float:
    """Upper bound ``delta*C2*C3*p / (C1*(p-1))`` on the noise intensity."""
    bad = _non_finite(params)
    if bad:
        raise InvalidParams("; ".join(bad))
    return params.delta * params.c2 * params.c3 * params.p / (params.c1 * (params.p - 1.0))


def decay_rate_sigma(params: Params) -> float:
    """Energy decay rate ``min{delta, delta*C2 - eps*C1*(p-1)/(C3*p)}``."""
    bad = validate(params)
    if bad:
        raise InvalidParams("params fail validate(): " + "; ".join(bad))
    return min(params.delta, params.delta * params.c2 - _threshold(params))
