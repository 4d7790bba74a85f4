"""Energy norm, energy functional, drift identity and the absorbing-ball bookkeeping.

All integrals use the grid's midpoint quadrature, so ``<f(u), u> = p * int F``
holds to rounding for the canonical nonlinearity.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import NoiseContext, State, System, Trajectory
from .params import Params, decay_rate_sigma

__all__ = [
    "e_norm",
    "sobolev_norm",
    "energy_q",
    "drift_g",
    "c0_constant",
    "c4_constant",
    "c5_constant",
    "c6_constant",
    "gamma1",
    "gamma1_series",
    "gronwall_bound",
    "absorbing_radius",
    "path_r0",
    "path_radius",
    "EnergyReport",
    "check_energy_inequality",
    "drift_residual",
]


def _dens(state: State, system: System, mask=None):
    """Per-cell integrands of the quadratic part and of ``|u|^p``, optionally masked."""
    g, a = system.grid, system.params.a
    quad = state.v**2 + a * state.u**2 + g.grad_density(state.u)
    lp = np.abs(state.u) ** system.nl.p
    if mask is not None:
        quad = np.where(mask, quad, 0.0) if mask.dtype == bool else quad * mask
        lp = np.where(mask, lp, 0.0) if mask.dtype == bool else lp * mask
    return quad, lp


def e_norm(state: State, system: System, mask=None):
    """``(||v||^2 + a||u||^2 + ||grad u||^2)^(1/2) + ||u||_p`` with ``a = alpha + delta^2 - beta*delta``.

    ``mask`` (boolean or weights per cell) restricts every integral.
    """
    quad, lp = _dens(state, system, mask)
    grid = system.grid
    return np.sqrt(grid.integrate(quad)) + grid.integrate(lp) ** (1.0 / system.nl.p)


def sobolev_norm(state: State, system: System):
    """Unweighted phase-space norm ``(||grad u||^2 + ||u||^2 + ||v||^2)^(1/2) + ||u||_p``."""
    g = system.grid
    return (np.sqrt(g.grad_sq_norm(state.u) + g.norm_l2(state.u) ** 2 + g.norm_l2(state.v) ** 2)
            + g.norm_lp(state.u, system.nl.p))


def energy_q(state: State, system: System, mask=None):
    """``Q = ||v||^2 + a||u||^2 + ||grad u||^2 + 2 int (F(u) + phi3)``."""
    quad, _ = _dens(state, system)
    pot = 2.0 * (system.nl.F(state.u) + system.nl.phi3)
    dens = quad + pot
    if mask is not None:
        dens = np.where(mask, dens, 0.0) if mask.dtype == bool else dens * mask
    return system.grid.integrate(dens)


def drift_g(state: State, z_now, system: System, sigma: float | None = None):
    """Right-hand side ``G`` of ``dQ/dt + 2 sigma Q = G``."""
    p, grid, nl = system.params, system.grid, system.nl
    sigma = decay_rate_sigma(p) if sigma is None else sigma
    eps, d, a, b = p.epsilon, p.delta, p.a, p.beta
    u, v = state.u, state.v
    z = np.broadcast_to(np.asarray(z_now, dtype=float), u.shape)
    fu = nl.f(u)
    g = system.forcing.g_field
    out = (-2.0 * (b - d - sigma) * grid.integrate(v**2)
           - 2.0 * (d - sigma) * a * grid.integrate(u**2)
           - 2.0 * (d - sigma) * grid.grad_sq_norm(u)
           + 4.0 * sigma * grid.integrate(nl.F(u) + nl.phi3)
           - 2.0 * d * grid.inner(fu, u)
           + 2.0 * eps * a * grid.inner(z, u)
           + 2.0 * eps * grid.grad_inner(z, u)
           + 2.0 * eps * grid.inner(z, fu)
           + (4.0 * d * eps - 2.0 * b * eps) * grid.inner(z, v))
    if system.forcing.g is not None:
        out = out + 2.0 * grid.inner(np.broadcast_to(g, v.shape), v)
    return out


# -- constants -----------------------------------------------------------------

def c0_constant(params: Params) -> float:
    """Largest grouped coefficient of ``||z||^2``, ``||grad z||^2`` and ``||z||_p^p``."""
    eps, d, a = params.epsilon, params.delta, params.a
    return max(
        eps**2 * a / (2 * d) + eps**2 * (2 * d + params.beta) ** 2 / (2 * d) + eps / 2,
        eps**2 / (2 * d),
        eps * params.c1 / params.p,
    )


def _phi_norms(system: System) -> tuple[float, float, float]:
    """``(||phi1||^2, ||phi2||_1, ||phi3||_1)``; zero for the supported families."""
    nl, grid = system.nl, system.grid
    vol = grid.integrate(np.ones(grid.shape))
    return nl.phi1**2 * vol, abs(nl.phi2) * vol, abs(nl.phi3) * vol


def c4_constant(system: System) -> float:
    p = system.params
    phi1_sq, phi2_l1, phi3_l1 = _phi_norms(system)
    return (p.epsilon / 2) * phi1_sq - p.delta * phi2_l1 + p.epsilon * p.c1 * (p.p - 1) / (p.c3 * p.p) * phi3_l1


def c6_constant(system: System) -> float:
    p = system.params
    _, _, phi3_l1 = _phi_norms(system)
    return 2 * (p.delta * p.c2 - p.epsilon * p.c1 * (p.p - 1) / (p.c3 * p.p)) * phi3_l1 + 2 * c4_constant(system)


def c5_constant(system: System, c0: float | None = None) -> float:
    """``C0 * max_j max{m(||h_j||^2 + ||grad h_j||^2), m^(p-1) ||h_j||_p^p}``.

    Guarantees ``Gamma1 <= C5 * sum_j(|z_j|^2 + |z_j|^p)`` pointwise in time.
    """
    c0 = c0_constant(system.params) if c0 is None else c0
    prof, m, p = system.forcing.profile, system.forcing.profile.m, system.params.p
    l2 = m * (prof.l2**2 + prof.h1_semi**2)
    lp = m ** (p - 1) * prof.lp(p) ** p
    return c0 * float(np.max(np.maximum(l2, lp)))


def gamma1(z, system: System, c0: float | None = None):
    """``C0 * (||z||^2 + ||grad z||^2 + ||z||_p^p)`` for a noise field ``z``."""
    c0 = c0_constant(system.params) if c0 is None else c0
    g, p = system.grid, system.params.p
    return c0 * (g.integrate(z**2) + g.grad_sq_norm(z) + g.integrate(np.abs(z) ** p))


def gamma1_series(ctx: NoiseContext, system: System, k0: int, k1: int, c0: float | None = None,
                  chunk: int = 256) -> np.ndarray:
    """``Gamma1`` at every noise-grid index in ``[k0, k1]``; shape ``(*batch, k1 - k0 + 1)``."""
    prof = system.forcing.profile
    out = []
    for s in range(k0, k1 + 1, chunk):
        e = min(s + chunk, k1 + 1)
        zv = np.moveaxis(ctx.z[..., s:e], -1, -2)  # (*batch, T, m)
        out.append(gamma1(prof.field(zv), system, c0))
    return np.concatenate(out, axis=-1)


def gronwall_bound(q_tau, tau: float, t, gamma_times, gamma_vals, system: System,
                   sigma: float | None = None):
    """Gronwall bound on ``Q(t)`` given ``Q(tau)`` and ``Gamma1`` sampled on ``[tau, t]``.

    ``e^{-sigma(t-tau)} (Q(tau) + 2||phi3||_1) + 2 int_tau^t e^{sigma(s-t)} Gamma1(s) ds
    + (C6 + ||g||^2/(beta-delta)) / sigma``; the integral uses the trapezoid
    rule on ``gamma_times``.  ``t`` may be an array of times inside the
    sampled window.
    """
    p = system.params
    sigma = decay_rate_sigma(p) if sigma is None else sigma
    t = np.asarray(t, dtype=float)
    if np.any(t < tau - 1e-12):
        raise ValueError("gronwall_bound needs t >= tau")
    gt = np.asarray(gamma_times, dtype=float)
    gv = np.asarray(gamma_vals, dtype=float)
    w = np.exp(sigma * (gt - tau)) * gv
    cum = np.concatenate([np.zeros(w.shape[:-1] + (1,)),
                          np.cumsum(0.5 * (w[..., 1:] + w[..., :-1]) * np.diff(gt), axis=-1)], axis=-1)
    pos = np.searchsorted(gt, t - 1e-12 * max(1.0, float(np.max(np.abs(gt)))))
    if np.any(pos >= len(gt)) or not np.allclose(gt[np.minimum(pos, len(gt) - 1)], t, atol=1e-9):
        raise ValueError("every t must be one of gamma_times")
    integral = np.take(cum, pos, axis=-1) * np.exp(-sigma * (t - tau))
    _, _, phi3_l1 = _phi_norms(system)
    g_sq = 0.0 if system.forcing.g is None else system.grid.integrate(system.forcing.g**2)
    const = (c6_constant(system) + g_sq / (p.beta - p.delta)) / sigma
    decay = np.exp(-sigma * (t - tau))
    q_tau = np.asarray(q_tau, dtype=float)
    if t.ndim:
        decay = decay.reshape(decay.shape + (1,) * q_tau.ndim)
        integral = np.moveaxis(np.atleast_1d(integral), -1, 0)
        integral = integral.reshape(integral.shape + (1,) * (q_tau.ndim - integral.ndim + 1))
        integral = integral.reshape(integral.shape[: 1 + q_tau.ndim])
    return decay * (q_tau + 2 * phi3_l1) + 2.0 * integral + const


def absorbing_radius(params: Params, r0, c5: float, g_sq: float = 0.0, c6: float = 0.0):
    """Radius ``R(omega)`` of the absorbing ball in the energy norm."""
    sigma = decay_rate_sigma(params)
    bracket = 1.0 + (4.0 * c5 * np.asarray(r0, dtype=float) + c6 + g_sq / (params.beta - params.delta)) / sigma
    return np.sqrt(bracket / min(1.0, params.a)) + (bracket / (2.0 * params.c3)) ** (1.0 / params.p)


def path_r0(ctx: NoiseContext, system: System):
    """Sampled tempered bound ``max_{t <= 0} e^{-sigma|t|/2} sum_j(|z_j|^2 + |z_j|^p)`` per noise member."""
    sigma = decay_rate_sigma(system.params)
    t = ctx.t_min + np.arange(ctx.n_steps + 1) * ctx.dt
    keep = t <= 1e-12
    az = np.abs(ctx.z[..., keep])
    s = np.sum(az**2 + az**system.params.p, axis=-2)
    return np.max(np.exp(-0.5 * sigma * np.abs(t[keep])) * s, axis=-1)


def path_radius(ctx: NoiseContext, system: System):
    """Absorbing radius ``R(omega)`` for each path in ``ctx``."""
    g_sq = 0.0 if system.forcing.g is None else float(system.grid.integrate(system.forcing.g**2))
    r0 = path_r0(ctx, system) if system.params.epsilon else np.zeros(ctx.z.shape[:-2])
    return absorbing_radius(system.params, r0, c5_constant(system), g_sq, c6_constant(system))


@dataclass
class EnergyReport:
    """Energy functional against its Gronwall bound along a trajectory."""

    times: np.ndarray
    e_norm: np.ndarray
    q: np.ndarray
    bound: np.ndarray
    tol: float
    sigma: float
    extra: dict = field(default_factory=dict)

    @property
    def margin(self) -> np.ndarray:
        return self.bound - self.q

    @property
    def violations(self) -> int:
        return int(np.sum(self.margin < -self.tol * np.abs(self.bound)))

    @property
    def min_relative_margin(self) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(self.bound > 0, self.margin / self.bound, np.where(self.margin >= 0, 0.0, -np.inf))
        return float(np.min(rel))

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def summary(self) -> dict:
        return {
            "min_margin": float(np.min(self.margin)),
            "min_relative_margin": self.min_relative_margin,
            "violation_count": self.violations,
            "tolerance": self.tol,
            "sigma": self.sigma,
            **self.extra,
        }

    def write_csv(self, fname, member: int | None = None) -> None:
        """Columns t, e_norm, Q, bound, margin; batched reports are flattened with a member column."""
        q = self.q.reshape(len(self.times), -1)
        e = self.e_norm.reshape(len(self.times), -1)
        b = np.broadcast_to(self.bound, self.q.shape).reshape(len(self.times), -1)
        with open(fname, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["member", "t", "e_norm", "Q", "bound", "margin"])
            for j in range(q.shape[1]):
                for i, t in enumerate(self.times):
                    w.writerow([j, repr(float(t)), repr(float(e[i, j])), repr(float(q[i, j])),
                                repr(float(b[i, j])), repr(float(b[i, j] - q[i, j]))])

    def write_json(self, fname) -> None:
        with open(fname, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def check_energy_inequality(traj: Trajectory, ctx: NoiseContext, system: System,
                            tol: float = 0.05) -> EnergyReport:
    """Compare ``Q`` at every snapshot with the Gronwall bound started at the first snapshot."""
    sigma = decay_rate_sigma(system.params)
    states = State(traj.u, traj.v)
    q = energy_q(states, system)
    en = e_norm(states, system)
    k0, k1 = int(traj.index[0]), int(traj.index[-1])
    gt = ctx.t_min + np.arange(k0, k1 + 1) * ctx.dt
    if system.params.epsilon == 0:
        gv = np.zeros(gt.shape)
    else:
        gv = gamma1_series(ctx, system, k0, k1)
    bound = gronwall_bound(q[0], float(traj.times[0]), traj.times, gt, gv, system, sigma)
    extra = {"R": np.ravel(path_radius(ctx, system)).tolist()}
    if system.params.epsilon:
        az = np.abs(ctx.z[..., k0:k1 + 1])
        cap = c5_constant(system) * np.sum(az**2 + az**system.params.p, axis=-2)
        extra["c5_bound_holds"] = bool(np.all(gv <= cap * (1 + 1e-12) + 1e-300))
        if not extra["c5_bound_holds"]:
            raise AssertionError("Gamma1 exceeds C5 * sum(|z|^2 + |z|^p); C5 assembly is wrong")
    return EnergyReport(traj.times, en, q, np.broadcast_to(bound, q.shape).copy(), tol, sigma, extra)


def drift_residual(traj: Trajectory, ctx: NoiseContext, system: System, sigma: float | None = None,
                   integrated: bool = True):
    """Residual of ``dQ/dt + 2 sigma Q = G`` along a trajectory.

    ``integrated=True`` returns ``Q_i - Q_0 - int_0^{t_i} (G - 2 sigma Q)``
    (trapezoid) at every snapshot, which converges even though ``G`` is only
    Hoelder-1/2 in time under noise.  Otherwise the centred difference
    ``(Q_{i+1} - Q_{i-1}) / (2 dt) + 2 sigma Q_i - G_i`` at interior snapshots.
    Snapshots must be equally spaced.
    """
    sigma = decay_rate_sigma(system.params) if sigma is None else sigma
    dts = np.diff(traj.times)
    if not np.allclose(dts, dts[0]):
        raise ValueError("drift_residual needs equally spaced snapshots")
    states = State(traj.u, traj.v)
    q = energy_q(states, system)
    zs = np.stack([ctx.field(system.forcing.profile, int(k)) if system.params.epsilon else
                   np.zeros(system.grid.shape) for k in traj.index])
    if zs.ndim > traj.u.ndim:
        raise ValueError("noise batch does not broadcast against the trajectory")
    zs = np.broadcast_to(zs.reshape(zs.shape[:1] + (1,) * (traj.u.ndim - zs.ndim) + zs.shape[1:]), traj.u.shape)
    g = drift_g(states, zs, system, sigma)
    if integrated:
        rate = g - 2 * sigma * q
        acc = np.concatenate([np.zeros((1,) + q.shape[1:]),
                              np.cumsum(0.5 * (rate[1:] + rate[:-1]) * dts[0], axis=0)])
        return traj.times, q - q[0] - acc, q
    res = (q[2:] - q[:-2]) / (2 * dts[0]) + 2 * sigma * q[1:-1] - g[1:-1]
    return traj.times[1:-1], res, q
