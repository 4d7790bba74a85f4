import numpy as np
import pytest

from stochwave.dynamics import NoiseContext, State, System, evolve, transform_initial
from stochwave.energy import (absorbing_radius, c0_constant, c5_constant, c6_constant, check_energy_inequality,
                              drift_g, drift_residual, e_norm, energy_q, gamma1, gronwall_bound, sobolev_norm)
from stochwave.grid import Grid
from stochwave.noise import bump, sample_path
from stochwave.params import Params


def random_states(rng, grid, k=200):
    amp = rng.uniform(0.1, 3, (k, 1))
    u = amp * np.cumsum(rng.normal(size=(k,) + grid.shape), axis=-1) / 8 * bump(grid, 6.0)
    v = rng.normal(size=(k,) + grid.shape) * bump(grid, 5.0)
    return State(u, v)


def test_hand_values(grid, system):
    z = State.zeros(grid)
    assert e_norm(z, system) == 0.0 and energy_q(z, system) == 0.0
    v = grid.zeros()
    v[10] = 2.0
    assert e_norm(State(grid.zeros(), v), system) == 0.5
    assert energy_q(State(grid.zeros(), v), system) == grid.integrate(v**2)


def test_c0_pstar(pstar):
    assert c0_constant(pstar) == pytest.approx(0.11125, rel=1e-14)


def test_absorbing_radius_values(pstar):
    assert absorbing_radius(pstar, 1.0, 1.0) == pytest.approx(np.sqrt(17 / 0.8125) + 34**0.25, rel=1e-14)
    assert absorbing_radius(pstar, 1.0, 1.0) == pytest.approx(6.99, abs=5e-3)
    assert absorbing_radius(pstar, 0.0, 1.0) == pytest.approx(np.sqrt(1 / 0.8125) + 2**0.25)
    r = absorbing_radius(pstar, np.linspace(0, 5, 20), 0.3)
    assert np.all(np.diff(r) > 0)


def test_norm_equivalence_and_coercivity(rng, grid, system, pstar):
    s = random_states(rng, grid)
    e, w = e_norm(s, system), sobolev_norm(s, system)
    ratio = e / w
    assert np.all(ratio >= min(1, np.sqrt(pstar.a)) - 1e-12) and np.all(ratio <= 1 + 1e-12)
    q = energy_q(s, system)
    lp = grid.integrate(np.abs(s.u) ** 4)
    quad = grid.integrate(s.v**2) + grid.integrate(s.u**2) + grid.grad_sq_norm(s.u)
    assert np.all(q >= 2 * pstar.c3 * lp * (1 - 1e-12))
    assert np.all(q >= min(1, pstar.a) * quad + 2 * pstar.c3 * lp - 1e-12 * q)


def test_drift_sign_without_noise(rng, grid, quiet):
    s = random_states(rng, grid)
    assert np.all(drift_g(s, 0.0, quiet) <= 0)
    assert drift_g(State.zeros(grid), 0.0, quiet) == 0.0


def test_gamma1_homogeneity(grid, system):
    z = system.forcing.profile.field(np.array([0.7]))
    c0 = c0_constant(system.params)
    l2 = grid.integrate(z**2) + grid.grad_sq_norm(z)
    lp = grid.integrate(np.abs(z) ** 4)
    assert gamma1(z, system) == pytest.approx(c0 * (l2 + lp), rel=1e-14)
    assert gamma1(2 * z, system) == pytest.approx(c0 * (4 * l2 + 16 * lp), rel=1e-14)
    assert gamma1(grid.zeros(), system) == 0.0


def test_c5_bounds_gamma1(rng, grid):
    prm = Params(m=3)
    sys_ = System.default(prm, grid)
    c5 = c5_constant(sys_)
    z = rng.normal(size=(500, 3)) * rng.uniform(0.01, 5, (500, 1))
    g1 = gamma1(sys_.forcing.profile.field(z), sys_)
    assert np.all(g1 <= c5 * np.sum(z**2 + np.abs(z) ** 4, axis=-1))


def test_gronwall_examples(system, quiet):
    gt = np.linspace(0, 4, 41)
    b = gronwall_bound(3.0, 0.0, gt, gt, np.zeros_like(gt), quiet)
    assert np.allclose(b, 3.0 * np.exp(-0.25 * gt), rtol=1e-14)
    assert np.all(np.diff(b) < 0)
    assert gronwall_bound(3.0, 0.0, 0.0, gt, np.zeros_like(gt), system) == 3.0 + c6_constant(system) / 0.25


def test_zero_state_report(grid, quiet):
    ctx = NoiseContext.silent(0, 2, grid.h / 4)
    tr = evolve(State.zeros(grid), 0, 2, ctx, quiet)
    rep = check_energy_inequality(tr, ctx, quiet)
    assert rep.ok and np.all(rep.q == 0) and np.all(rep.margin == 0)


def test_quiet_decay(grid, quiet):
    x = transform_initial(2 * bump(grid, 3.0), bump(grid, 2.0), quiet.params, 0.0)
    ctx = NoiseContext.silent(0, 10, grid.h / 4)
    tr = evolve(x, 0, 10, ctx, quiet, record_every=4)
    rep = check_energy_inequality(tr, ctx, quiet)
    assert rep.violations == 0
    assert np.all(rep.q <= 1.05 * np.exp(-0.25 * rep.times) * rep.q[0])


def test_stochastic_drift_integrated(grid, system):
    ctx = NoiseContext.from_path(sample_path(8, -1, 2, grid.h / 32), 0.25)
    x = State(np.exp(-grid.axis**2), grid.zeros())
    tr = evolve(x, 0.0, 1.0, ctx, system, dt=grid.h / 8)
    t, res, q = drift_residual(tr, ctx, system)
    assert np.max(np.abs(res)) < 1e-2 * q[0]


def test_report_outputs(tmp_path, grid, system):
    ctx = NoiseContext.from_path(sample_path(8, -1, 2, grid.h / 4), 0.25)
    tr = evolve(State(bump(grid, 2.0), grid.zeros()), 0.0, 2.0, ctx, system, record_every=8)
    rep = check_energy_inequality(tr, ctx, system)
    assert rep.extra["c5_bound_holds"]
    rep.write_csv(tmp_path / "e.csv")
    rep.write_json(tmp_path / "e.json")
    assert (tmp_path / "e.csv").read_text().startswith("member,t,e_norm,Q,bound,margin")
    assert "R" in (tmp_path / "e.json").read_text()
