import math

import numpy as np
import pytest
from scipy import stats

from stochwave.grid import Grid
from stochwave.noise import (NoisePath, NoiseProfile, OuTrajectory, default_profile, estimate_r0, load_path,
                             member_seed, ou_step, ou_trajectory, sample_path, save_path, write_path_csv, z_field)


def test_same_seed_identical():
    a, b = sample_path(5, -2, 3, 0.01, 2), sample_path(5, -2, 3, 0.01, 2)
    assert np.array_equal(a.increments, b.increments)
    assert not np.array_equal(a.increments, sample_path(6, -2, 3, 0.01, 2).increments)


def test_longer_horizon_extends():
    short, long = sample_path(9, -1, 1, 0.01), sample_path(9, -3, 2, 0.01)
    k = long.index(-1.0)
    assert np.array_equal(long.increments[:, k:k + short.n_steps], short.increments)
    assert long.W[0, long.index(0.0)] == 0.0


def test_bad_support():
    with pytest.raises(ValueError):
        sample_path(0, 0.5, 1.0, 0.1)
    with pytest.raises(ValueError):
        sample_path(0, -1.0, -0.5, 0.1)


def test_wiener_variance_and_independence():
    n = 100_000
    path = sample_path(2024, 0.0, n * 0.05, 0.05, m=2)
    d = path.increments
    var = d[0].var()
    se = var * math.sqrt(2 / (n - 1))
    assert abs(var - 0.05) < 3 * se
    corr = np.mean(d[0] * d[1]) / 0.05
    assert abs(corr) < 3 / math.sqrt(n)


def test_ou_step_values():
    assert ou_step(1.0, 0.5, 1.0, 0.0) == pytest.approx(0.6065306597126334, rel=1e-15)
    assert ou_step(1.0, 0.5, 1e-12, 0.0) == pytest.approx(1.0)


def test_ou_stationary_variance_iterated():
    rng = np.random.default_rng(3)
    z = np.zeros(100_000)
    for _ in range(40):
        z = ou_step(z, 0.5, 0.5, rng.standard_normal(z.size))
    se = math.sqrt(2 / (z.size - 1)) * 1.0
    assert abs(z.var() - 1.0) < 3 * se


def test_zero_increment_decay():
    path = NoisePath(0, -1.0, 1.0, 0.01, np.zeros((1, 200)))
    tr = ou_trajectory(path, 0.25, z0=np.array([1.0]))
    assert np.allclose(tr.z[0], np.exp(-0.25 * (tr.times + 1.0)), rtol=1e-12)
    with pytest.raises(ValueError):
        ou_trajectory(path, 0.25, t_grid=[0.0, 2.0])


def test_profiles_and_fields():
    g = Grid()
    prof = default_profile(g, 1)
    assert np.array_equal(prof.field(np.zeros(1)), g.zeros())
    assert np.array_equal(prof.field(np.array([2.0])), 2 * prof.h[0])
    two = NoiseProfile(g, np.stack([prof.h[0], prof.h[0]]))
    assert np.array_equal(two.field(np.array([1.0, -1.0])), g.zeros())
    path = sample_path(1, -1, 1, 0.01)
    ou = ou_trajectory(path, 0.25)[5]
    assert np.array_equal(z_field(prof, ou), prof.field(ou.z))


def test_estimate_r0():
    assert estimate_r0(OuTrajectory(np.array([0.0]), np.zeros((1, 1)), 0.25), 0.25, 4) == 0.0
    assert estimate_r0(OuTrajectory(np.array([0.0]), np.ones((1, 1)), 0.25), 0.25, 4) == 2.0
    tr = ou_trajectory(sample_path(4, -5, 1, 0.01), 0.25)
    k = int(np.argmin(np.abs(tr.times)))
    z0 = np.abs(tr.z[:, k])
    assert estimate_r0(tr, 0.25, 4) >= np.sum(z0**2 + z0**4)


def test_binary_round_trip(tmp_path):
    p = sample_path(77, -1.5, 0.5, 0.03125, 3)
    save_path(p, tmp_path / "n.bin")
    q = load_path(tmp_path / "n.bin")
    assert (q.seed, q.t_min, q.t_max, q.dt, q.m) == (p.seed, p.t_min, p.t_max, p.dt, p.m)
    assert np.array_equal(q.increments, p.increments)
    write_path_csv(p, tmp_path / "w.csv")
    assert (tmp_path / "w.csv").read_text().splitlines()[0] == "t,W1,W2,W3"


def test_member_seed_counter_based():
    assert member_seed(1, 3) == member_seed(1, 3)
    assert len({member_seed(1, i) for i in range(100)}) == 100
    assert 0 <= member_seed(2**40, 7) < 2**63


def test_ou_one_step_law_ks():
    """Conditional law of z(t+dt) given z(t) is N(e^{-delta dt} z, (1 - e^{-2 delta dt}) / (2 delta))."""
    delta, dt = 0.25, 0.5
    path = sample_path(11, 0.0, 5000 * dt, dt)
    z = ou_trajectory(path, delta).z[0]
    mean = math.exp(-delta * dt) * z[:-1]
    sd = math.sqrt(-math.expm1(-2 * delta * dt) / (2 * delta))
    assert stats.kstest((z[1:] - mean) / sd, "norm").pvalue > 0.01
