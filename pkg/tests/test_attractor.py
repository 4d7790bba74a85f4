import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochwave.attractor import (StateCloud, approximate_attractor, hausdorff_semidist, invariance_check,
                                 pullback_convergence_test, sample_ball)
from stochwave.dynamics import NoiseContext, State, System
from stochwave.energy import e_norm
from stochwave.grid import Grid
from stochwave.noise import sample_path


def cloud(u, v=None):
    u = np.asarray(u, float)
    return StateCloud(State(u, np.zeros_like(u) if v is None else v))


def test_semidist_examples(rng, grid, system):
    A = cloud(rng.normal(size=(4,) + grid.shape))
    assert hausdorff_semidist(A, A, system) == 0.0
    x = A.states[:1]
    zero = cloud(np.zeros((1,) + grid.shape))
    assert hausdorff_semidist(StateCloud(x), zero, system) == pytest.approx(float(e_norm(x[0], system)))
    s = State(rng.normal(size=grid.shape), rng.normal(size=grid.shape))
    s = s * (3.0 / float(e_norm(s, system)))
    two = StateCloud(State(np.stack([grid.zeros(), s.u]), np.stack([grid.zeros(), s.v])))
    assert hausdorff_semidist(two, zero, system) == pytest.approx(3.0)
    assert hausdorff_semidist(zero, two, system) == 0.0
    with pytest.raises(ValueError):
        hausdorff_semidist(cloud(np.zeros((0,) + grid.shape)), zero, system)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_semidist_triangle(seed):
    sys_ = System.default(grid=Grid(1, 4.0, 32))
    r = np.random.default_rng(seed)
    A, B, C = (cloud(*r.normal(size=(2, r.integers(1, 5), 32))) for _ in range(3))
    assert hausdorff_semidist(A, C, sys_) <= hausdorff_semidist(A, B, sys_) + hausdorff_semidist(B, C, sys_) + 1e-12


def test_sample_ball_norms(rng, system):
    x = sample_ball(system, 7.0, 10, rng)
    n = np.asarray(e_norm(x, system))
    assert np.all(n <= 7.0 + 1e-12) and np.all(n > 0)
    assert np.all(np.diff(n) > 0)


def test_quiet_attractor_collapses(grid, quiet, rng):
    ctx = NoiseContext.silent(-40, 0, grid.h / 4)
    init = sample_ball(quiet, 7.0, 3, rng)
    approx = approximate_attractor(ctx, quiet, init, [10, 20, 40], keep_last=1)
    assert np.max(approx.cloud.norms(quiet)) <= 0.05
    one = approximate_attractor(ctx, quiet, init[:1], [10, 20, 40])
    assert len(one.cloud) == 3
    assert np.all(np.diff(approx.stage_gaps) < 0)


def test_convergence_report(grid, quiet, rng):
    ctx = NoiseContext.silent(-24, 0, grid.h / 4)
    init = sample_ball(quiet, 7.0, 2, rng)
    rep = pullback_convergence_test(ctx, quiet, init, [4, 8, 12, 16, 20, 24], member_axis=0)
    assert rep.rate_ok() and np.all(rep.strictly_decreasing)
    assert rep.terminal_spread <= 2 * np.max(rep.differences[-1])
    single = pullback_convergence_test(ctx, quiet, init, [4])
    assert single.insufficient and single.differences.shape[0] == 0 and not single.rate_ok()


def test_invariance(grid, system, quiet, rng):
    path = sample_path(12, -24, 4, grid.h / 4)
    ctx = NoiseContext.from_path(path, 0.25)
    init = sample_ball(system, 7.0, 2, rng)
    rep0 = invariance_check(ctx, system, init, [12, 16, 20], 0.0, keep_last=2)
    assert rep0.pushed_to_shifted == 0.0 and rep0.shifted_to_pushed == 0.0
    rep = invariance_check(ctx, system, init, [12, 16, 20], 4.0, keep_last=2)
    assert rep.ok
    qctx = NoiseContext.silent(-24, 4, grid.h / 4)
    repq = invariance_check(qctx, quiet, init, [12, 16, 20], 4.0, keep_last=2)
    assert repq.dist_to_zero < 0.05


def test_manifest(tmp_path, grid, quiet, rng):
    ctx = NoiseContext.silent(-8, 0, grid.h / 4)
    approx = approximate_attractor(ctx, quiet, sample_ball(quiet, 2.0, 2, rng), [4, 8], seed=5)
    approx.cloud.save(tmp_path / "c.npy")
    approx.cloud.write_manifest(tmp_path / "m.json", quiet)
    arr = np.load(tmp_path / "c.npy")
    assert arr.shape == (4, 2) + grid.shape
    m = approx.cloud.manifest(quiet)
    assert m["provenance"][0] == {"seed": 5, "pullback_time": 4.0, "member": [0]}
    assert np.allclose(np.diag(m["pairwise_distances"]), 0)
