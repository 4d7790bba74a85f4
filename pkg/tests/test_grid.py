import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from stochwave.grid import Grid, GridMismatch, cutoff_rho, tail_mask


def test_stencil_by_hand():
    g = Grid(1, 1.5, 3)  # h = 1
    assert np.array_equal(g.laplacian(np.array([0.0, 1.0, 0.0])), [1.0, -2.0, 1.0])
    assert np.array_equal(g.laplacian(g.zeros()), g.zeros())


def test_grad_sq_by_hand():
    g = Grid(1, 1.0, 2)  # h = 1, links ghost-1, 1-1, 1-ghost
    assert g.grad_sq_norm(np.array([1.0, 1.0])) == 2.0
    assert g.grad_sq_norm(g.zeros()) == 0.0


def test_discrete_eigenvector(grid):
    f = np.cos(np.pi * grid.axis / (2 * grid.L + grid.h))
    lam = (2 / grid.h**2) * (1 - np.cos(np.pi * grid.h / (2 * grid.L)))
    rel = np.max(np.abs(grid.laplacian(f) + lam * f)) / (lam * np.max(np.abs(f)))
    assert rel <= 1e-2


def test_l2_by_hand(grid):
    f = grid.zeros()
    f[100] = 2.0
    assert grid.norm_l2(f) == 0.5
    with pytest.raises(ValueError):
        grid.norm_lp(f, 0.5)


def test_grid_mismatch(grid):
    with pytest.raises(GridMismatch):
        grid.laplacian(np.zeros(10))


fields = arrays(np.float64, 32, elements=st.floats(-5, 5))


@given(fields, fields)
def test_sbp_and_symmetry(f, g):
    grid = Grid(1, 2.0, 32)
    lhs = grid.grad_inner(f, g)
    rhs = -grid.inner(f, grid.laplacian(g))
    # scale by sums of absolute terms; squaring tiny fields would underflow
    scale = max(grid.inner(np.abs(f), np.abs(grid.laplacian(g))), grid.inner(np.abs(g), np.abs(grid.laplacian(f))))
    assert abs(lhs - rhs) <= 1e-12 * scale
    assert abs(grid.inner(f, grid.laplacian(g)) - grid.inner(grid.laplacian(f), g)) <= 1e-12 * scale
    assert grid.inner(f, grid.laplacian(f)) <= 1e-12 * grid.inner(np.abs(f), np.abs(grid.laplacian(f)))


def test_sbp_2d(rng):
    grid = Grid(2, 2.0, 16)
    f, g = rng.normal(size=(2, 16, 16))
    assert grid.grad_inner(f, g) == pytest.approx(-grid.inner(f, grid.laplacian(g)), rel=1e-12)
    assert grid.integrate(grid.grad_density(f)) == pytest.approx(grid.grad_sq_norm(f), rel=1e-13)


def test_grad_density_sums(rng, grid):
    f = rng.normal(size=(3,) + grid.shape)
    assert np.allclose(grid.integrate(grid.grad_density(f)), grid.grad_sq_norm(f), rtol=1e-13)


def test_lp2_equals_l2(rng, grid):
    f = rng.normal(size=grid.shape)
    assert grid.norm_lp(f, 2) == pytest.approx(grid.norm_l2(f), rel=1e-14)


def test_cutoff_rho():
    assert cutoff_rho(0.5) == 0.0
    assert cutoff_rho(3.0) == 1.0
    assert cutoff_rho(1.5) == 0.5
    s = np.linspace(0, 4, 401)
    assert np.all(np.diff(cutoff_rho(s)) >= 0)
    with pytest.raises(ValueError):
        cutoff_rho(-0.1)


def test_tail_mask():
    g = Grid(1, 8.0, 256)
    assert not np.any(tail_mask(g, np.sqrt(2) * g.L))
    r = 2.0
    m = tail_mask(g, r)
    s = g.radius**2 / r**2
    assert np.all(m[s > 2] == 1.0) and np.all(m[s < 1] == 0.0)
    g2 = Grid(1, 3.0, 2)  # cells at +-1.5
    assert tail_mask(g2, 1.5 / np.sqrt(1.5))[0] == pytest.approx(0.5)
    assert tail_mask(g2, 1.0)[0] == 1.0  # |x| = 1.5 r


@settings(max_examples=50)
@given(st.floats(0.1, 20))
def test_rho_sandwich(r):
    g = Grid(1, 8.0, 256)
    m = tail_mask(g, r)
    assert np.all((g.radius > np.sqrt(2) * r) <= m) and np.all(m <= (g.radius > r))
