import numpy as np
import pytest

from stochwave.dynamics import NoiseContext, State, System, evolve
from stochwave.energy import e_norm, energy_q
from stochwave.grid import Grid
from stochwave.noise import bump, sample_path
from stochwave.params import Params
from stochwave.tails import TailReport, finite_speed_radius, tail_energy, tail_experiment, tail_norm


@pytest.fixture(scope="module")
def bsys():
    return System.default(Params(), Grid(), profile_kind="bump")


def test_trivial_tails(rng, grid, bsys):
    x = State(rng.normal(size=grid.shape), rng.normal(size=grid.shape))
    assert tail_norm(x, grid.L * 1.01, bsys) == 0.0
    assert tail_norm(x, 1e-9, bsys) == e_norm(x, bsys)
    inside = State(bump(grid, 1.0), bump(grid, 0.5))
    assert tail_norm(inside, 2.0, bsys) == 0.0
    with pytest.raises(ValueError):
        tail_norm(x, 0.0, bsys)


def test_tail_energy_trivial(grid, bsys):
    x = State(bump(grid, 1.0), bump(grid, 1.0))
    assert tail_energy(x, 100.0, bsys) == 0.0
    far = State(np.where(grid.radius > 5, 1.0, 0.0) * (grid.L - grid.radius), grid.zeros())
    # mask is 1 on the support once |x|^2/r^2 >= 2 there
    assert tail_energy(far, 3.0, bsys) == pytest.approx(energy_q(far, bsys), rel=1e-12)


def test_monotone_and_sandwich(rng, grid, bsys):
    for _ in range(50):
        x = State(rng.normal(size=grid.shape) * bump(grid, 7.0), rng.normal(size=grid.shape))
        vals = [tail_norm(x, r, bsys) for r in (0.5, 1, 2, 3, 4, 6)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        r = rng.uniform(0.5, 5)
        mask = grid.radius > np.sqrt(2) * r
        quad = grid.integrate(np.where(mask, x.v**2 + bsys.params.a * x.u**2 + grid.grad_density(x.u), 0.0))
        assert quad <= tail_energy(x, r, bsys) * (1 + 1e-12)


def test_finite_speed_zero(grid, bsys):
    ctx = NoiseContext.from_path(sample_path(3, -2, 2, grid.h / 4), 0.25)
    x = State(3 * bump(grid, 2.0), bump(grid, 1.5))
    for t in (0.5, 1.0):
        end = evolve(x, 0.0, t, ctx, bsys, record_every=None).final
        assert tail_norm(end, finite_speed_radius(bsys, 2.0, t, grid.h / 2), bsys) == 0.0
        assert tail_norm(end, 2.0 + t + 1.0, bsys) < 1e-12


def test_experiment_and_frontier(grid, bsys):
    paths = [sample_path(s, -10, 0, grid.h / 4) for s in range(3)]
    ctx = NoiseContext.from_paths(paths, 0.25)
    init = State(np.stack([bump(grid, 2.0)] * 3), grid.zeros((3,)))
    rep = tail_experiment(bsys, ctx, init, [2, 10], [2, 4, 6], eta=1e9)
    assert rep.frontier == (2.0, 2.0)
    assert np.all(rep.values >= 0) and rep.members == 3
    with pytest.raises(ValueError):
        tail_experiment(bsys, ctx, init, [2, 10], [2, 7], eta=0.1)
    with pytest.raises(ValueError):
        tail_experiment(bsys, ctx, init, [10, 2], [2], eta=0.1)


def test_report_frontier_logic(tmp_path):
    vals = np.array([[1.0, 0.5, 0.05], [0.5, 0.05, 0.01], [0.05, 0.01, 0.001]])
    rep = TailReport(np.array([5.0, 10, 20]), np.array([2.0, 4, 6]), vals, 0.1, 1)
    assert rep.frontier == (5.0, 6.0)
    assert TailReport(rep.t_schedule, rep.r_schedule, vals + 1, 0.1, 1).frontier is None
    rep.write_csv(tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "t,r=2.0,r=4.0,r=6.0"
