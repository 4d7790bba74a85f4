import math

import pytest
from hypothesis import given, strategies as st

from stochwave.params import InvalidParams, Params, decay_rate_sigma, max_noise_intensity, validate


def test_pstar_valid_and_constants(pstar):
    assert validate(pstar) == []
    assert pstar.a == 0.8125
    assert max_noise_intensity(pstar) == 1 / 3
    assert decay_rate_sigma(pstar) == 0.25


def test_beta_three_delta_boundary_is_invalid():
    bad = validate(Params(delta=1 / 3))
    assert any("beta - 3*delta" in b for b in bad)


def test_negative_a_is_invalid():
    bad = validate(Params(alpha=0.1, beta=2.0, delta=0.5))
    assert any("alpha + delta^2" in b for b in bad)
    assert Params(alpha=0.1, beta=2.0, delta=0.5).a == pytest.approx(-0.65)


def test_non_finite_is_distinct():
    bad = validate(Params(alpha=math.nan))
    assert bad and all(b.startswith("non-finite field") for b in bad)
    with pytest.raises(InvalidParams):
        max_noise_intensity(Params(beta=math.inf))


def test_eps_max_near_two():
    p = Params(delta=1.0, beta=4.0, c2=1.0, c3=1.0, p=2 + 1e-9, c1=1.0, epsilon=0.0)
    assert max_noise_intensity(p) == pytest.approx(2.0, rel=1e-8)


def test_eps_max_decreasing_in_c1():
    vals = [max_noise_intensity(Params(c1=c)) for c in (1, 10, 100, 1e6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-6


def test_sigma_cases():
    assert decay_rate_sigma(Params(epsilon=0.0)) == 0.25
    p = Params(epsilon=1 / 3 - 1e-9)
    s = decay_rate_sigma(p)
    assert 0 < s < 1e-8
    with pytest.raises(InvalidParams, match="validate"):
        decay_rate_sigma(Params(epsilon=0.5))


@given(
    alpha=st.floats(-1, 3), beta=st.floats(-0.5, 3), delta=st.floats(-0.5, 1.5), eps=st.floats(-0.1, 1),
    p=st.floats(1.5, 8), c1=st.floats(0.01, 3), c2=st.floats(0.01, 8), c3=st.floats(0.01, 2),
)
def test_validate_matches_direct_inequalities(alpha, beta, delta, eps, p, c1, c2, c3):
    prm = Params(alpha, beta, delta, eps, p, c1, c2, c3, 1)
    direct = (p > 2 and alpha > 0 and beta > 0 and delta > 0 and eps >= 0 and c1 > 0 and c2 > 0 and c3 > 0
              and alpha + delta**2 - beta * delta > 0 and beta - 3 * delta > 0
              and eps < delta * c2 * c3 * p / (c1 * (p - 1)))
    assert (validate(prm) == []) == direct
    if direct:
        assert decay_rate_sigma(prm) > 0
