import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochwave.nonlin import F_eval, Nonlinearity, f_eval, verify_assumption2
from stochwave.params import Params, max_noise_intensity


nl4 = Nonlinearity(4.0)


def test_values():
    assert f_eval(0.0, nl4) == 0.0
    assert f_eval(2.0, nl4) == 8.0
    assert f_eval(-2.0, nl4) == -8.0
    assert F_eval(0.0, nl4) == 0.0
    assert F_eval(2.0, nl4) == 4.0


def test_assumption2_exact_margins():
    rep = verify_assumption2(nl4, np.linspace(-10, 10, 2001))
    assert rep.ok
    assert rep.coercive_margin == pytest.approx(0.0, abs=1e-12 * 1e4)
    assert rep.lower_margin == pytest.approx(0.0, abs=1e-12 * 1e4)


def test_wrong_c2_reported():
    rep = verify_assumption2(nl4, [1.0], constants=(1.0, 5.0, 0.25))
    assert not rep.ok
    assert rep.coercive_margin == pytest.approx(-0.25)
    assert rep.coercive_argmin == 1.0


def test_zero_sample():
    rep = verify_assumption2(nl4, [0.0])
    assert rep.ok and rep.growth_margin == rep.coercive_margin == rep.lower_margin == 0.0


@given(st.floats(0.01, 5) | st.floats(-5, -0.01), st.floats(2.1, 8))
def test_derivative_and_signs(u, p):
    nl = Nonlinearity(p)
    h = 1e-5
    fd = (F_eval(u + h, nl) - F_eval(u - h, nl)) / (2 * h)
    assert fd == pytest.approx(f_eval(u, nl), rel=1e-6, abs=1e-9)
    assert u * f_eval(u, nl) >= 0 and F_eval(u, nl) >= 0
    assert F_eval(u, nl) == F_eval(-u, nl)


def test_canonical_eps_max():
    for p in (3.0, 4.0, 6.0):
        prm = Params(p=p, c1=1.0, c2=p, c3=1 / p)
        assert max_noise_intensity(prm) == pytest.approx(prm.delta * p / (p - 1))


def test_bad_kind():
    with pytest.raises(ValueError):
        Nonlinearity(4.0, "cubic")
    with pytest.raises(ValueError):
        Nonlinearity(2.0)
