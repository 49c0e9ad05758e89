import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qchopper.errors import ProtocolError
from qchopper.protocol import (
    DriveProtocol,
    eval_g,
    eval_g_dot,
    eval_gamma,
    make_constant,
    make_custom,
    make_on_off,
    make_sign_change,
    rate_spectrum,
)

PI = math.pi


def test_on_off_values():
    p = make_on_off(1.0, 1.0)
    assert eval_g(p, 0.0) == pytest.approx(2.0, abs=1e-14)
    assert eval_g(p, PI) == pytest.approx(0.0, abs=1e-14)
    assert eval_g(p, PI / 2) == pytest.approx(1.0, abs=1e-14)
    rs = rate_spectrum(p)
    assert rs.gamma0 == pytest.approx(1.5 * PI)
    assert rs.gamma_harmonics[1] == pytest.approx(PI)
    assert rs.gamma_harmonics[-1] == pytest.approx(PI)
    assert rs.gamma_harmonics[2] == pytest.approx(PI / 4)
    assert rs.beta == pytest.approx(1 / (1.5 * PI))


def test_sign_change_values():
    p = make_sign_change(1.0, 1.0)
    assert eval_g(p, 0.0) == pytest.approx(1.0)
    assert eval_g(p, PI) == pytest.approx(-1.0)
    assert eval_g(p, PI / 2) == pytest.approx(0.0, abs=1e-15)
    rs = rate_spectrum(p)
    assert rs.gamma0 == pytest.approx(PI / 2)
    assert rs.gamma_harmonics[2] == pytest.approx(PI / 4)
    assert abs(rs.gamma_harmonics.get(1, 0)) == 0
    assert rs.beta == pytest.approx(2 / PI)


def test_constant_values():
    rs = rate_spectrum(make_constant(1.0))
    assert dict(rs.gamma_harmonics) == {0: pytest.approx(PI)}
    assert eval_gamma(rs, np.linspace(0, 10, 7)) == pytest.approx(np.full(7, PI))
    assert rate_spectrum(make_constant(2.0)).gamma0 == pytest.approx(4 * PI)
    zero = rate_spectrum(make_constant(0.0))
    assert zero.gamma0 == 0 and zero.degenerate and zero.beta == math.inf


@pytest.mark.parametrize("bad", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
def test_constructors_reject_non_positive(bad):
    with pytest.raises(ProtocolError):
        make_on_off(*bad)
    with pytest.raises(ProtocolError):
        make_sign_change(*bad)


def test_constant_rejects_negative():
    with pytest.raises(ProtocolError):
        make_constant(-0.1)


def test_custom_reality_checked():
    with pytest.raises(ProtocolError):
        make_custom([(1, 1.0, 0.5), (-1, 1.0, 0.5)], 1.0)
    with pytest.raises(ProtocolError):
        make_custom([(1, 1.0, 0.0)], 1.0)
    with pytest.raises(ProtocolError):
        make_custom([(0, 1.0, 0.0), (0, 2.0, 0.0)], 1.0)
    p = make_custom([(2, 0.3, 0.1), (-2, 0.3, -0.1), (0, 0.5, 0.0)], 2.0)
    assert p.support == 2


def test_protocol_is_immutable():
    p = make_on_off(1.0, 1.0)
    with pytest.raises(TypeError):
        p.harmonics[0] = 3.0
    with pytest.raises(Exception):
        p.omega = 2.0


def test_g_dot_finite_difference():
    p = make_custom([(1, 0.4, 0.2), (-1, 0.4, -0.2), (3, 0.1, -0.3), (-3, 0.1, 0.3)], 1.7)
    t = np.linspace(-2, 2, 9)
    h = 1e-5
    fd = (eval_g(p, t + h) - eval_g(p, t - h)) / (2 * h)
    assert np.allclose(eval_g_dot(p, t), fd, atol=1e-8)


# -- properties -----------------------------------------------------------------

coef = st.floats(-2, 2, allow_nan=False)


@st.composite
def protocols(draw):
    K = draw(st.integers(0, 4))
    triples = [(0, draw(coef), 0.0)]
    for m in range(1, K + 1):
        re, im = draw(coef), draw(coef)
        triples += [(m, re, im), (-m, re, -im)]
    omega = draw(st.floats(0.05, 20))
    return make_custom(triples, omega)


@given(protocols(), st.floats(-50, 50))
def test_rate_matches_pi_g_squared(p, t):
    rs = rate_spectrum(p)
    assert abs(eval_gamma(rs, t) - PI * eval_g(p, t) ** 2) < 1e-10


@given(protocols())
def test_rate_hermitian_and_support(p):
    rs = rate_spectrum(p)
    for m, v in rs.gamma_harmonics.items():
        assert rs.gamma_harmonics.get(-m, 0) == pytest.approx(np.conj(v), abs=1e-14)
    assert rs.support <= 2 * p.support
    if p.support and abs(p.harmonics[p.support]) > 1e-3:
        assert rs.support == 2 * p.support


@given(protocols(), st.floats(-30, 30))
def test_g_periodic(p, t):
    assert eval_g(p, t + p.period) == pytest.approx(eval_g(p, t), abs=1e-12 * max(1, abs(t)))


@given(protocols())
def test_harmonics_hermitian(p):
    for m, v in p.harmonics.items():
        assert p.harmonics[-m] == np.conj(v)


def test_zero_omega_rejected():
    with pytest.raises(ProtocolError):
        DriveProtocol({0: 1.0}, 0.0)
    with pytest.raises(ProtocolError):
        DriveProtocol({0: 1.0}, math.nan)
