import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tractdyn.errors import DerivativeUnstable, UnknownModel
from tractdyn.functions import (POLE_RADIUS, CallableModel, derivative, digamma, evaluate, gamma,
                                loggamma, make_model, numeric_derivative, wrap_phase)

EULER = 0.5772156649015329


def test_exp_at_zero_is_one():
    v = evaluate(make_model("exp"), 0)
    assert v.is_finite
    assert v.value == pytest.approx(1.0, abs=1e-15)


def test_exp_overflow_reports_log_modulus():
    v = evaluate(make_model("exp"), 1000)
    assert v.is_overflow
    assert v.log_modulus == pytest.approx(1000.0)
    assert v.phase == pytest.approx(0.0, abs=1e-12)


def test_example1_near_zero_is_small():
    v = evaluate(make_model("example1:lambda=1"), 1e-8)
    assert v.is_finite
    assert abs(v.value) < 1e-6


def test_gamma_at_one():
    assert gamma(1).value == pytest.approx(1.0, abs=1e-13)


def test_gamma_half_against_quadrature():
    # independent oracle: the integral definition, integrated by mpmath
    with mpmath.workdps(30):
        ref = mpmath.quad(lambda t: t ** (-0.5) * mpmath.e ** (-t), [0, 1, mpmath.inf])
    assert gamma(0.5).value.real == pytest.approx(float(ref), abs=1e-10)
    assert abs(gamma(0.5).value.imag) < 1e-14


@pytest.mark.parametrize("z", [0, -1, -2, -7])
def test_gamma_poles(z):
    assert gamma(z).is_pole
    assert gamma(z + 0.5 * POLE_RADIUS).is_pole


@pytest.mark.parametrize("z", [0.3 + 0.2j, 2.5, -3.7 + 1j, 12 - 5j, -0.5, 30 + 40j, 0.01 - 9j])
def test_loggamma_matches_mpmath(z):
    ref = complex(mpmath.loggamma(z))
    got = complex(loggamma(np.array([z]))[0])
    # any branch of log is acceptable: compare modulus and phase mod 2 pi
    assert got.real == pytest.approx(ref.real, abs=1e-10 * max(1, abs(ref.real)))
    assert abs(wrap_phase(got.imag - ref.imag)) < 1e-9 * max(1, abs(ref))


@pytest.mark.parametrize("z", [1.0, 2.0, 0.5 + 3j, 10.0, -2.5 + 0.1j, 50 + 1j])
def test_digamma_matches_mpmath(z):
    got = complex(digamma(np.array([z]))[0])
    assert got == pytest.approx(complex(mpmath.digamma(z)), rel=1e-10, abs=1e-12)


def test_numeric_derivative_exp():
    d = numeric_derivative(make_model("exp"), 2.0)
    assert d.value == pytest.approx(math.e ** 2, rel=1e-7)


def test_numeric_derivative_gamma_shift1():
    d = numeric_derivative(make_model("gamma_shift1"), 1.0)
    assert d.value.real == pytest.approx(1 - EULER, abs=1e-6)


def test_numeric_derivative_example1_superattracting():
    d = numeric_derivative(make_model("example1:lambda=1"), 1e-7)
    assert abs(d.value) < 1e-3


def test_numeric_derivative_near_pole_is_unstable():
    with pytest.raises(DerivativeUnstable):
        numeric_derivative(make_model("gamma"), 0.01)


@pytest.mark.parametrize("name,z", [("exp", 1 + 2j), ("expexp", 0.3 - 0.4j),
                                    ("example1:lambda=2", 1.5 + 0.5j), ("gamma", 2.2 + 1j),
                                    ("gamma_shift1", -0.4 + 0.7j), ("gamma_cos", 1.1 - 0.3j)])
def test_analytic_derivative_agrees_with_numeric(name, z):
    m = make_model(name)
    assert derivative(m, z).value == pytest.approx(numeric_derivative(m, z).value, rel=1e-6)


def test_example1_against_mpmath():
    m = make_model("example1:lambda=2")
    for z in (2.0 + 1j, -3.0 + 0.5j, 7.0, 40 + 3j):
        z = complex(z)
        ref = 2 * (mpmath.exp(2 * z) - 1) / (mpmath.exp(z) - 1 / mpmath.mpc(z))
        assert evaluate(m, z).value == pytest.approx(complex(ref), rel=1e-10)


def test_gamma_cos_value():
    m = make_model("gamma_cos")
    z = 1.3 - 0.2j
    ref = complex(mpmath.gamma(z + 1) * mpmath.cos(z))
    assert evaluate(m, z).value == pytest.approx(ref, rel=1e-11)


def test_expexp_overflow_is_reported():
    v = evaluate(make_model("expexp"), 800)
    assert v.is_overflow


def test_make_model_selection_strings():
    assert make_model("example1:lambda=1/2").params["lambda"] == 0.5
    assert make_model("example1:lambda=2,1").params["lambda"] == 2 + 1j
    assert make_model("example1", **{"lambda": -1}).params["lambda"] == -1
    for bad in ("nope", "exp:lambda=1", "example1:lambda=0", "example1:mu=1", "example1:lambda=x"):
        with pytest.raises(UnknownModel):
            make_model(bad)


def test_callable_model():
    m = CallableModel(func=lambda z: np.exp(z) + z)
    assert evaluate(m, 0.5).value == pytest.approx(math.exp(0.5) + 0.5)
    assert numeric_derivative(m, 0.5).value == pytest.approx(math.exp(0.5) + 1, rel=1e-7)


@settings(max_examples=60, deadline=None)
@given(st.floats(-30, 30), st.floats(-30, 30))
def test_gamma_recurrence(x, y):
    z = complex(x, y)
    g = make_model("gamma")
    a = complex(loggamma(np.array([z + 1]))[0])
    b = complex(loggamma(np.array([z]))[0])
    if abs(z) < 1e-3 or min(abs(z + k) for k in range(40)) < 1e-6:
        return
    diff = a - b - cmath.log(z)
    assert abs(diff.real) < 1e-9 * max(1.0, abs(a), abs(b))
    assert abs(wrap_phase(diff.imag)) < 1e-8 * max(1.0, abs(a), abs(b))
    del g


@settings(max_examples=60, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50))
def test_real_symmetry(x, y):
    for name in ("gamma", "example1:lambda=1", "gamma_cos"):
        m = make_model(name)
        v, w = evaluate(m, complex(x, y)), evaluate(m, complex(x, -y))
        if v.is_finite and w.is_finite:
            assert v.value.conjugate() == pytest.approx(w.value, rel=1e-9, abs=1e-300)
