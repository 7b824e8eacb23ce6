import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import expit, logit

from finsler_quant.legendre import NonConvexError, check_convex, convex_envelope, legendre, lower_hull


def g_star(x):
    return x * np.log(x) + (1 - x) * np.log1p(-x)


def test_reference_profile_conjugate():
    m = 4096
    xj = (np.arange(m) + 0.5) / m
    s = np.concatenate([[-40.0], logit(xj), [40.0]])
    f = np.logaddexp(0.0, s)
    assert np.max(np.abs(legendre(s, f, xj) - g_star(xj))) < 1e-6
    assert abs(legendre(s, f, np.array([0.0, 1.0]))).max() < 1e-6


def test_scaled_profile_conjugate():
    a = 0.5
    m = 4096
    xj = (np.arange(m) + 0.5) / m
    s = np.concatenate([[-200.0], logit(xj) / a, [200.0]])
    f = np.logaddexp(0.0, a * s) / a
    assert np.max(np.abs(legendre(s, f, xj) - g_star(xj) / a)) < 1e-6


def test_linear_function_conjugate():
    s = np.linspace(-50, 50, 1001)
    c = 0.3
    out = legendre(s, c * s, np.array([0.1, 0.3, 0.6]))
    assert out[1] == pytest.approx(0.0, abs=1e-12)
    # away from the slope the conjugate grows with the grid extent (stand-in for +inf)
    assert out[0] == pytest.approx(10.0) and out[2] == pytest.approx(15.0)


def test_dual_to_primal_direction():
    x = np.linspace(0.0, 1.0, 2001)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.nan_to_num(g_star(x))
    s = np.linspace(-5, 5, 11)
    assert np.allclose(legendre(x, d, s), np.logaddexp(0, s), atol=1e-3)


def test_nonconvex_input_reports_location():
    a = np.linspace(0, 1, 11)
    f = a ** 2
    f[6] += 0.1
    with pytest.raises(NonConvexError) as err:
        check_convex(a, f)
    assert err.value.index in (5, 6, 7)
    assert err.value.amount > 0
    # unchecked: conjugate of the envelope
    assert np.allclose(legendre(a, f, np.array([0.3]), check=False), legendre(a, a ** 2, np.array([0.3])))


def test_infinite_values_are_excluded():
    a = np.linspace(0, 1, 5)
    f = np.array([np.inf, 0.0, 0.0, 0.0, np.inf])
    assert legendre(a, f, np.array([1.0]))[0] == pytest.approx(0.75)
    assert legendre(a, f, np.array([-1.0]))[0] == pytest.approx(-0.25)


@given(st.integers(0, 2**32 - 1))
def test_hull_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    a = np.sort(rng.uniform(-3, 3, 40))
    a = a[np.concatenate([[True], np.diff(a) > 1e-9])]
    f = rng.normal(size=a.size)
    ha, hf = lower_hull(a, f)
    y = rng.uniform(-20, 20, 50)
    brute = np.max(y[:, None] * a[None, :] - f[None, :], axis=1)
    assert np.allclose(legendre(a, f, y, check=False), brute, atol=1e-12)
    env = convex_envelope(a, f)
    assert np.all(env <= f + 1e-12)
    check_convex(ha, hf)


@given(st.integers(0, 2**32 - 1))
def test_biconjugate_of_convex_data(seed):
    rng = np.random.default_rng(seed)
    a = np.linspace(-2, 2, 81)
    f = rng.uniform(0.1, 2) * a ** 2 + rng.uniform(-1, 1) * a + np.abs(a - rng.uniform(-1, 1))
    slopes = np.linspace(-20, 20, 8001)
    dual = legendre(a, f, slopes)
    back = legendre(slopes, dual, a)
    assert np.allclose(back, f, atol=1e-2)
