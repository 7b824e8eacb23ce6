import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import betaln, gammaln

from finsler_quant import radial
from finsler_quant.finsler import d_pk
from finsler_quant.qmetric import QuantizedMetric
from finsler_quant.quantize import (
    DivergentIntegralError,
    NonDiagonalError,
    bergman_density,
    fs_map,
    hilbert_map,
    hilbert_map_2d,
    max_principle_check,
    positivity_margin,
    quantized_geodesic,
    quantum_rooftop,
)
from finsler_quant.radial import flat, shift, ua

S = np.linspace(-30, 30, 121)

# frozen from scripts/derive_oracles.py
UA_HALF_K8 = {0: -4.71931665239937094, 3: -11.3765486878555602, 8: -4.71931665239937094}


def log_binom(k, j):
    return gammaln(k + 1) - gammaln(j + 1) - gammaln(k - j + 1)


@pytest.mark.parametrize("k", [1, 2, 7, 64, 300])
def test_hilbert_of_reference_is_beta(k):
    j = np.arange(k + 1)
    got = hilbert_map(flat(0.0), k).log_diag
    assert np.allclose(got, betaln(j + 1, k - j + 1), rtol=1e-12, atol=1e-12)


def test_hilbert_level_one():
    assert np.allclose(hilbert_map(flat(0.0), 1).diag, [0.5, 0.5], rtol=1e-13)


def test_hilbert_frozen_values():
    got = hilbert_map(ua(0.5), 8).log_diag
    for j, ref in UA_HALF_K8.items():
        assert got[j] == pytest.approx(ref, rel=1e-12)


@given(st.floats(-3, 3), st.sampled_from([3, 16, 40]))
def test_hilbert_shift_scaling(c, k):
    a = hilbert_map(ua(0.7), k)
    b = hilbert_map(radial.shifted(ua(0.7), c), k)
    assert np.allclose(b.log_diag, a.log_diag - k * c, rtol=0, atol=1e-10 * (1 + k * abs(c)))


def test_hilbert_reverses_order():
    # ua(2) <= ua(0.5) pointwise
    assert np.all(hilbert_map(ua(2.0), 10).log_diag >= hilbert_map(ua(0.5), 10).log_diag)


def test_hilbert_rejects_non_full_mass():
    with pytest.raises(DivergentIntegralError):
        hilbert_map(radial.lelong(0.3), 4)
    with pytest.raises(ValueError):
        hilbert_map(flat(0.0), 0)


@pytest.mark.parametrize("k", [2, 5])
def test_radial_forms_are_diagonal(k):
    u = ua(0.5)
    full = hilbert_map_2d(u, k).form.entries
    diag = hilbert_map(u, k).diag
    off = full - np.diag(np.diag(full))
    assert np.abs(off).max() < 1e-12 * diag.max()
    assert np.allclose(np.real(np.diag(full)), diag, rtol=1e-9)


def test_fs_of_binomial_weights_is_reference():
    for k in (1, 4, 33):
        j = np.arange(k + 1)
        gm = QuantizedMetric(k, log_diag=-log_binom(k, j))
        u = fs_map(gm)
        assert np.allclose(u.primal(S), radial.g(S), atol=1e-12)
        assert np.allclose(u.u(S), 0.0, atol=1e-12)


@pytest.mark.parametrize("k", [1, 3, 17, 128])
def test_fs_hilbert_of_reference(k):
    u = fs_map(hilbert_map(flat(0.0), k))
    assert np.allclose(u.u(S), math.log(k + 1) / k, rtol=1e-10)
    # the dual side agrees with the primal side
    assert radial.d_p_oracle(u, flat(math.log(k + 1) / k), 1) < 1e-9


def test_fs_scaling():
    gm = hilbert_map(ua(0.5), 12)
    a, b = fs_map(gm), fs_map(gm.shifted(0.4))
    assert np.allclose(b.u(S), a.u(S) + 0.4, atol=1e-12)


def test_fs_derivatives():
    u = fs_map(hilbert_map(ua(0.5), 9))
    h = 1e-5
    fd = (u.primal(S + h) - u.primal(S - h)) / (2 * h)
    assert np.allclose(u.primal_grad(S), fd, atol=1e-8)
    fd2 = (u.primal_grad(S + h) - u.primal_grad(S - h)) / (2 * h)
    assert np.allclose(u.primal_hess(S), fd2, atol=1e-7)


def test_fs_rejects_full_forms():
    from finsler_quant import sampling
    gm = QuantizedMetric(3, form=sampling.random_spd(np.random.default_rng(0), 4))
    with pytest.raises(NonDiagonalError):
        fs_map(gm)


@pytest.mark.parametrize("k", [1, 6, 50])
def test_bergman_density_of_reference_is_one(k):
    assert np.allclose(bergman_density(flat(0.0), k, S), 1.0, rtol=1e-11)
    assert np.allclose(bergman_density(flat(2.5), k, S), 1.0, rtol=1e-10)


def test_bergman_density_tracks_curvature_ratio():
    # the volume ratio of ua(a) at s = 0 is a
    vals = [float(bergman_density(ua(0.5), k, np.array([0.0]))[0]) for k in (8, 32, 128)]
    errs = [abs(v - 0.5) for v in vals]
    assert errs[2] < errs[1] < errs[0] and errs[2] < 0.01


def test_quantized_geodesic_properties():
    g0, g1 = hilbert_map(ua(0.5), 16), hilbert_map(shift(1), 16)
    assert quantized_geodesic(g0, g1, 0.0) is g0 and quantized_geodesic(g0, g1, 1.0) is g1
    for p in (1.0, 2.0, 3.0):
        d = d_pk(g0, g1, p)
        assert d_pk(g0, quantized_geodesic(g0, g1, 0.3), p) == pytest.approx(0.3 * d, rel=1e-12)
    mid = quantized_geodesic(g0, g1, 0.5).log_diag
    assert np.allclose(mid, 0.5 * (g0.log_diag + g1.log_diag))


def test_full_form_geodesic_matches_diagonal_path():
    g0 = QuantizedMetric.from_diag(2, [1.0, 2.0, 5.0])
    g1 = QuantizedMetric.from_diag(2, [3.0, 0.5, 5.0])
    full = quantized_geodesic(QuantizedMetric(2, form=g0.as_form()), QuantizedMetric(2, form=g1.as_form()), 0.25)
    assert np.allclose(np.real(np.diag(full.form.entries)), quantized_geodesic(g0, g1, 0.25).diag)


def test_quantum_rooftop_diagonal():
    g0 = QuantizedMetric(2, log_diag=np.array([0.0, 1.0, -1.0]))
    g1 = QuantizedMetric(2, log_diag=np.array([0.5, -2.0, -1.0]))
    assert np.array_equal(quantum_rooftop(g0, g1).log_diag, [0.5, 1.0, -1.0])
    for p in (1.0, 2.0):
        d, a, b = d_pk(g0, g1, p), d_pk(g0, quantum_rooftop(g0, g1), p), d_pk(quantum_rooftop(g0, g1), g1, p)
        assert d ** p == pytest.approx(a ** p + b ** p)


@given(st.floats(-5, 5), st.sampled_from([1.0, 2.0, 3.0]))
def test_scaled_distance_ignores_common_shift(c, p):
    g0, g1 = hilbert_map(ua(0.5), 8), hilbert_map(shift(1), 8)
    assert d_pk(g0.shifted(c), g1.shifted(c), p) == pytest.approx(d_pk(g0, g1, p), rel=1e-12, abs=1e-13)


TIMES = (0.25, 0.5, 0.75)


def test_max_principle_constant_and_affine_curves():
    const = max_principle_check(lambda t: ua(0.5), TIMES, 16)
    assert const.hypothesis_ok and abs(const.violation) < 1e-12
    affine = max_principle_check(lambda t: radial.shifted(ua(0.5), 2 * t), TIMES, 16)
    assert affine.hypothesis_ok and abs(affine.violation) < 1e-9
    assert affine.margin == pytest.approx(0.5, rel=1e-3)


def test_max_principle_on_geodesic():
    u0, u1 = ua(0.5), shift(1)
    rep = max_principle_check(lambda t: radial.geodesic_t(u0, u1, t), TIMES, 24)
    assert rep.margin == pytest.approx(0.0, abs=1e-9)
    assert rep.status == "ok" and rep.violation <= 1e-8


def test_max_principle_flags_supergeodesic():
    u0, u1 = ua(0.5), shift(1)
    curve = lambda t: radial.shifted(radial.geodesic_t(u0, u1, t), t * (1 - t))  # noqa: E731
    assert positivity_margin(curve, TIMES) == -math.inf
    rep = max_principle_check(curve, TIMES, 8, eps=0.0)
    assert rep.status == "hypothesis not satisfied"


def test_strict_positivity_demand_fails_on_geodesic():
    u0, u1 = ua(0.5), shift(1)
    rep = max_principle_check(lambda t: radial.geodesic_t(u0, u1, t), TIMES, 8, eps=0.1)
    assert not rep.hypothesis_ok
