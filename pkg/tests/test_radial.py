import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from finsler_quant import radial
from finsler_quant.radial import (
    DualProfile,
    NotFiniteEnergyError,
    OracleInstabilityError,
    cusp,
    d_p_oracle,
    flat,
    geodesic_t,
    lelong,
    parse_potential,
    rooftop,
    shift,
    ua,
)

seeds = st.integers(0, 2**32 - 1)
X = np.linspace(1e-6, 1 - 1e-6, 201)

# frozen values from scripts/derive_oracles.py (30-digit mpmath quadrature)
CUSP_HALF_ENERGY = {1: 0.663550007434878843, 2: 0.842549739595071630, 3: 1.50706922588840520}
UA_HALF_ENERGY_1 = 0.429203673205103381
SHIFT_PAIR_I1 = 1.07576568547998048


def test_reference_dual_pair():
    s = np.linspace(-30, 30, 61)
    u = flat(0.0)
    assert np.allclose(u.dual(X), radial.g_star(X))
    # conjugation from the dual side reproduces the closed-form profile
    from_dual = radial.from_dual("g*", radial.g_star, radial.g_star_grad, radial.g_star_hess)
    assert np.allclose(from_dual.primal(s), radial.g(s), atol=1e-12)


@pytest.mark.parametrize("spec", ["ua:0.5", "shift:1", "shift:-2", "flat:3", "lelong:0.3"])
def test_closed_form_pairs_are_conjugate(spec):
    u = parse_potential(spec)
    s = np.linspace(-30, 30, 121)
    generic = radial.from_dual("d", u.dual_fn, u.dual_grad_fn, u.dual_hess_fn, support=u.support)
    assert np.allclose(generic.primal(s), u.primal(s), atol=1e-10)
    x = np.linspace(u.support[0] + 1e-6, 1 - 1e-6, 101)
    generic_p = radial.from_primal("p", u.primal_fn, u.primal_grad_fn, u.primal_hess_fn)
    assert np.allclose(generic_p.dual(x), u.dual(x), atol=1e-9)


def test_cusp_profile_and_conjugation():
    u = cusp(0.5)
    s = np.array([-1e4, -1000.0, -100.0, -10.0, 0.0, 10.0])
    x = u.primal_grad(s)
    assert np.allclose(u.dual_grad(x), s, rtol=1e-12)
    # unbounded below, like alpha log(alpha/|s|) - alpha
    vals = u.u(np.array([-1e3, -1e5]))
    assert vals[1] < vals[0] < -2.0
    assert abs(vals[1] - (0.5 * math.log(0.5 / 1e5) - 0.5)) < 1e-3


def test_parse_forms():
    assert parse_potential("ua:a=0.5").meta["a"] == 0.5
    assert parse_potential("ua:1/2").meta["a"] == 0.5
    assert parse_potential("shift:c=-1").meta["c"] == -1.0
    assert parse_potential("cusp:alpha=0.25").meta["alpha"] == 0.25
    assert parse_potential("flat").meta["c"] == 0.0
    for bad in ["foo:1", "ua:b=1", "ua:", "ua:-1", "lelong:1.5", "file:"]:
        with pytest.raises(ValueError):
            parse_potential(bad)


def test_distance_examples():
    assert d_p_oracle(ua(0.5), flat(0.0), 1) == pytest.approx(0.5, rel=1e-9)
    for a in (0.25, 0.8, 2.0):
        assert d_p_oracle(ua(a), flat(0.0), 1) == pytest.approx(0.5 * abs(1 / a - 1), rel=1e-8)
    assert d_p_oracle(shift(1), shift(-1), 1) == pytest.approx(0.5, rel=1e-12)
    assert d_p_oracle(ua(0.5), ua(0.5), 2) == 0.0
    assert d_p_oracle(flat(0.0), flat(1.5), 3) == pytest.approx(1.5)
    assert d_p_oracle(cusp(0.5), flat(0.0), 2) == pytest.approx(0.5 * math.sqrt(2), rel=1e-8)


def test_distance_rejects_lelong():
    with pytest.raises(NotFiniteEnergyError):
        d_p_oracle(lelong(0.2), flat(0.0), 1)


def test_divergence_detected_under_refinement():
    bad = radial.from_dual("1/x", lambda x: radial.g_star(x) + 1.0 / np.asarray(x),
                           lambda x: radial.g_star_grad(x) - 1.0 / np.asarray(x) ** 2)
    with pytest.raises(NotFiniteEnergyError, match="relative to each other"):
        d_p_oracle(bad, flat(0.0), 1)


def test_richardson_raises_on_drift():
    with pytest.raises(OracleInstabilityError):
        radial._richardson(lambda m: 1.0 / m, 16, True, "toy")
    assert radial._richardson(lambda m: 2.0 + 1e-9 / m, 16, True, "toy") == pytest.approx(2.0)


def test_quadrature_rule_exactness():
    x, w = radial.dual_mesh(256)
    assert w.sum() == pytest.approx(1.0, rel=1e-14)
    assert np.dot(w, np.log(x)) == pytest.approx(-1.0, rel=1e-10)
    assert np.dot(w, np.log1p(-x)) == pytest.approx(-1.0, rel=1e-10)
    assert np.dot(w, x ** 5) == pytest.approx(1 / 6, rel=1e-12)
    assert np.all((x > 0) & (x < 1))


def test_geodesic_endpoints_and_speed():
    u0, u1 = ua(0.5), shift(1)
    assert geodesic_t(u0, u1, 0.0) is u0 and geodesic_t(u0, u1, 1.0) is u1
    d = d_p_oracle(u0, u1, 2)
    assert d_p_oracle(geodesic_t(u0, u1, 0.2), geodesic_t(u0, u1, 0.7), 2) == pytest.approx(0.5 * d, rel=1e-6)


def test_rooftop_examples():
    # ua with larger a lies below, so it is the rooftop of the pair
    assert np.allclose(rooftop(ua(0.5), ua(2.0)).dual(X), ua(2.0).dual(X))
    u0, u1 = shift(1), shift(-1)
    p = rooftop(u0, u1)
    assert d_p_oracle(u0, p, 1) == pytest.approx(0.25, rel=1e-9)
    assert d_p_oracle(u1, p, 1) == pytest.approx(0.25, rel=1e-9)
    s = np.linspace(-20, 20, 81)
    assert np.all(p.primal(s) <= np.minimum(u0.primal(s), u1.primal(s)) + 1e-12)


@given(seeds, st.sampled_from([1.0, 2.0, 3.0]))
def test_oracle_pythagorean_and_speed(seed, p):
    rng = np.random.default_rng(seed)
    u0, u1 = radial.random_potential(rng, "a"), radial.random_potential(rng, "b")
    roof = rooftop(u0, u1)
    d = d_p_oracle(u0, u1, p)
    assert abs(d ** p - d_p_oracle(u0, roof, p) ** p - d_p_oracle(roof, u1, p) ** p) < 1e-6 * (1 + d ** p)
    s, t = np.sort(rng.uniform(size=2))
    dst = d_p_oracle(geodesic_t(u0, u1, s), geodesic_t(u0, u1, t), p)
    assert dst == pytest.approx((t - s) * d, rel=1e-6, abs=1e-9)


@given(seeds, st.sampled_from([1.0, 2.0, 3.0]))
def test_potential_lidskii_property(seed, p):
    from finsler_quant.experiments import potential_lidskii_gap
    rng = np.random.default_rng(seed)
    u, v, w = radial.random_ordered_triple(rng)
    assert potential_lidskii_gap(u, v, w, p) >= -1e-8
    assert potential_lidskii_gap(u, u, w, p) == pytest.approx(0.0, abs=1e-12)
    assert potential_lidskii_gap(u, w, w, p) == pytest.approx(0.0, abs=1e-12)


def test_energy_examples():
    assert radial.energy_p(flat(0.0), 2) == pytest.approx(0.0, abs=1e-14)
    assert radial.energy_p(flat(-1.3), 3) == pytest.approx(1.3 ** 3, rel=1e-12)
    assert radial.energy_p(ua(0.5), 1) == pytest.approx(UA_HALF_ENERGY_1, rel=1e-9)
    for p, ref in CUSP_HALF_ENERGY.items():
        assert radial.energy_p(cusp(0.5), p) == pytest.approx(ref, rel=1e-8)
    assert radial.energy_p(lelong(0.3), 1) == math.inf


def test_finite_energy_membership():
    assert radial.is_finite_energy(flat(0.0), 1)
    for p in (1, 2, 5):
        assert radial.is_finite_energy(cusp(0.5), p)
    assert not radial.is_finite_energy(lelong(0.2), 1)


def test_ip_functional():
    assert radial.i_p_functional(ua(0.5), ua(0.5), 2) == pytest.approx(0.0, abs=1e-14)
    ip = radial.i_p_functional(shift(1), shift(-1), 1)
    assert ip == pytest.approx(SHIFT_PAIR_I1, rel=1e-8)
    assert radial.i_p_functional(shift(1), shift(-1), 1, 65536) == pytest.approx(SHIFT_PAIR_I1, rel=1e-10)
    assert ip >= 0.5  # d_1 of the pair


def test_delta_projection():
    u = radial.normalize_below(ua(0.5))
    assert radial.delta_projection(u, 1.0) is u
    c = radial.delta_projection(flat(-2.0), 3.0)
    assert d_p_oracle(c, flat(-6.0), 1) < 1e-12
    errs = [d_p_oracle(radial.delta_projection(u, d), u, 1) for d in (2.0, 1.5, 1.1, 1.01)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.05 * errs[0]
    # monotone in delta and below delta * u
    p2, p3 = radial.delta_projection(u, 2.0), radial.delta_projection(u, 3.0)
    assert np.all(p3.dual(X) >= p2.dual(X) - 1e-10)
    s = np.linspace(-20, 20, 81)
    assert np.all(p3.u(s) <= 3.0 * u.u(s) + 1e-9)


def test_delta_projection_nonconvex_branch():
    u = radial.normalize_below(cusp(0.5))
    p = radial.delta_projection(u, 4.0)
    s = np.linspace(-40, 40, 161)
    assert p.meta.get("family") == "grid"
    assert np.all(p.u(s) <= 4.0 * u.u(s) + 1e-6)
    assert np.all(np.diff(p.primal(s), 2) >= -1e-10)


def test_dual_profile_roundtrip(tmp_path):
    prof = DualProfile.from_potential(ua(0.5), m=1025)
    path = tmp_path / "ua.txt"
    prof.write(path)
    assert path.read_text().splitlines()[0] == "dualprofile m=1025 domain=0,1"
    back = DualProfile.read(path)
    assert np.array_equal(back.values, prof.values)
    u = parse_potential(f"file:{path}")
    assert d_p_oracle(u, ua(0.5), 1, check=False) < 1e-5


def test_dual_profile_with_infinite_segment(tmp_path):
    x = np.linspace(0, 1, 101)
    vals = np.where(x < 0.3, np.inf, radial.g_star(x))
    prof = DualProfile(x, vals)
    prof.write(tmp_path / "l.txt")
    u = DualProfile.read(tmp_path / "l.txt").to_potential()
    assert u.support[0] == pytest.approx(0.3) and not u.full_mass


def test_dual_profile_rejects_bad_files(tmp_path):
    (tmp_path / "a.txt").write_text("dualprofile m=3 domain=0,1\n0 0\n0.5 1\n")
    with pytest.raises(ValueError):
        DualProfile.read(tmp_path / "a.txt")
    (tmp_path / "b.txt").write_text("dualprofile m=3 domain=0,1\n0 0\n0.5 1\n1 0\n")
    with pytest.raises(ValueError):
        parse_potential(f"file:{tmp_path / 'b.txt'}")


def test_solver_clamps_and_converges():
    out = radial.solve_increasing(np.tanh, np.array([-2.0, 0.5, 2.0]), -10.0, 10.0)
    assert out[0] == -10.0 and out[2] == 10.0
    assert out[1] == pytest.approx(np.arctanh(0.5), abs=1e-13)
