"""Randomized property checks of the matrix layer.

Each check draws its own instances from ``rng`` and returns
``(worst, tol)``: the worst observed defect (larger is worse) and the
tolerance it must stay under.
"""
from __future__ import annotations

import numpy as np

from . import finsler, sampling, spectral
from .spectral import HermitianForm

P_VALUES = (1.0, 2.0, 3.0)


def _dim(rng, dim):
    return int(rng.integers(1, dim + 1))


def _cplx(rng):
    return bool(rng.integers(2))


def congruence_invariance(rng, count, dim):
    worst = 0.0
    for i in range(count):
        n = _dim(rng, dim)
        c = _cplx(rng)
        h0, h1 = sampling.random_spd(rng, n, complex_=c), sampling.random_spd(rng, n, complex_=c)
        a = sampling.random_invertible(rng, n, c)
        p = P_VALUES[i % 3]
        d = finsler.d_p(h0, h1, p)
        d2 = finsler.d_p(HermitianForm(a @ h0.entries @ a.conj().T), HermitianForm(a @ h1.entries @ a.conj().T), p)
        worst = max(worst, abs(d - d2) / (1 + d))
    return worst, 1e-9


def pythagorean(rng, count, dim):
    worst = 0.0
    for i in range(count):
        n = _dim(rng, dim)
        c = _cplx(rng)
        h0, h1 = sampling.random_spd(rng, n, complex_=c), sampling.random_spd(rng, n, complex_=c)
        worst = max(worst, finsler.pythagorean_residual(h0, h1, P_VALUES[i % 3]))
    return worst, 1e-9


def lidskii(rng, count, dim, p_values=(1.0, 1.5, 2.0, 3.0)):
    worst = 0.0
    for i in range(count):
        n = _dim(rng, dim)
        a, b = sampling.random_ordered_pair(rng, n, complex_=_cplx(rng))
        worst = max(worst, -spectral.lidskii_gap(a, b, p_values[i % len(p_values)]))
    return worst, 1e-9


def young(rng, count, dim):
    weights = [finsler.lp_weight(p) for p in P_VALUES] + [finsler.cosh_weight()]
    worst = 0.0
    for i in range(count):
        n = _dim(rng, dim)
        c = _cplx(rng)
        h = sampling.random_spd(rng, n, complex_=c)
        u = spectral.TangentForm(sampling.random_hermitian(rng, n, complex_=c))
        v = spectral.TangentForm(sampling.random_hermitian(rng, n, complex_=c))
        chi = weights[i % len(weights)]
        ident = abs(finsler.young_identity_residual(chi, u, h))
        scale = 1.0 + float(np.abs(np.linalg.eigvalsh(h.reduce(u.entries))).max()) ** 3
        worst = max(worst, ident / scale, -finsler.young_inequality_gap(chi, u, v, h) / scale)
    return worst, 1e-9


def power_mean_monotone(rng, count, dim):
    ps = np.array([1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 8.0])
    worst = 0.0
    for _ in range(count):
        n = _dim(rng, dim)
        h0, h1 = sampling.random_spd(rng, n), sampling.random_spd(rng, n)
        d = np.array([finsler.d_p(h0, h1, p) for p in ps])
        worst = max(worst, float(np.max(d[:-1] - d[1:])) / (1 + d[-1]))
    return worst, 1e-12


def constant_speed(rng, count, dim):
    worst = 0.0
    for i in range(count):
        n = _dim(rng, dim)
        h0, h1 = sampling.random_spd(rng, n), sampling.random_spd(rng, n)
        p = P_VALUES[i % 3]
        total = finsler.d_p(h0, h1, p)
        s, t = np.sort(rng.uniform(0, 1, 2))
        d = finsler.d_p(finsler.geodesic(h0, h1, s), finsler.geodesic(h0, h1, t), p)
        worst = max(worst, abs(d - (t - s) * total) / (1 + total))
    return worst, 1e-9


def path_minimality(rng, count, dim, samples: int = 64):
    """Broken-line length of the straight segment ``(1-t) h0 + t h1`` versus ``d_chi``."""
    weights = [finsler.lp_weight(p) for p in P_VALUES] + [finsler.cosh_weight()]
    times = np.linspace(0.0, 1.0, samples)
    worst = -np.inf
    for i in range(count):
        n = _dim(rng, dim)
        c = _cplx(rng)
        h0, h1 = sampling.random_spd(rng, n, complex_=c), sampling.random_spd(rng, n, complex_=c)
        chi = weights[i % len(weights)]
        path = [HermitianForm((1 - t) * h0.entries + t * h1.entries) for t in times]
        deficit = finsler.d_chi(h0, h1, chi) - finsler.path_length(times, path, chi)
        worst = max(worst, deficit)
    return worst, 1e-8


MATRIX_PROPERTIES = (
    ("congruence", congruence_invariance),
    ("pythagorean", pythagorean),
    ("lidskii", lidskii),
    ("young", young),
    ("power-mean", power_mean_monotone),
    ("constant-speed", constant_speed),
    ("path-minimality", path_minimality),
)
