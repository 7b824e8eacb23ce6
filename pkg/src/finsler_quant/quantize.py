"""Hilbert and Fubini-Study maps between radial potentials and level-k forms."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import expit, logsumexp

from . import finsler
from .qmetric import LevelMismatchError, QuantizedMetric
from .radial import (
    RadialPotential,
    from_primal,
    g,
    g_grad,
    g_hess,
    solve_increasing,
)

TAIL_DROP = 40.0  # log-drop from the peak at which integration windows end
HILBERT_RTOL = 1e-13
S_CAP = 1e5


class DivergentIntegralError(ValueError):
    """Hilbert-map integral diverges: the potential has a positive Lelong number."""


class NonDiagonalError(ValueError):
    pass


def _log_integrand(u: RadialPotential, k: int, j: np.ndarray, s: np.ndarray) -> np.ndarray:
    # log of e^{js} (1+e^s)^{-k} e^{-k u} times the density e^s/(1+e^s)^2 of omega
    return (j + 1.0) * s - k * u.primal(s) - 2.0 * g(s)


def _expand(F, start, target, direction):
    """Push ``start`` in ``direction`` until ``F`` crosses ``target`` (vectorized doubling)."""
    step = np.ones_like(start)
    z = start + direction * step
    for _ in range(80):
        bad = F(z) < target if direction > 0 else F(z) > target
        if not np.any(bad):
            return z
        step = np.where(bad, 2.0 * step, step)
        z = np.where(bad, start + direction * step, z)
        if np.any(np.abs(z) > S_CAP):
            raise DivergentIntegralError("integration window does not close; integrand decays too slowly")
    raise DivergentIntegralError("integration window does not close")


def integration_windows(u: RadialPotential, k: int):
    """Peak location, peak log-value and window ``[a_j, b_j]`` of each integrand.

    The exponent is concave in ``s`` (``phi`` and ``g`` are convex), so outside
    the window where it is within ``TAIL_DROP`` of its peak the neglected mass
    is at most ``2 exp(-TAIL_DROP)`` of the total.
    """
    j = np.arange(k + 1, dtype=float)

    def slope_total(s):
        # k phi'(s) + 2 g'(s), increasing; the peak solves slope_total = j + 1
        return k * u.primal_grad(s) + 2.0 * g_grad(s)

    d_slope = None
    if u.primal_hess(np.zeros(1)) is not None:
        def d_slope(s):
            return k * u.primal_hess(s) + 2.0 * g_hess(s)

    lo, hi = -40.0, 40.0
    while slope_total(np.array([lo]))[0] > 1.0:
        lo *= 2.0
        if lo < -S_CAP:
            raise DivergentIntegralError(f"{u.name}: no peak for j = 0 (positive Lelong number at z = 0)")
    while slope_total(np.array([hi]))[0] < k + 1.0:
        hi *= 2.0
        if hi > S_CAP:
            raise DivergentIntegralError(f"{u.name}: no peak for j = k (positive Lelong number at infinity)")
    peak = solve_increasing(slope_total, j + 1.0, lo, hi, d_slope)
    top = _log_integrand(u, k, j, peak)
    level = top - TAIL_DROP

    def right(s):
        return -_log_integrand(u, k, j, s)

    def left(s):
        return _log_integrand(u, k, j, s)

    b_hi = _expand(lambda s: right(s), peak, -level, +1)
    a_lo = _expand(lambda s: left(s), peak, level, -1)
    # bisect for the exact crossing on each side (monotone pieces of a concave function)
    b = _bisect(lambda s: right(s) + level, peak, b_hi)
    a = _bisect(lambda s: left(s) - level, a_lo, peak)
    return peak, top, a, b


def _bisect(F, lo, hi, iters: int = 60):
    """Root of the increasing ``F`` on ``[lo, hi]`` (elementwise), to ~1e-12 of the bracket."""
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        neg = F(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)


def hilbert_map(u: RadialPotential, k: int) -> QuantizedMetric:
    """``G_jj = int exp((j+1) s - k phi(s)) (1+e^s)^{-2} ds`` for ``j = 0..k``.

    Each integral is computed on its own window around the peak of the
    (log-concave) integrand by adaptive Gauss-Kronrod quadrature, vectorized
    over ``j`` and carried out in log space with a per-``j`` shift.
    """
    k = int(k)
    if k < 1:
        raise ValueError("level must be >= 1")
    if not u.full_mass:
        raise DivergentIntegralError(f"{u.name} is not full mass: the Hilbert integrals diverge")
    j = np.arange(k + 1, dtype=float)
    _, top, a, b = integration_windows(u, k)
    width = b - a

    def f(t):
        s = a + t * width
        return np.exp(_log_integrand(u, k, j, s) - top)

    val, err = quad_vec(f, 0.0, 1.0, epsabs=0.0, epsrel=HILBERT_RTOL, norm="max", limit=20000)
    if not np.all(val > 0):
        raise DivergentIntegralError(f"{u.name}: nonpositive Hilbert integral")
    return QuantizedMetric(k, log_diag=top + np.log(width) + np.log(val))


def hilbert_map_2d(u: RadialPotential, k: int, n_theta: int = 64, n_s: int = 4000,
                   s_max: float = 60.0) -> QuantizedMetric:
    """Full ``(k+1) x (k+1)`` Hilbert form by tensor quadrature in ``(log|z|^2, arg z)``.

    Only used to confirm that the radial Hilbert form is diagonal (small ``k``).
    """
    if k > 8:
        raise ValueError("the tensor-product check is meant for k <= 8")
    x, w = np.polynomial.legendre.leggauss(n_s)
    s = s_max * x
    ws = s_max * w
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    j = np.arange(k + 1)
    # z^i conj(z^j) = e^{(i+j) s / 2} e^{i (i-j) theta}
    base = -k * u.primal(s) + s - 2.0 * g(s)
    radial = np.exp(0.5 * (j[:, None] + j[None, :])[..., None] * s + base)  # (i, j, s)
    ang = np.exp(1j * (j[:, None] - j[None, :])[..., None] * theta).mean(axis=-1)  # (i, j)
    g_form = ang * (radial @ ws)
    from .spectral import HermitianForm
    return QuantizedMetric(k, form=HermitianForm(g_form))


@dataclass(frozen=True)
class _FSData:
    k: int
    log_diag: np.ndarray


def _fs_parts(data: _FSData, s, chunk: int = 2048):
    """Value, first and second derivative, slope logit and its derivative of the FS profile.

    One exponential per (s, j) pair: all sums are moments of the max-shifted
    weights ``exp(js - log G_j - max)``.  The slope logit is formed from the
    positive sums ``sum j w`` and ``sum (k-j) w`` so it keeps full relative
    accuracy when the slope is exponentially close to 0 or 1.
    """
    s = np.asarray(s, dtype=float)
    flat = s.ravel()
    k = data.k
    j = np.arange(k + 1, dtype=float)
    cols = np.stack([np.ones_like(j), j, j * j, k - j, j * (k - j)], axis=1)
    out = np.empty((5, flat.size))
    for lo in range(0, flat.size, chunk):
        ss = flat[lo:lo + chunk, None]
        e = j * ss - data.log_diag
        top = e.max(axis=1)
        mom = np.exp(e - top[:, None]) @ cols
        s0, s1, s2, sq, spq = mom.T
        mean = s1 / s0
        with np.errstate(divide="ignore", invalid="ignore"):
            out[0, lo:lo + chunk] = (top + np.log(s0)) / k
            out[1, lo:lo + chunk] = mean / k
            out[2, lo:lo + chunk] = np.maximum(s2 / s0 - mean * mean, 0.0) / k
            out[3, lo:lo + chunk] = np.log(s1) - np.log(sq)
            out[4, lo:lo + chunk] = s2 / s1 - spq / sq
    return out.reshape((5,) + s.shape)


def fs_map(gm: QuantizedMetric) -> RadialPotential:
    """Potential with profile ``phi(s) = (1/k) log sum_j e^{js} / G_jj``."""
    if not gm.is_diagonal:
        offdiag = gm.form.entries - np.diag(np.diag(gm.form.entries))
        scale = np.abs(np.diag(gm.form.entries)).max()
        if np.abs(offdiag).max() > 1e-12 * scale:
            raise NonDiagonalError("fs_map only handles diagonal (radial) forms")
        gm = QuantizedMetric.from_diag(gm.k, np.real(np.diag(gm.form.entries)))
    data = _FSData(gm.k, np.asarray(gm.log_diag))
    pot = from_primal(
        f"FS_{gm.k}",
        lambda s: _fs_parts(data, s)[0],
        lambda s: _fs_parts(data, s)[1],
        lambda s: _fs_parts(data, s)[2],
        slope_logit=lambda s: tuple(_fs_parts(data, s)[3:5]),
    )
    pot.meta.update(family="fs", k=gm.k, log_diag=data.log_diag)
    return pot


def bergman_density(u: RadialPotential, k: int, s, gm: QuantizedMetric | None = None):
    """``(1/d_k) sum_j e^{js} (1+e^s)^{-k} e^{-k u(s)} / G_jj`` with ``G = H_k(u)``."""
    if gm is None:
        gm = hilbert_map(u, k)
    s = np.asarray(s, dtype=float)
    j = np.arange(k + 1, dtype=float)
    e = j * s[..., None] - gm.log_diag
    return np.exp(logsumexp(e, axis=-1) - k * u.primal(s) - np.log(k + 1.0))


def quantized_geodesic(g0: QuantizedMetric, g1: QuantizedMetric, t: float) -> QuantizedMetric:
    """Level-``k`` Finsler geodesic; entrywise geometric interpolation for diagonal forms."""
    if g0.k != g1.k:
        raise LevelMismatchError(f"levels differ: {g0.k} and {g1.k}")
    t = float(t)
    if t == 0.0:
        return g0
    if t == 1.0:
        return g1
    if g0.is_diagonal and g1.is_diagonal:
        return QuantizedMetric(g0.k, log_diag=(1.0 - t) * g0.log_diag + t * g1.log_diag)
    return QuantizedMetric(g0.k, form=finsler.geodesic(g0.as_form(), g1.as_form(), t))


def quantum_rooftop(g0: QuantizedMetric, g1: QuantizedMetric) -> QuantizedMetric:
    """``P_k(G0, G1)``: relative log-eigenvalues ``max(lam, 0)``.

    For diagonal forms this is the entrywise maximum of the log-diagonals
    (the larger form, i.e. the smaller potential).
    """
    if g0.k != g1.k:
        raise LevelMismatchError(f"levels differ: {g0.k} and {g1.k}")
    if g0.is_diagonal and g1.is_diagonal:
        return QuantizedMetric(g0.k, log_diag=np.maximum(g0.log_diag, g1.log_diag))
    return QuantizedMetric(g0.k, form=finsler.quantum_rooftop(g0.as_form(), g1.as_form()))


# maximum principle --------------------------------------------------------------

@dataclass
class MaxPrincipleReport:
    k: int
    times: list
    violation: float  # max over t, j of log V_t - log H_k(v_t)
    per_time: list
    hypothesis_ok: bool
    margin: float  # largest eps for which the positivity hypothesis holds on the grid
    eps: float
    notes: list = field(default_factory=list)

    @property
    def status(self) -> str:
        if not self.hypothesis_ok:
            return "hypothesis not satisfied"
        return "ok"


def positivity_margin(curve: Callable[[float], RadialPotential], times: Sequence[float],
                      x_grid=None, dt: float = 1e-2, hx: float = 1e-3, zero_tol: float = 1e-9) -> float:
    """Largest ``eps`` with ``omega + dd^c v >= eps omega`` on the product, sampled on the dual side.

    With ``psi(t, x)`` the dual profiles of the curve and ``Phi(t, s)`` their
    primal profiles, the partial Legendre transform gives
    ``Phi_ss = 1/psi_xx``, ``Phi_tt = -psi_tt + psi_tx^2/psi_xx`` and
    ``det D^2 Phi = -psi_tt/psi_xx``.  The condition then reads ``psi_tt <= 0``
    and ``eps g''(s) Phi_tt <= det``, so geodesics (``psi_tt = 0``) have margin
    exactly 0 and ``t``-independent curves have margin ``min 1/(psi_xx g'')``.
    Returns ``-inf`` when the curve is not a subgeodesic.
    """
    if x_grid is None:
        x_grid = np.linspace(0.01, 0.99, 197)
    xs = np.concatenate([x_grid - hx, x_grid, x_grid + hx])
    n = x_grid.size
    worst = np.inf
    for t in times:
        t = float(t)
        lo, hi = max(t - dt, 0.0), min(t + dt, 1.0)
        if hi - t != t - lo:
            lo, hi = t - min(t - lo, hi - t), t + min(t - lo, hi - t)
        h = hi - t
        rows = [curve(tt).dual(xs) for tt in (lo, t, hi)] if h > 0 else [curve(t).dual(xs)] * 3
        lft = [r[:n] for r in rows]
        mid = [r[n:2 * n] for r in rows]
        rgt = [r[2 * n:] for r in rows]
        psi_xx = (lft[1] - 2 * mid[1] + rgt[1]) / hx ** 2
        if h > 0:
            psi_tt = (mid[2] - 2 * mid[1] + mid[0]) / h ** 2
            psi_tx = ((rgt[2] - lft[2]) - (rgt[0] - lft[0])) / (4 * hx * h)
        else:
            psi_tt = psi_tx = np.zeros(n)
        scale = 1.0 + np.abs(psi_xx)
        psi_tt = np.where(np.abs(psi_tt) <= zero_tol * scale, 0.0, psi_tt)
        if np.any(psi_tt > 0):
            return -np.inf
        s_of_x = (rgt[1] - lft[1]) / (2 * hx)
        gpp = g_hess(s_of_x)
        phi_tt = -psi_tt + psi_tx ** 2 / psi_xx
        flat_t = phi_tt <= zero_tol * scale
        with np.errstate(divide="ignore", invalid="ignore"):
            eps_pt = np.where(flat_t, 1.0 / (psi_xx * gpp), (-psi_tt / psi_xx) / (phi_tt * gpp))
        worst = min(worst, float(np.min(eps_pt)))
    return worst


def max_principle_check(curve: Callable[[float], RadialPotential], times: Sequence[float],
                        k: int, eps: float = 0.0, margin_tol: float = 1e-9,
                        endpoints=None) -> MaxPrincipleReport:
    """Compare the level-``k`` geodesic between ``H_k(v_0), H_k(v_1)`` with ``H_k(v_t)``.

    A positive violation means some diagonal entry of the geodesic exceeds the
    corresponding entry of ``H_k(v_t)``.
    """
    margin = positivity_margin(curve, times)
    ok = margin >= eps - margin_tol
    if endpoints is None:
        endpoints = (hilbert_map(curve(0.0), k), hilbert_map(curve(1.0), k))
    g0, g1 = endpoints
    per = []
    for t in times:
        vt = quantized_geodesic(g0, g1, t)
        ht = hilbert_map(curve(float(t)), k)
        per.append(float(np.max(vt.log_diag - ht.log_diag)))
    return MaxPrincipleReport(k, list(times), max(per), per, bool(ok), margin, eps)


def scan_k0(curve, times, ks: Sequence[int], eps: float = 0.0, tol: float = 1e-8):
    """First level from which no later level in ``ks`` shows a violation above ``tol``."""
    reports = [max_principle_check(curve, times, k, eps) for k in ks]
    k0 = None
    for rep in reversed(reports):
        if rep.violation > tol:
            break
        k0 = rep.k
    return k0, reports


__all__ = [
    "DivergentIntegralError", "NonDiagonalError", "hilbert_map", "hilbert_map_2d", "fs_map",
    "bergman_density", "quantized_geodesic", "quantum_rooftop", "MaxPrincipleReport",
    "positivity_margin", "max_principle_check", "scan_k0", "integration_windows",
]
