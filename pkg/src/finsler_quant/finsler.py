"""L^p and Orlicz Finsler geometry of positive Hermitian forms."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .qmetric import LevelMismatchError, QuantizedMetric
from .spectral import (
    HermitianForm,
    TangentForm,
    rel_log_spectrum,
    relative_eigh,
)


@dataclass(frozen=True, eq=False)
class YoungWeight:
    """A convex even weight ``chi`` with ``chi(0) = 0`` and ``1`` in the subdifferential at 1.

    ``lp`` marks the registered ``|l|^p / p`` family, for which norms have a
    closed form.  ``p_class`` certifies membership in the growth class
    ``l chi'(l) <= p chi(l)``.
    """

    name: str
    chi: Callable
    dchi: Callable
    conj: Callable | None = None
    p_class: float | None = None
    smooth: bool = True
    lp: float | None = None

    def __post_init__(self):
        eps = 1e-6
        c1 = float(self.chi(1.0))
        up = float(self.chi(1.0 + eps)) - c1
        down = c1 - float(self.chi(1.0 - eps))
        if abs(float(self.chi(0.0))) > 1e-14:
            raise ValueError(f"{self.name}: chi(0) must vanish")
        if up < eps * (1 - 1e-6) or down > eps * (1 + 1e-6):
            raise ValueError(f"{self.name}: 1 is not a subgradient of chi at 1")
        if self.p_class is not None:
            grid = np.logspace(-6, 6, 241)
            with np.errstate(over="ignore", invalid="ignore"):
                lhs = grid * self.dchi(grid)
                rhs = self.p_class * self.chi(grid)
            if np.any(lhs > rhs * (1 + 1e-12) + 1e-300):
                raise ValueError(f"{self.name}: not in the growth class for p={self.p_class}")

    def conjugate(self, y):
        """Legendre conjugate ``chi*``; bracketed 1-D maximization when no closed form."""
        if self.conj is not None:
            return self.conj(y)
        y = np.asarray(y, dtype=float)
        return np.vectorize(self._conj_numeric, otypes=[float])(y)

    def _conj_numeric(self, y: float) -> float:
        a = abs(y)
        if a == 0.0:
            return 0.0
        hi = 1.0
        while float(self.dchi(hi)) <= a:
            hi *= 2.0
            if hi > 1e12:
                return np.inf
        res = optimize.minimize_scalar(lambda l: float(self.chi(l)) - a * l,
                                       bounds=(0.0, hi), method="bounded",
                                       options={"xatol": 1e-13 * hi})
        return float(-res.fun)


def lp_weight(p: float) -> YoungWeight:
    """``chi_p(l) = |l|^p / p``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        return YoungWeight("chi_1", np.abs, np.sign,
                           conj=lambda y: np.where(np.abs(y) <= 1.0, 0.0, np.inf),
                           p_class=1.0, smooth=False, lp=1.0)
    q = p / (p - 1.0)
    return YoungWeight(f"chi_{p:g}",
                       lambda l: np.abs(l) ** p / p,
                       lambda l: np.sign(l) * np.abs(l) ** (p - 1),
                       conj=lambda y: np.abs(y) ** q / q,
                       p_class=float(p), smooth=p >= 2, lp=float(p))


@lru_cache(maxsize=None)
def cosh_weight() -> YoungWeight:
    """``cosh(a l) - 1`` with ``a sinh(a) = 1`` so that ``chi'(1) = 1``.

    Smooth and strictly convex, but grows too fast for any finite growth class.
    """
    a = optimize.brentq(lambda t: t * np.sinh(t) - 1.0, 0.1, 2.0, xtol=1e-15)

    def conj(y):
        z = np.asarray(y, dtype=float) / a
        return z * np.arcsinh(z) - np.sqrt(1.0 + z * z) + 1.0

    return YoungWeight("cosh", lambda l: np.cosh(a * np.asarray(l)) - 1.0,
                       lambda l: a * np.sinh(a * np.asarray(l)), conj=conj)


def _power_mean(lam: np.ndarray, p: float) -> float:
    a = np.abs(lam)
    if a.size == 0 or a.max() == 0.0:
        return 0.0
    top = a.max()
    return float(top * np.mean((a / top) ** p) ** (1.0 / p))


def orlicz_norm_of_spectrum(lam, chi: YoungWeight) -> float:
    """``inf{r > 0 : mean chi(lam / r) <= chi(1)}``."""
    lam = np.asarray(lam, dtype=float)
    top = np.abs(lam).max(initial=0.0)
    if top == 0.0:
        return 0.0
    if chi.lp is not None:
        return _power_mean(lam, chi.lp)
    c1 = float(chi.chi(1.0))
    n = lam.size

    def excess(r):
        with np.errstate(over="ignore"):
            return float(np.mean(chi.chi(lam / r))) - c1

    lo, hi = top / n, top
    if excess(hi) >= 0.0:
        return hi
    try:
        return float(optimize.brentq(excess, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=500))
    except RuntimeError as exc:
        raise RuntimeError(f"Orlicz norm root-finding did not converge for {chi.name}") from exc


def orlicz_norm(nu: TangentForm, h: HermitianForm, chi: YoungWeight) -> float:
    """Norm of the tangent vector ``nu`` at ``h``, computed from the spectrum of ``h^{-1} nu``."""
    if nu.n != h.n:
        raise ValueError("dimension mismatch")
    lam = np.linalg.eigvalsh(h.reduce(nu.entries))
    return orlicz_norm_of_spectrum(lam, chi)


def geodesic(h0: HermitianForm, h1: HermitianForm, t: float) -> HermitianForm:
    """``h_t = h0^{1/2} exp(t log(h0^{-1/2} h1 h0^{-1/2})) h0^{1/2}`` (Cholesky factor in place of the square root)."""
    lam, v = relative_eigh(h0, h1)
    return HermitianForm(h0.expand((v * np.exp(t * lam)) @ v.conj().T))


def d_chi(h0: HermitianForm, h1: HermitianForm, chi: YoungWeight) -> float:
    return orlicz_norm_of_spectrum(rel_log_spectrum(h0, h1).lam, chi)


def d_p(h0: HermitianForm, h1: HermitianForm, p: float) -> float:
    """``[(1/n) sum |lam_j|^p]^{1/p}`` over the relative log-spectrum."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return _power_mean(rel_log_spectrum(h0, h1).lam, p)


def path_length(times: Sequence[float], path: Sequence[HermitianForm], chi: YoungWeight) -> float:
    """Length of the broken geodesic through the samples."""
    times = np.asarray(times, dtype=float)
    if len(path) != times.size or times.size < 2:
        raise ValueError("need at least two samples with matching times")
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")
    return float(sum(d_chi(a, b, chi) for a, b in zip(path[:-1], path[1:])))


def quantum_rooftop(h0: HermitianForm, h1: HermitianForm) -> HermitianForm:
    """Form with relative log-eigenvalues ``max(lam_j, 0)`` with respect to ``h0``."""
    lam, v = relative_eigh(h0, h1)
    return HermitianForm(h0.expand((v * np.exp(np.maximum(lam, 0.0))) @ v.conj().T))


def pythagorean_residual(h0: HermitianForm, h1: HermitianForm, p: float) -> float:
    rooftop = quantum_rooftop(h0, h1)
    return abs(d_p(h0, h1, p) ** p - d_p(h0, rooftop, p) ** p - d_p(rooftop, h1, p) ** p)


def d_pk(g0: QuantizedMetric, g1: QuantizedMetric, p: float, k: int | None = None) -> float:
    """Scaled distance ``(1/k) d_p`` on the level-``k`` forms."""
    if k is None:
        k = g0.k
    if not (g0.k == g1.k == k):
        raise LevelMismatchError(f"levels differ: {g0.k}, {g1.k}, {k}")
    if p < 1:
        raise ValueError("p must be >= 1")
    if g0.is_diagonal and g1.is_diagonal:
        return _power_mean(g1.log_diag - g0.log_diag, p) / k
    return d_p(g0.as_form(), g1.as_form(), p) / k


def young_identity_residual(chi: YoungWeight, u: TangentForm, h: HermitianForm) -> float:
    """``tr chi(u^h) + tr chi*(chi'(u^h)) - tr[u^h chi'(u^h)]``."""
    lam = np.linalg.eigvalsh(h.reduce(u.entries))
    d = chi.dchi(lam)
    return float(np.sum(chi.chi(lam)) + np.sum(chi.conjugate(d)) - np.sum(lam * d))


def young_inequality_gap(chi: YoungWeight, u: TangentForm, v: TangentForm, h: HermitianForm) -> float:
    """``tr chi(u^h) + tr chi*(v^h) - tr[u^h v^h]``; nonnegative."""
    ur = h.reduce(u.entries)
    vr = h.reduce(v.entries)
    lu = np.linalg.eigvalsh(ur)
    lv = np.linalg.eigvalsh(vr)
    cross = float(np.real(np.sum(ur * vr.T)))
    return float(np.sum(chi.chi(lu)) + np.sum(chi.conjugate(lv)) - cross)


def peierls_gap(chi: YoungWeight, m: np.ndarray) -> float:
    """``tr chi(M) - sum_j chi(M_jj)`` for Hermitian ``M``; nonnegative for convex ``chi``."""
    m = TangentForm(m).entries
    return float(np.sum(chi.chi(np.linalg.eigvalsh(m))) - np.sum(chi.chi(np.real(np.diag(m)))))


__all__ = [
    "YoungWeight", "lp_weight", "cosh_weight", "orlicz_norm", "orlicz_norm_of_spectrum",
    "geodesic", "d_chi", "d_p", "path_length", "quantum_rooftop", "pythagorean_residual",
    "d_pk", "young_identity_residual", "young_inequality_gap", "peierls_gap",
]
