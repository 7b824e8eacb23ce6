"""Spectral calculus on positive Hermitian forms.

Every spectral quantity is computed through a Hermitian reduction
``L^{-1} M L^{-H}`` with ``h = L L^H`` the Cholesky factor, so only
``eigh``/``eigvalsh`` is ever called.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import linalg

HERMITIAN_TOL = 1e-10
PD_RTOL = 1e-12
LOEWNER_TOL = 1e-10


class NotPositiveDefiniteError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class PreconditionError(ValueError):
    """An operation was called outside of its stated domain."""


def _hermitize(entries, name: str) -> np.ndarray:
    a = np.array(entries, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {a.shape}")
    a = a.astype(np.complex128 if np.iscomplexobj(a) else np.float64)
    scale = 1.0 + np.abs(a).max(initial=0.0)
    skew = np.abs(a - a.conj().T).max(initial=0.0)
    if skew > HERMITIAN_TOL * scale:
        raise ValueError(f"{name} is not Hermitian (skew part {skew:.3e})")
    a = 0.5 * (a + a.conj().T)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TangentForm:
    """A Hermitian matrix, i.e. a tangent vector to the cone of positive forms."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _hermitize(self.entries, "TangentForm"))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class HermitianForm:
    """A positive definite Hermitian ``n x n`` form."""

    entries: np.ndarray

    def __post_init__(self):
        a = _hermitize(self.entries, "HermitianForm")
        w = np.linalg.eigvalsh(a)
        if not np.all(np.isfinite(w)) or w[-1] <= 0 or w[0] <= PD_RTOL * w[-1]:
            raise NotPositiveDefiniteError(
                f"form is not positive definite (eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}])"
            )
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def chol(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.entries)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("Cholesky factorization failed") from exc

    def reduce(self, m: np.ndarray) -> np.ndarray:
        """Return the Hermitian matrix ``L^{-1} m L^{-H}``."""
        L = self.chol
        x = linalg.solve_triangular(L, m, lower=True)
        y = linalg.solve_triangular(L, x.conj().T, lower=True)
        return 0.5 * (y + y.conj().T)

    def expand(self, m: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`reduce`: ``L m L^H``."""
        L = self.chol
        out = L @ m @ L.conj().T
        return 0.5 * (out + out.conj().T)

    @classmethod
    def identity(cls, n: int) -> "HermitianForm":
        return cls(np.eye(n))

    @classmethod
    def diag(cls, values) -> "HermitianForm":
        return cls(np.diag(np.asarray(values, dtype=float)))


@dataclass(frozen=True, eq=False)
class RelativeSpectrum:
    """Sorted log-eigenvalues of ``h0^{-1} h1``."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.sort(np.asarray(self.lam, dtype=float), kind="stable")
        if not np.all(np.isfinite(lam)):
            raise ValueError("relative spectrum has non-finite entries")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    def __len__(self):
        return self.lam.size


def _check_same_dim(*forms):
    dims = {f.n for f in forms}
    if len(dims) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {sorted(dims)}")


def relative_eigh(h0: HermitianForm, h1: HermitianForm):
    """Eigen-decomposition of the reduced pair: ``(log-eigenvalues, eigenvectors)``.

    The columns of ``h0.chol^{-H} @ V`` form an ``h0``-orthonormal basis that
    diagonalizes ``h1``.
    """
    _check_same_dim(h0, h1)
    w, v = np.linalg.eigh(h0.reduce(h1.entries))
    if w[0] <= 0:
        raise NotPositiveDefiniteError("relative eigenvalue is not positive")
    return np.log(w), v


def rel_log_spectrum(h0: HermitianForm, h1: HermitianForm) -> RelativeSpectrum:
    lam, _ = relative_eigh(h0, h1)
    return RelativeSpectrum(lam)


def _apply_scalar(f: Callable, lam: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(f(lam), dtype=np.result_type(lam, float))
        if out.shape != lam.shape:
            raise ValueError
    except (TypeError, ValueError):
        out = np.array([f(x) for x in lam])
    if not np.all(np.isfinite(out)):
        bad = lam[~np.isfinite(out)]
        raise ValueError(f"function undefined at eigenvalue(s) {bad}")
    return out


def h_eigh(h: HermitianForm, a: np.ndarray):
    """Eigenvalues and an ``h``-orthonormal eigenbasis of an ``h``-self-adjoint ``a``.

    Returns ``(lam, U, U_inv)`` with ``a = U diag(lam) U_inv``.
    """
    a = np.asarray(a)
    if a.shape != (h.n, h.n):
        raise DimensionMismatchError(f"expected {(h.n, h.n)} matrix, got {a.shape}")
    ha = h.entries @ a
    if np.abs(ha - ha.conj().T).max() > HERMITIAN_TOL * max(np.abs(ha).max(), 1e-300):
        raise PreconditionError("matrix is not h-self-adjoint")
    # L^H a L^{-H} = L^{-1} (h a) L^{-H} is Hermitian
    lam, w = np.linalg.eigh(h.reduce(ha))
    L = h.chol
    u = linalg.solve_triangular(L.conj().T, w, lower=False)
    u_inv = w.conj().T @ L.conj().T
    return lam, u, u_inv


def matrix_function(f: Callable, h: HermitianForm, a: np.ndarray) -> np.ndarray:
    """``f(A) = U diag(f(lam)) U^{-1}`` for ``A`` self-adjoint with respect to ``h``."""
    lam, u, u_inv = h_eigh(h, a)
    fl = _apply_scalar(f, lam)
    out = (u * fl) @ u_inv
    if not np.iscomplexobj(a) and not np.iscomplexobj(h.entries):
        out = out.real
    return out


def trace_derivative_residual(f: Callable, fprime: Callable, curve: Callable,
                              t0: float, dt: float) -> float:
    """Finite-difference check of ``d/dt tr f(A_t) = tr[f'(A_t) dA/dt]``.

    ``curve(t)`` returns ``(h_t, A_t)`` with ``A_t`` self-adjoint for ``h_t``.
    Both derivatives are central differences with step ``dt``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    h_p, a_p = curve(t0 + dt)
    h_m, a_m = curve(t0 - dt)
    h_0, a_0 = curve(t0)
    a_p, a_m, a_0 = (np.asarray(x) for x in (a_p, a_m, a_0))
    lhs = (np.trace(matrix_function(f, h_p, a_p)) - np.trace(matrix_function(f, h_m, a_m))) / (2 * dt)
    a_dot = (a_p - a_m) / (2 * dt)
    rhs = np.trace(matrix_function(fprime, h_0, a_0) @ a_dot)
    return float(abs(lhs.real - rhs.real))


def majorizes(y, x) -> bool:
    """True iff ``x`` is majorized by ``y``."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise DimensionMismatchError("majorization needs vectors of equal length")
    n = x.size
    if n == 0:
        return True
    tol = 1e-10 * n * max(np.abs(x).max(), np.abs(y).max())
    cx = np.cumsum(np.sort(x)[::-1])
    cy = np.cumsum(np.sort(y)[::-1])
    if abs(cx[-1] - cy[-1]) > tol:
        return False
    return bool(np.all(cx[:-1] <= cy[:-1] + tol))


def majorization_convex_test(phi: Callable, x, y) -> float:
    """``sum phi(y) - sum phi(x)``; nonnegative whenever ``x`` is majorized by ``y``."""
    if not majorizes(y, x):
        raise PreconditionError("x is not majorized by y")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.sum(_apply_scalar(phi, y)) - np.sum(_apply_scalar(phi, x)))


def loewner_leq(a: HermitianForm | np.ndarray, b: HermitianForm | np.ndarray,
                tol: float = LOEWNER_TOL) -> bool:
    """``a <= b`` in Loewner order, up to ``tol * (1 + ||.||_2)``."""
    a = a.entries if isinstance(a, HermitianForm) else np.asarray(a)
    b = b.entries if isinstance(b, HermitianForm) else np.asarray(b)
    d = b - a
    d = 0.5 * (d + d.conj().T)
    w = np.linalg.eigvalsh(d)
    scale = 1.0 + max(np.linalg.norm(a, 2), np.linalg.norm(b, 2))
    return bool(w[0] >= -tol * scale)


def lidskii_gap(a: HermitianForm, b: HermitianForm, p: float) -> float:
    """``tr(log B)^p - tr(log A^{-1}B)^p - tr(log A)^p`` for ``I <= A <= B``."""
    _check_same_dim(a, b)
    if p < 1:
        raise ValueError("p must be >= 1")
    eye = np.eye(a.n)
    if not loewner_leq(eye, a):
        raise PreconditionError("need I <= A")
    if not loewner_leq(a, b):
        raise PreconditionError("need A <= B")
    lb = np.clip(np.log(np.linalg.eigvalsh(b.entries)), 0.0, None)
    la = np.clip(np.log(np.linalg.eigvalsh(a.entries)), 0.0, None)
    lab = np.clip(rel_log_spectrum(a, b).lam, 0.0, None)
    return float(np.sum(lb ** p) - np.sum(lab ** p) - np.sum(la ** p))
