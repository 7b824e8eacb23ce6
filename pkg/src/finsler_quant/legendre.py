"""Discrete convex conjugates on sorted grids."""
from __future__ import annotations

import numpy as np


class NonConvexError(ValueError):
    def __init__(self, msg, index=None, amount=None):
        super().__init__(msg)
        self.index = index
        self.amount = amount


def _finite_part(a, f):
    a = np.asarray(a, dtype=float)
    f = np.asarray(f, dtype=float)
    if a.ndim != 1 or a.shape != f.shape:
        raise ValueError("abscissae and values must be 1-D arrays of equal length")
    if np.any(np.diff(a) <= 0):
        raise ValueError("abscissae must be strictly increasing")
    keep = np.isfinite(f)
    if not np.any(keep):
        raise ValueError("function is identically +inf")
    if np.any(f[keep] == -np.inf) or np.any(np.isnan(f)):
        raise ValueError("values must be finite or +inf")
    return a[keep], f[keep]


def check_convex(a, f, tol: float = 1e-10) -> None:
    """Raise :class:`NonConvexError` at the worst decrease of consecutive slopes."""
    a, f = _finite_part(a, f)
    if a.size < 3:
        return
    slopes = np.diff(f) / np.diff(a)
    drop = slopes[:-1] - slopes[1:]
    scale = 1.0 + np.abs(slopes).max()
    worst = int(np.argmax(drop))
    if drop[worst] > tol * scale:
        raise NonConvexError(
            f"input is not convex: slope decreases by {drop[worst]:.3e} at abscissa {a[worst + 1]:.6g}",
            index=worst + 1, amount=float(drop[worst]))


def lower_hull(a, f):
    """Vertices of the lower convex envelope of the points ``(a_i, f_i)`` (monotone chain)."""
    a, f = _finite_part(a, f)
    idx = []
    for i in range(a.size):
        while len(idx) >= 2:
            i0, i1 = idx[-2], idx[-1]
            # drop i1 if it lies on or above the chord i0 -> i
            if (f[i1] - f[i0]) * (a[i] - a[i0]) >= (f[i] - f[i0]) * (a[i1] - a[i0]):
                idx.pop()
            else:
                break
        idx.append(i)
    idx = np.asarray(idx)
    return a[idx], f[idx]


def conjugate_vertices(a, f, y):
    """``max_i (y a_i - f_i)`` for sorted query slopes ``y`` given hull vertices ``(a, f)``.

    The maximizing vertex is the one whose neighbouring edge slopes bracket
    ``y``, found with one sorted search.
    """
    y = np.asarray(y, dtype=float)
    if a.size == 1:
        return y * a[0] - f[0], np.zeros(y.shape, dtype=int)
    edge = np.diff(f) / np.diff(a)
    j = np.searchsorted(edge, y, side="left")
    return y * a[j] - f[j], j


def legendre(a, f, y, check: bool = True, tol: float = 1e-10):
    """Convex conjugate ``f*(y) = sup_i (y a_i - f_i)`` of grid data, evaluated at ``y``.

    ``+inf`` values are excluded from the sup.  With ``check`` the input is
    required to be convex; otherwise the conjugate of its convex envelope is
    returned, which is the same function.
    """
    if check:
        check_convex(a, f, tol)
    ha, hf = lower_hull(a, f)
    out, _ = conjugate_vertices(ha, hf, y)
    return out


def convex_envelope(a, f):
    """Lower convex envelope of grid data, evaluated back on the grid."""
    a_all = np.asarray(a, dtype=float)
    ha, hf = lower_hull(a, f)
    return np.interp(a_all, ha, hf, left=np.inf, right=np.inf)
