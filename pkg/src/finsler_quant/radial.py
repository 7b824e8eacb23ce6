"""S^1-invariant potentials on CP^1 and their L^p geometry through Legendre duality.

Model: ``s = log|z|^2``, reference profile ``g(s) = log(1 + e^s)`` (Fubini-Study,
total volume 1, moment interval ``[0, 1]``).  A potential ``u`` is stored
through its convex profile ``phi = g + u`` and/or the dual profile
``phi*(x) = sup_s (x s - phi(s))`` on ``[0, 1]``; whichever side is missing is
obtained by pointwise conjugation.  In dual coordinates geodesics are linear
interpolations, rooftop envelopes are pointwise maxima and ``d_p`` is the
``L^p([0, 1])`` distance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import expit, logit, xlogy

from .legendre import check_convex, conjugate_vertices, lower_hull

DEFAULT_M = 4096
RICHARDSON_RTOL = 1e-3
Y_CAP = 700.0  # logit range used when a dual is finite up to the endpoints
S_CAP = 1e5


class NotFiniteEnergyError(ValueError):
    """The potential (or pair) is outside the finite-energy class."""


class OracleInstabilityError(RuntimeError):
    """A quadrature value moved by more than the allowed drift between ``m`` and ``2m``."""


# reference profile and its conjugate --------------------------------------------

def g(s):
    return np.logaddexp(0.0, s)


def g_grad(s):
    return expit(s)


def g_hess(s):
    return expit(s) * expit(-np.asarray(s))


def g_star(x):
    x = np.asarray(x, dtype=float)
    return xlogy(x, x) + xlogy(1.0 - x, 1.0 - x)


def g_star_grad(x):
    return logit(x)


def g_star_hess(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return 1.0 / (x * (1.0 - x))


# vectorized monotone root finding --------------------------------------------

def solve_increasing(F: Callable, target, lo, hi, dF: Callable | None = None,
                     x0=None, tol: float = 1e-14, maxiter: int = 300, fdf: Callable | None = None):
    """Solve ``F(z) = target`` for increasing ``F`` on ``[lo, hi]``, elementwise.

    Newton steps (from ``dF``, or from ``fdf`` returning both values at once)
    are taken only while they stay inside the bracket and shrink the residual
    by a factor of four; otherwise the bracket is bisected.  Targets outside
    ``[F(lo), F(hi)]`` are clamped to the bracket ends.
    """
    if fdf is not None:
        def F(z):  # noqa: F811
            return fdf(z)[0]
    target = np.asarray(target, dtype=float)
    shape = target.shape
    t = target.ravel().copy()

    def ends(b):
        b = np.asarray(b, dtype=float)
        if b.ndim == 0:
            fb = F(np.array([float(b)]))[0]
            return np.full(t.shape, float(b)), np.full(t.shape, fb)
        b = np.broadcast_to(b, shape).ravel().copy()
        return b, F(b)

    lo, f_lo = ends(lo)
    hi, f_hi = ends(hi)
    z = np.empty_like(t)
    below = f_lo - t >= 0
    above = (f_hi - t <= 0) & ~below
    z[below] = lo[below]
    z[above] = hi[above]
    act = np.flatnonzero(~(below | above))
    if x0 is None:
        za = 0.5 * (lo[act] + hi[act])
    else:
        za = np.clip(np.broadcast_to(np.asarray(x0, dtype=float), shape).ravel()[act], lo[act], hi[act])
    la, ha, ta = lo[act], hi[act], t[act]
    prev = np.full(act.size, np.inf)
    newton = dF is not None or fdf is not None
    for _ in range(maxiter):
        if act.size == 0:
            break
        if fdf is not None:
            fv, dv = fdf(za)
        else:
            fv = F(za)
            dv = dF(za) if dF is not None else None
        fz = fv - ta
        neg = fz < 0
        la = np.where(neg, za, la)
        ha = np.where(neg, ha, za)
        done = (np.abs(fz) <= tol * (1.0 + np.abs(ta))) | (ha - la <= 4e-16 * (1.0 + np.abs(za)))
        if np.any(done):
            z[act[done]] = za[done]
            keep = ~done
            act, za, la, ha, ta, fz, prev = (a[keep] for a in (act, za, la, ha, ta, fz, prev))
            if dv is not None:
                dv = dv[keep]
            if act.size == 0:
                break
        mid = 0.5 * (la + ha)
        if newton:
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                step = za - fz / dv
                ok = np.isfinite(step) & (step > la) & (step < ha) & (np.abs(fz) < 0.25 * prev)
            prev = np.abs(fz)
            za = np.where(ok, step, mid)
        else:
            za = mid
    if act.size:
        z[act] = za
    return z.reshape(shape)


# potentials ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialPotential:
    """An S^1-invariant potential, given by its primal profile, its dual profile, or both.

    ``support`` is the closed interval where the dual is finite; full-mass
    potentials have support ``(0, 1)``.  ``slope_logit`` optionally returns
    ``(logit phi'(s), d/ds logit phi'(s))``, which makes dual evaluation
    robust when ``phi'`` is exponentially close to 0 or 1.
    """

    name: str
    dual_fn: Callable | None = None
    dual_grad_fn: Callable | None = None
    dual_hess_fn: Callable | None = None
    primal_fn: Callable | None = None
    primal_grad_fn: Callable | None = None
    primal_hess_fn: Callable | None = None
    slope_logit: Callable | None = None
    support: tuple = (0.0, 1.0)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dual_fn is None and self.primal_fn is None:
            raise ValueError("need a primal or a dual profile")
        if self.dual_fn is not None and self.dual_grad_fn is None:
            raise ValueError("dual profile needs its derivative")
        if self.primal_fn is not None and self.dual_fn is None and self.primal_grad_fn is None:
            raise ValueError("primal profile needs its derivative")
        g0, g1 = self.support
        if not 0.0 <= g0 < g1 <= 1.0:
            raise ValueError(f"bad support {self.support}")

    @property
    def full_mass(self) -> bool:
        return self.support == (0.0, 1.0)

    # primal side from the dual
    def _dual_argmax(self, s):
        """The ``x`` attaining ``sup_x (x s - phi*(x))``."""
        g0, g1 = self.support
        ylo = logit(g0) if g0 > 0 else -Y_CAP
        yhi = logit(g1) if g1 < 1 else Y_CAP

        def x_of(y):
            return np.clip(expit(y), g0, g1)

        def F(y):
            return self.dual_grad_fn(x_of(y))

        dF = None
        if self.dual_hess_fn is not None:
            def dF(y):
                x = x_of(y)
                return self.dual_hess_fn(x) * expit(y) * expit(-y)

        y = solve_increasing(F, s, ylo, yhi, dF, x0=np.clip(s, ylo, yhi))
        return x_of(y)

    def primal(self, s):
        s = np.asarray(s, dtype=float)
        if self.primal_fn is not None:
            return self.primal_fn(s)
        x = self._dual_argmax(s)
        return x * s - self.dual_fn(x)

    def primal_grad(self, s):
        s = np.asarray(s, dtype=float)
        if self.primal_grad_fn is not None:
            return self.primal_grad_fn(s)
        if self.primal_fn is not None:
            raise ValueError(f"{self.name}: no primal derivative")
        return self._dual_argmax(s)

    def primal_hess(self, s):
        s = np.asarray(s, dtype=float)
        if self.primal_hess_fn is not None:
            return self.primal_hess_fn(s)
        if self.primal_fn is None and self.dual_hess_fn is not None:
            return 1.0 / self.dual_hess_fn(self._dual_argmax(s))
        return None

    # dual side from the primal
    def _primal_argmax(self, x):
        """The ``s`` attaining ``sup_s (x s - phi(s))``."""
        x = np.asarray(x, dtype=float)
        fdf = None
        if self.slope_logit is not None:
            fdf = self.slope_logit

            def F(s):
                return self.slope_logit(s)[0]
            dF = None
            with np.errstate(divide="ignore"):
                target = logit(x)
        else:
            F = self.primal_grad_fn
            dF = self.primal_hess_fn
            target = x
        lo, hi = -40.0, 40.0
        tmin, tmax = np.min(target), np.max(target)
        while lo > -S_CAP and F(np.array([lo]))[0] > tmin:
            lo *= 2.0
        while hi < S_CAP and F(np.array([hi]))[0] < tmax:
            hi *= 2.0
        x0 = self.meta.get("argmax_guess", lambda xx: logit(np.clip(xx, 1e-300, 1 - 1e-16)))(x)
        return solve_increasing(F, target, lo, hi, dF, x0=np.clip(x0, lo, hi), fdf=fdf)

    def dual(self, x):
        x = np.asarray(x, dtype=float)
        g0, g1 = self.support
        out_of = (x < g0) | (x > g1)
        if self.dual_fn is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                val = self.dual_fn(np.clip(x, g0, g1))
        else:
            s = self._primal_argmax(x)
            val = x * s - self.primal_fn(s)
        return np.where(out_of, np.inf, val)

    def dual_grad(self, x):
        x = np.asarray(x, dtype=float)
        if self.dual_grad_fn is not None:
            return self.dual_grad_fn(x)
        return self._primal_argmax(x)

    def u(self, s):
        """The potential itself: ``phi(s) - g(s)``."""
        return self.primal(s) - g(s)

    def __repr__(self):
        return f"RadialPotential({self.name!r})"


def _closed(name, dual, dual_grad, dual_hess, primal=None, primal_grad=None, primal_hess=None,
            support=(0.0, 1.0), **meta):
    return RadialPotential(name, dual, dual_grad, dual_hess, primal, primal_grad, primal_hess,
                           support=support, meta=meta)


def flat(c: float = 0.0) -> RadialPotential:
    """``u = c``."""
    c = float(c)
    return _closed(f"flat:{c:g}", lambda x: g_star(x) - c, g_star_grad, g_star_hess,
                   lambda s: g(s) + c, g_grad, g_hess, family="flat", c=c)


def ua(a: float) -> RadialPotential:
    """Profile ``(1/a) log(1 + e^{a s})``, dual ``g*/a``."""
    a = float(a)
    if not 0 < a:
        raise ValueError("ua needs a > 0")
    return _closed(f"ua:{a:g}", lambda x: g_star(x) / a, lambda x: g_star_grad(x) / a,
                   lambda x: g_star_hess(x) / a,
                   lambda s: g(a * np.asarray(s)) / a, lambda s: expit(a * np.asarray(s)),
                   lambda s: a * g_hess(a * np.asarray(s)), family="ua", a=a)


def shift(c: float) -> RadialPotential:
    """Dual ``g*(x) + c (x - 1/2)``, i.e. profile ``g(s - c) + c/2``."""
    c = float(c)
    return _closed(f"shift:{c:g}", lambda x: g_star(x) + c * (np.asarray(x) - 0.5),
                   lambda x: g_star_grad(x) + c, g_star_hess,
                   lambda s: g(np.asarray(s) - c) + 0.5 * c, lambda s: expit(np.asarray(s) - c),
                   lambda s: g_hess(np.asarray(s) - c), family="shift", c=c)


def cusp(alpha: float) -> RadialPotential:
    """Dual ``g*(x) - alpha log x``: unbounded below, zero Lelong number."""
    al = float(alpha)
    if al <= 0:
        raise ValueError("cusp needs alpha > 0")

    def dual(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return g_star(x) - al * np.log(x)

    def grad(x):
        with np.errstate(divide="ignore"):
            return g_star_grad(x) - al / np.asarray(x, dtype=float)

    def hess(x):
        with np.errstate(divide="ignore"):
            return g_star_hess(x) + al / np.asarray(x, dtype=float) ** 2

    return _closed(f"cusp:{al:g}", dual, grad, hess, family="cusp", alpha=al)


def lelong(gamma: float) -> RadialPotential:
    """Dual ``g*`` restricted to ``[gamma, 1]``: Lelong number ``gamma`` at ``z = 0``."""
    ga = float(gamma)
    if not 0 < ga < 1:
        raise ValueError("lelong needs 0 < gamma < 1")
    s_ga = float(logit(ga))
    c_ga = float(g_star(ga))

    def primal(s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= s_ga, g(s), ga * s - c_ga)

    return _closed(f"lelong:{ga:g}", g_star, g_star_grad, g_star_hess,
                   primal, lambda s: np.maximum(expit(s), ga),
                   lambda s: np.where(np.asarray(s) >= s_ga, g_hess(s), 0.0),
                   support=(ga, 1.0), family="lelong", gamma=ga)


def piecewise_linear(xv, vals, name: str = "grid", check: bool = True) -> RadialPotential:
    """Potential whose dual is the convex piecewise-linear interpolant of ``(xv, vals)``.

    ``+inf`` values mark the part of ``[0, 1]`` outside the support.  The
    primal profile is the exact maximum of the affine functions
    ``s -> x_i s - v_i``.
    """
    xv = np.asarray(xv, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if xv[0] < 0 or xv[-1] > 1:
        raise ValueError("dual grid must lie in [0, 1]")
    if check:
        check_convex(xv, vals)
    hx, hv = lower_hull(xv, vals)
    if hx.size < 2:
        raise ValueError("dual needs at least two finite values")
    edge = np.diff(hv) / np.diff(hx)

    def dual(x):
        return np.interp(x, hx, hv)

    def dual_grad(x):
        j = np.clip(np.searchsorted(hx, x, side="right") - 1, 0, edge.size - 1)
        return edge[j]

    def primal(s):
        s = np.asarray(s, dtype=float)
        return conjugate_vertices(hx, hv, s)[0]

    def primal_grad(s):
        s = np.asarray(s, dtype=float)
        return hx[conjugate_vertices(hx, hv, s)[1]]

    support = (float(hx[0]), float(hx[-1]))
    return RadialPotential(name, dual, dual_grad, None, primal, primal_grad, None,
                           support=support, meta={"family": "grid", "vertices": (hx, hv)})


def shifted(u: RadialPotential, c: float) -> RadialPotential:
    """``u + c``."""
    c = float(c)
    return RadialPotential(
        f"{u.name}{c:+g}",
        (lambda x: u.dual(x) - c),
        u.dual_grad if (u.dual_fn is not None or u.slope_logit or u.primal_grad_fn) else None,
        u.dual_hess_fn,
        (lambda s: u.primal(s) + c),
        u.primal_grad,
        u.primal_hess_fn,
        support=u.support, meta={"family": "shifted", "base": u, "c": c})


def from_dual(name: str, dual, dual_grad, dual_hess=None, support=(0.0, 1.0)) -> RadialPotential:
    return RadialPotential(name, dual, dual_grad, dual_hess, support=support)


def from_primal(name: str, primal, primal_grad, primal_hess=None, slope_logit=None) -> RadialPotential:
    return RadialPotential(name, primal_fn=primal, primal_grad_fn=primal_grad,
                           primal_hess_fn=primal_hess, slope_logit=slope_logit)


# spec parsing ----------------------------------------------------------------

_FAMILIES = {"flat": (flat, "c"), "ua": (ua, "a"), "shift": (shift, "c"),
             "cusp": (cusp, "alpha"), "lelong": (lelong, "gamma")}


def _parse_number(text: str) -> float:
    text = text.strip().replace("½", "1/2").replace("¼", "1/4").replace("¾", "3/4")
    return float(Fraction(text)) if "/" in text else float(text)


def parse_potential(spec: str) -> RadialPotential:
    """Build a potential from ``family:value``, ``family:param=value`` or ``file:<path>``."""
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    if name == "file":
        if not arg:
            raise ValueError("file: needs a path")
        return DualProfile.read(arg).to_potential()
    if name not in _FAMILIES:
        raise ValueError(f"unknown potential family {name!r} (known: {sorted(_FAMILIES)} and file)")
    factory, param = _FAMILIES[name]
    if not arg:
        if name == "flat":
            return flat(0.0)
        raise ValueError(f"{name} needs a parameter")
    key, eq, val = arg.partition("=")
    if eq:
        if key.strip() != param:
            raise ValueError(f"{name} takes parameter {param!r}, got {key!r}")
    else:
        val = key
    return factory(_parse_number(val))


# dual profile files ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DualProfile:
    """A dual profile sampled on a grid of ``[0, 1]``."""

    x: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != v.shape or x.size < 2:
            raise ValueError("profile needs matching 1-D arrays")
        if np.any(np.diff(x) <= 0):
            raise ValueError("profile abscissae must be strictly increasing")
        if x[0] < 0 or x[-1] > 1:
            raise ValueError("profile abscissae must lie in [0, 1]")
        fin = np.isfinite(v)
        if np.any(np.isnan(v)) or np.any(v == -np.inf):
            raise ValueError("profile values must be finite or +inf")
        if fin.any():
            idx = np.flatnonzero(fin)
            if not np.all(fin[idx[0]:idx[-1] + 1]):
                raise ValueError("+inf values are only allowed on end segments")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.x.size

    @classmethod
    def from_potential(cls, u: RadialPotential, m: int = DEFAULT_M) -> "DualProfile":
        x = np.linspace(0.0, 1.0, m)
        return cls(x, u.dual(x))

    def to_potential(self, name: str = "file") -> RadialPotential:
        return piecewise_linear(self.x, self.values, name=name)

    def write(self, path) -> None:
        lines = [f"dualprofile m={self.m} domain=0,1"]
        for xi, vi in zip(self.x, self.values):
            lines.append(f"{xi:.17g} {'inf' if vi == np.inf else format(vi, '.17g')}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def read(cls, path) -> "DualProfile":
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
        head = lines[0].split()
        if not head or head[0] != "dualprofile":
            raise ValueError(f"{path}: missing dualprofile header")
        keys = dict(item.split("=", 1) for item in head[1:])
        if keys.get("domain", "0,1") != "0,1":
            raise ValueError(f"{path}: only domain=0,1 is supported")
        data = np.array([[float(tok) for tok in ln.split()] for ln in lines[1:]])
        if data.ndim != 2 or data.shape[1] != 2:
            raise ValueError(f"{path}: expected 'x value' lines")
        if "m" in keys and int(keys["m"]) != data.shape[0]:
            raise ValueError(f"{path}: header says m={keys['m']} but found {data.shape[0]} lines")
        return cls(data[:, 0], data[:, 1])


# quadrature on the moment interval -------------------------------------------

GL_ORDER = 4
GRADING = 4


@lru_cache(maxsize=16)
def dual_mesh(m: int = DEFAULT_M):
    """Nodes and weights of a graded composite Gauss-Legendre rule on ``[0, 1]``.

    Cells accumulate algebraically at both ends.  The two end cells use a rule
    that is exact on ``{1, log d, d, d log d}`` (``d`` the distance to the
    endpoint), which absorbs logarithmic endpoint singularities of duals.
    """
    tau = np.linspace(0.0, 1.0, m + 1)
    edges = tau ** GRADING / (tau ** GRADING + (1.0 - tau) ** GRADING)
    t, w = np.polynomial.legendre.leggauss(GL_ORDER)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    widths = np.diff(edges)
    nodes = edges[:-1, None] + widths[:, None] * t[None, :]
    weights = widths[:, None] * w[None, :]
    # end-cell rule on [0, 1] exact for 1, log t, t, t log t
    basis = np.vstack([np.ones_like(t), np.log(t), t, t * np.log(t)])
    moments = np.array([1.0, -1.0, 0.5, -0.25])
    w_end = np.linalg.solve(basis, moments)
    weights[0] = widths[0] * w_end
    nodes[-1] = edges[-1] - widths[-1] * t
    weights[-1] = widths[-1] * w_end
    # keep nodes strictly inside (0, 1); near x = 1 the spacing is below double resolution
    nodes = np.clip(nodes.ravel(), np.finfo(float).tiny, np.nextafter(1.0, 0.0))
    weights = weights.ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _richardson(fn: Callable[[int], float], m: int, check: bool, what: str,
                rtol: float = RICHARDSON_RTOL, floor: float = 1e-10) -> float:
    a = fn(m)
    if not check:
        return a
    b = fn(2 * m)
    if not (np.isfinite(a) and np.isfinite(b)) or abs(a - b) > rtol * max(abs(b), floor):
        raise OracleInstabilityError(f"{what}: value moved from {a:.10g} (m={m}) to {b:.10g} (m={2 * m})")
    return b


def _require_full_mass(*us):
    for u in us:
        if not u.full_mass:
            raise NotFiniteEnergyError(f"{u.name} has a positive Lelong number (not full mass)")


def lp_integral(f_at_nodes: Callable[[np.ndarray], np.ndarray], p: float, m: int = DEFAULT_M) -> float:
    x, w = dual_mesh(m)
    return float(np.dot(w, np.abs(f_at_nodes(x)) ** p))


def d_p_oracle(u0: RadialPotential, u1: RadialPotential, p: float,
               m: int = DEFAULT_M, check: bool = True) -> float:
    """``(int_0^1 |phi0* - phi1*|^p dx)^{1/p}``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    _require_full_mass(u0, u1)

    def at(mm):
        x, w = dual_mesh(mm)
        diff = u0.dual(x) - u1.dual(x)
        with np.errstate(invalid="ignore"):
            return float(np.dot(w, np.abs(diff) ** p)) ** (1.0 / p)

    try:
        return _richardson(at, m, check, f"d_{p:g}({u0.name}, {u1.name})")
    except OracleInstabilityError as exc:
        raise NotFiniteEnergyError(f"not in E^p relative to each other: {exc}") from exc


def geodesic_t(u0: RadialPotential, u1: RadialPotential, t: float) -> RadialPotential:
    """Finite-energy geodesic at time ``t``: the dual is ``(1-t) phi0* + t phi1*``."""
    t = float(t)
    if t == 0.0:
        return u0
    if t == 1.0:
        return u1
    hess = None
    if u0.dual_hess_fn is not None and u1.dual_hess_fn is not None:
        def hess(x):
            return (1 - t) * u0.dual_hess_fn(x) + t * u1.dual_hess_fn(x)
    sup = (max(u0.support[0], u1.support[0]), min(u0.support[1], u1.support[1]))
    return RadialPotential(
        f"geod({u0.name},{u1.name},{t:g})",
        lambda x: (1 - t) * u0.dual(x) + t * u1.dual(x),
        lambda x: (1 - t) * u0.dual_grad(x) + t * u1.dual_grad(x),
        hess, support=sup, meta={"family": "geodesic", "ends": (u0, u1), "t": t})


def rooftop(u0: RadialPotential, u1: RadialPotential) -> RadialPotential:
    """Largest potential below both: the dual is ``max(phi0*, phi1*)``."""
    if u0 is u1:
        return u0

    def grad(x):
        return np.where(u0.dual(x) >= u1.dual(x), u0.dual_grad(x), u1.dual_grad(x))

    hess = None
    if u0.dual_hess_fn is not None and u1.dual_hess_fn is not None:
        def hess(x):
            return np.where(u0.dual(x) >= u1.dual(x), u0.dual_hess_fn(x), u1.dual_hess_fn(x))
    sup = (max(u0.support[0], u1.support[0]), min(u0.support[1], u1.support[1]))
    return RadialPotential(f"P({u0.name},{u1.name})",
                           lambda x: np.maximum(u0.dual(x), u1.dual(x)), grad, hess,
                           support=sup, meta={"family": "rooftop", "args": (u0, u1)})


def delta_projection(u: RadialPotential, delta: float, s_max: float = 60.0,
                     n: int = 48001) -> RadialPotential:
    """``P(delta u)``: largest potential below ``delta u``.

    Its profile is the largest convex function with slopes in ``[0, 1]`` below
    ``delta phi - (delta - 1) g``.  When that function is already convex with
    admissible slopes on the sample grid, it is returned in closed form;
    otherwise the dual is the exact conjugate of its sampled lower envelope
    over ``[-s_max, s_max]``.  Monotone in ``delta`` for ``u <= 0``.
    """
    delta = float(delta)
    if delta < 1:
        raise ValueError("delta must be >= 1")
    if delta == 1.0:
        return u
    s = np.linspace(-s_max, s_max, n)
    f = delta * u.primal(s) - (delta - 1.0) * g(s)
    fp = delta * u.primal_grad(s) - (delta - 1.0) * g_grad(s)
    slopes = np.diff(f) / np.diff(s)
    convex = np.all(np.diff(slopes) >= -1e-10 * (1 + np.abs(slopes[1:])))
    admissible = np.all((fp >= -1e-12) & (fp <= 1 + 1e-12))
    name = f"P({delta:g}*{u.name})"
    if convex and admissible:
        hess = None
        if u.primal_hess(np.array([0.0])) is not None:
            def hess(ss):
                return delta * u.primal_hess(ss) - (delta - 1.0) * g_hess(ss)
        return from_primal(name, lambda ss: delta * u.primal(ss) - (delta - 1.0) * g(ss),
                           lambda ss: delta * u.primal_grad(ss) - (delta - 1.0) * g_grad(ss), hess)
    hs, hf = lower_hull(s, f)
    edge = np.diff(hf) / np.diff(hs)
    inner = edge[(edge > 0) & (edge < 1)]
    xv = np.concatenate([[0.0], inner, [1.0]])
    xv = xv[np.concatenate([[True], np.diff(xv) > 1e-13])]
    if xv[-1] != 1.0:
        xv[-1] = 1.0
    vals, _ = conjugate_vertices(hs, hf, xv)
    # exact conjugate of a convex polygon; skip the rounding-sensitive convexity test
    return piecewise_linear(xv, vals, name=name, check=False)


def energy_p(u: RadialPotential, p: float, m: int = DEFAULT_M) -> float:
    """``int |u|^p d(MA(u))``, through the change of variables ``x = phi'(s)``.

    Returns ``inf`` for potentials that are not full mass or whose integral
    does not settle (5% relative) between ``m`` and ``2m``.
    """
    if not u.full_mass:
        return math.inf

    def at(mm):
        x, w = dual_mesh(mm)
        s = u.dual_grad(x)
        with np.errstate(invalid="ignore", over="ignore"):
            val = x * s - u.dual(x) - g(s)
            return float(np.dot(w, np.abs(val) ** p))

    a, b = at(m), at(2 * m)
    if not (np.isfinite(a) and np.isfinite(b)) or abs(a - b) > 0.05 * max(abs(b), 1e-12):
        return math.inf
    return b


def is_finite_energy(u: RadialPotential, p: float, m: int = DEFAULT_M) -> bool:
    if not u.full_mass:
        return False
    return math.isfinite(energy_p(u, p, m)) and math.isfinite(energy_p(u, p, 2 * m))


def i_p_functional(u0: RadialPotential, u1: RadialPotential, p: float,
                   m: int = DEFAULT_M, check: bool = True) -> float:
    """``int |u0 - u1|^p MA(u0) + int |u0 - u1|^p MA(u1)`` (volume 1)."""
    _require_full_mass(u0, u1)

    def term(a: RadialPotential, b: RadialPotential, mm: int) -> float:
        x, w = dual_mesh(mm)
        s = a.dual_grad(x)
        with np.errstate(invalid="ignore", over="ignore"):
            diff = x * s - a.dual(x) - b.primal(s)
            return float(np.dot(w, np.abs(diff) ** p))

    return _richardson(lambda mm: term(u0, u1, mm) + term(u1, u0, mm), m, check,
                       f"I_{p:g}({u0.name}, {u1.name})")


def normalize_below(u: RadialPotential, level: float = -1.0, s_max: float = 60.0) -> RadialPotential:
    """Shift ``u`` so that its supremum (estimated on a grid) equals ``level``."""
    s = np.linspace(-s_max, s_max, 24001)
    return shifted(u, level - float(np.max(u.u(s))))


# random dual profiles ----------------------------------------------------------

def _abs_smooth_free(x, c):
    return np.abs(np.asarray(x) - c)


def random_potential(rng: np.random.Generator, name: str = "rand", cusp_prob: float = 0.25) -> RadialPotential:
    """Full-mass potential with dual ``a g* + b (x-c)^2 + d |x-e| + f x + h [- alpha log x]``."""
    a = rng.uniform(0.4, 2.5)
    b, c = rng.uniform(0.0, 2.0), rng.uniform(0.0, 1.0)
    d, e = rng.uniform(0.0, 1.0), rng.uniform(0.05, 0.95)
    f, h = rng.uniform(-2.0, 2.0), rng.uniform(-1.0, 1.0)
    al = rng.uniform(0.05, 0.5) if rng.random() < cusp_prob else 0.0
    return _convex_dual(name, a, b, c, d, e, f, h, al)


def _convex_dual(name, a, b, c, d, e, f, h, al):
    def dual(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            out = a * g_star(x) + b * (x - c) ** 2 + d * np.abs(x - e) + f * x + h
            if al:
                out = out - al * np.log(x)
        return out

    def grad(x):
        x = np.asarray(x, dtype=float)
        out = a * g_star_grad(x) + 2 * b * (x - c) + d * np.sign(x - e) + f
        with np.errstate(divide="ignore"):
            return out - al / x if al else out

    def hess(x):
        x = np.asarray(x, dtype=float)
        out = a * g_star_hess(x) + 2 * b
        with np.errstate(divide="ignore"):
            return out + al / x ** 2 if al else out

    return RadialPotential(name, dual, grad, hess,
                           meta={"family": "random", "coef": (a, b, c, d, e, f, h, al)})


def random_nonneg_bump(rng: np.random.Generator):
    """Coefficients of a nonnegative convex function ``b (x-c)^2 + d |x-e| + f0``."""
    return rng.uniform(0.0, 1.5), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), \
        rng.uniform(0.05, 0.95), rng.uniform(0.0, 0.5)


def add_convex_bump(u: RadialPotential, coef, name: str) -> RadialPotential:
    """Potential with dual ``phi_u* + b (x-c)^2 + d |x-e| + f0`` (so it lies below ``u``)."""
    b, c, d, e, f0 = coef

    def bump(x):
        x = np.asarray(x, dtype=float)
        return b * (x - c) ** 2 + d * np.abs(x - e) + f0

    hess = None
    if u.dual_hess_fn is not None:
        def hess(x):
            return u.dual_hess_fn(x) + 2 * b
    return RadialPotential(name, lambda x: u.dual(x) + bump(x),
                           lambda x: u.dual_grad(x) + 2 * b * (np.asarray(x) - c) + d * np.sign(np.asarray(x) - e),
                           hess, support=u.support)


def random_ordered_triple(rng: np.random.Generator):
    """Potentials ``u >= v >= w`` built from ordered duals."""
    u = random_potential(rng, "u")
    v = add_convex_bump(u, random_nonneg_bump(rng), "v")
    w = add_convex_bump(v, random_nonneg_bump(rng), "w")
    return u, v, w
