"""Convergence experiments, their contracts and CSV output."""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import finsler, radial, sampling, spectral
from .finsler import d_pk
from .quantize import (
    fs_map,
    hilbert_map,
    max_principle_check,
    positivity_margin,
    quantized_geodesic,
    quantum_rooftop,
)

EXPERIMENTS = ("points", "distance", "geodesic", "rooftop", "rooftop-distance",
               "lidskii-matrix", "lidskii-potential", "maxprinciple", "matrix-suite")
DEFAULT_K = (8, 16, 32, 64, 128, 256)
DEFAULT_T = (0.25, 0.5, 0.75)
CSV_HEADER = ("experiment", "p", "k", "t", "value", "reference", "abs_err", "rel_err",
              "runtime_ms", "seed", "grid_m")
NOISE_FLOOR = 1e-9

DEFAULT_POTENTIALS = {
    "points": ("ua:0.5",),
    "distance": ("flat:0", "ua:0.5"),
    "geodesic": ("ua:0.5", "shift:1"),
    "rooftop": ("shift:1", "shift:-1"),
    "rooftop-distance": ("shift:1", "shift:-1"),
    "maxprinciple": ("ua:0.5", "shift:1"),
}

# end tolerances; provisional calibrations, see README
DEFAULT_TOL = {
    "points": 0.05,
    "distance": 0.05,
    "geodesic": 0.05,
    "rooftop": 0.10,
    "rooftop-distance": 0.10,
    "lidskii-matrix": 1e-9,
    "lidskii-potential": 1e-8,
    "maxprinciple": 1e-8,
}


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 3)."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    p: float = 1.0
    k_list: tuple = DEFAULT_K
    t_list: tuple = DEFAULT_T
    potentials: tuple = ()
    grid_m: int = radial.DEFAULT_M
    seed: int = 0
    out: str | None = None
    tol: float | None = None
    n_samples: int = 500
    dim: int = 16
    timing: bool = False
    threads: int | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if not (self.p >= 1 and math.isfinite(self.p)):
            raise ConfigError("p must be a finite real >= 1")
        ks = tuple(int(k) for k in self.k_list)
        if any(k < 1 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
            raise ConfigError("k_list must be strictly increasing positive integers")
        ts = tuple(float(t) for t in self.t_list)
        if any(not 0.0 <= t <= 1.0 for t in ts):
            raise ConfigError("t values must lie in [0, 1]")
        if self.grid_m < 16:
            raise ConfigError("grid_m must be at least 16")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "k_list", ks)
        object.__setattr__(self, "t_list", ts)
        pots = tuple(self.potentials) or DEFAULT_POTENTIALS.get(self.experiment, ())
        object.__setattr__(self, "potentials", pots)
        for spec in pots:
            try:
                radial.parse_potential(spec)
            except (ValueError, OSError) as exc:
                raise ConfigError(f"bad potential spec {spec!r}: {exc}") from exc

    @property
    def tolerance(self) -> float | None:
        return self.tol if self.tol is not None else DEFAULT_TOL.get(self.experiment)


@dataclass
class Row:
    experiment: str
    p: float
    k: int | None
    t: float | None
    value: float
    reference: float | None = None
    abs_err: float | None = None
    rel_err: float | None = None
    runtime_ms: float | None = None
    seed: int | None = None
    grid_m: int | None = None


@dataclass
class Result:
    config: ExperimentConfig
    rows: list
    passed: bool
    messages: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


# helpers ---------------------------------------------------------------------

def decreasing_trend(values: Sequence[float], noise_floor: float = NOISE_FLOOR,
                     max_inversions: int = 1) -> bool:
    """Nonincreasing with at most ``max_inversions`` rises, ignoring values below twice the noise floor."""
    v = [x for x in values if x >= 2.0 * noise_floor]
    rises = sum(1 for a, b in zip(v, v[1:]) if b > a)
    return rises <= max_inversions


def thread_count(cfg: ExperimentConfig | None = None) -> int:
    cap = os.environ.get("FINSLER_QUANT_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            raise ConfigError("FINSLER_QUANT_THREADS must be an integer")
    if cfg is not None and cfg.threads:
        n = min(n, cfg.threads)
    return n


def _map_k(fn: Callable[[int], object], ks: Sequence[int], cfg: ExperimentConfig) -> list:
    workers = min(thread_count(cfg), len(ks))
    if workers <= 1:
        return [fn(k) for k in ks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, ks))


@lru_cache(maxsize=None)
def potential(spec: str) -> radial.RadialPotential:
    return radial.parse_potential(spec)


@lru_cache(maxsize=512)
def hilbert(spec: str, k: int):
    """``H_k`` of a parsed potential spec, cached across experiments."""
    return hilbert_map(potential(spec), k)


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, 1e3 * (time.perf_counter() - start)


def _row(cfg, value, k=None, t=None, reference=None, experiment=None, runtime=None):
    abs_err = rel_err = None
    if reference is not None:
        abs_err = abs(value - reference)
        rel_err = abs_err / abs(reference) if reference != 0 else None
    return Row(experiment or cfg.experiment, cfg.p, k, t, value, reference, abs_err, rel_err,
               runtime if cfg.timing else None, cfg.seed, cfg.grid_m)


def _need(cfg, n):
    if len(cfg.potentials) != n:
        raise ConfigError(f"{cfg.experiment} needs {n} potential spec(s), got {len(cfg.potentials)}")


def _finite_energy(cfg, *specs):
    for spec in specs:
        if not potential(spec).full_mass:
            raise ConfigError(f"{spec} is not a finite-energy potential (positive Lelong number)")


# experiments -------------------------------------------------------------------

def run_points(cfg: ExperimentConfig) -> Result:
    """``d_p(FS_k(H_k(u)), u)`` over ``k``."""
    _need(cfg, 1)
    spec = cfg.potentials[0]
    _finite_energy(cfg, spec)
    u = potential(spec)
    scale = radial.d_p_oracle(u, radial.flat(0.0), cfg.p, cfg.grid_m)

    def one(k):
        return _timed(lambda: radial.d_p_oracle(fs_map(hilbert(spec, k)), u, cfg.p, cfg.grid_m))

    rows = []
    for k, (val, ms) in zip(cfg.k_list, _map_k(one, cfg.k_list, cfg)):
        row = _row(cfg, val, k=k, reference=0.0, runtime=ms)
        row.rel_err = val / scale if scale > 0 else None
        rows.append(row)
    vals = [r.value for r in rows]
    tol = cfg.tolerance
    final = vals[-1]
    ok_trend = decreasing_trend(vals)
    ok_final = final < tol * scale or final < tol
    msgs = [f"trend {'ok' if ok_trend else 'FAILED'}",
            f"final {final:.6g} vs {tol:g}*d_p(u,0) = {tol * scale:.6g} or absolute {tol:g}"]
    return Result(cfg, rows, ok_trend and ok_final, msgs, {"scale": scale})


def run_distance(cfg: ExperimentConfig) -> Result:
    """``d_{p,k}(H_k(u0), H_k(u1))`` against the oracle ``d_p(u0, u1)``."""
    _need(cfg, 2)
    a, b = cfg.potentials
    _finite_energy(cfg, a, b)
    ref = radial.d_p_oracle(potential(a), potential(b), cfg.p, cfg.grid_m)

    def one(k):
        return _timed(lambda: d_pk(hilbert(a, k), hilbert(b, k), cfg.p))

    rows = [_row(cfg, v, k=k, reference=ref, runtime=ms)
            for k, (v, ms) in zip(cfg.k_list, _map_k(one, cfg.k_list, cfg))]
    errs = [r.rel_err if r.rel_err is not None else r.abs_err for r in rows]
    ok_trend = decreasing_trend(errs)
    ok_final = errs[-1] < cfg.tolerance
    msgs = [f"trend {'ok' if ok_trend else 'FAILED'}", f"final error {errs[-1]:.6g} vs {cfg.tolerance:g}"]
    return Result(cfg, rows, ok_trend and ok_final, msgs, {"oracle": ref})


def run_geodesic(cfg: ExperimentConfig) -> Result:
    """``d_p(FS_k(U_t^k), u_t)`` with ``U^k`` the level-``k`` geodesic."""
    _need(cfg, 2)
    a, b = cfg.potentials
    _finite_energy(cfg, a, b)
    u0, u1 = potential(a), potential(b)
    targets = {t: radial.geodesic_t(u0, u1, t) for t in cfg.t_list}

    def one(k):
        g0, g1 = hilbert(a, k), hilbert(b, k)
        return [_timed(lambda: radial.d_p_oracle(fs_map(quantized_geodesic(g0, g1, t)),
                                                  targets[t], cfg.p, cfg.grid_m))
                for t in cfg.t_list]

    rows = []
    for k, per_t in zip(cfg.k_list, _map_k(one, cfg.k_list, cfg)):
        for t, (v, ms) in zip(cfg.t_list, per_t):
            rows.append(_row(cfg, v, k=k, t=t, reference=0.0, runtime=ms))
    ok, msgs = True, []
    for t in cfg.t_list:
        vals = [r.value for r in rows if r.t == t]
        good = decreasing_trend(vals) and vals[-1] < cfg.tolerance
        ok &= good
        msgs.append(f"t={t:g}: final {vals[-1]:.6g} vs {cfg.tolerance:g}, trend {'ok' if decreasing_trend(vals) else 'FAILED'}")
    return Result(cfg, rows, ok, msgs)


def run_rooftop(cfg: ExperimentConfig) -> Result:
    """Rooftop quantization.

    ``rooftop`` rows hold ``err_i = d_p(FS_k(P_k(G0, G1)), P(u0, u1))`` and
    ``rooftop-distance`` rows hold ``d_{p,k}(G0, P_k(G0, G1))`` against the
    oracle ``d_p(u0, P(u0, u1))``.  Relative errors are taken with respect to
    that oracle distance.
    """
    _need(cfg, 2)
    a, b = cfg.potentials
    _finite_energy(cfg, a, b)
    u0, u1 = potential(a), potential(b)
    roof = radial.rooftop(u0, u1)
    ref = radial.d_p_oracle(u0, roof, cfg.p, cfg.grid_m)
    with_i = cfg.experiment == "rooftop"

    def one(k):
        g0, g1 = hilbert(a, k), hilbert(b, k)
        pk = quantum_rooftop(g0, g1)
        err_i = _timed(lambda: radial.d_p_oracle(fs_map(pk), roof, cfg.p, cfg.grid_m)) if with_i else None
        dist = _timed(lambda: d_pk(g0, pk, cfg.p))
        return err_i, dist

    rows = []
    for k, (err_i, dist) in zip(cfg.k_list, _map_k(one, cfg.k_list, cfg)):
        if err_i is not None:
            row = _row(cfg, err_i[0], k=k, reference=0.0, experiment="rooftop", runtime=err_i[1])
            row.rel_err = err_i[0] / ref if ref > 0 else None
            rows.append(row)
        rows.append(_row(cfg, dist[0], k=k, reference=ref, experiment="rooftop-distance", runtime=dist[1]))
    ok, msgs = True, []
    for label in (("rooftop", "rooftop-distance") if with_i else ("rooftop-distance",)):
        sel = [r for r in rows if r.experiment == label]
        errs = [r.rel_err if r.rel_err is not None else r.abs_err for r in sel]
        good = decreasing_trend(errs) and errs[-1] < cfg.tolerance
        ok &= good
        msgs.append(f"{label}: final relative error {errs[-1]:.6g} vs {cfg.tolerance:g}, "
                    f"trend {'ok' if decreasing_trend(errs) else 'FAILED'}")
    return Result(cfg, rows, ok, msgs, {"oracle": ref})


def run_lidskii_matrix(cfg: ExperimentConfig) -> Result:
    """Gaps ``tr(log B)^p - tr(log A^{-1}B)^p - tr(log A)^p`` for random ``I <= A <= B``."""
    rng = np.random.default_rng(cfg.seed)
    rows, regenerated = [], 0
    for i in range(cfg.n_samples):
        n = int(rng.integers(1, cfg.dim + 1))
        while True:
            a, b = sampling.random_ordered_pair(rng, n, complex_=bool(rng.integers(2)))
            if spectral.loewner_leq(spectral.HermitianForm.identity(n), a) and spectral.loewner_leq(a, b):
                break
            regenerated += 1
        gap = spectral.lidskii_gap(a, b, cfg.p)
        rows.append(_row(cfg, gap, k=n, reference=0.0))
    worst = min(r.value for r in rows) if rows else 0.0
    ok = worst >= -cfg.tolerance
    return Result(cfg, rows, ok, [f"min gap {worst:.3e} (>= {-cfg.tolerance:g}), regenerated {regenerated}"],
                  {"min_gap": worst, "regenerated": regenerated})


def potential_lidskii_gap(u, v, w, p: float, m: int = radial.DEFAULT_M) -> float:
    """``d_p(u,w)^p - d_p(u,v)^p - d_p(v,w)^p`` for ``u >= v >= w``."""
    duv = radial.d_p_oracle(u, v, p, m, check=False) ** p
    dvw = radial.d_p_oracle(v, w, p, m, check=False) ** p
    duw = radial.d_p_oracle(u, w, p, m, check=False) ** p
    return duw - duv - dvw


def _ordered(u, v, w, m) -> bool:
    x, _ = radial.dual_mesh(m)
    du, dv, dw = u.dual(x), v.dual(x), w.dual(x)
    return bool(np.all(du <= dv + 1e-12 * (1 + np.abs(du))) and np.all(dv <= dw + 1e-12 * (1 + np.abs(dv))))


def run_lidskii_potential(cfg: ExperimentConfig) -> Result:
    """Potential Lidskii gaps on given ordered specs or on generated ordered dual triples."""
    rows, regenerated = [], 0
    if cfg.potentials:
        _need(cfg, 3)
        u, v, w = (potential(s) for s in cfg.potentials)
        _finite_energy(cfg, *cfg.potentials)
        if not _ordered(u, v, w, cfg.grid_m):
            raise ConfigError("lidskii-potential needs specs ordered as u >= v >= w")
        rows.append(_row(cfg, potential_lidskii_gap(u, v, w, cfg.p, cfg.grid_m), reference=0.0))
    else:
        rng = np.random.default_rng(cfg.seed)
        for i in range(cfg.n_samples):
            while True:
                u, v, w = radial.random_ordered_triple(rng)
                if _ordered(u, v, w, cfg.grid_m):
                    break
                regenerated += 1
            rows.append(_row(cfg, potential_lidskii_gap(u, v, w, cfg.p, cfg.grid_m), reference=0.0))
    worst = min(r.value for r in rows)
    ok = worst >= -cfg.tolerance
    return Result(cfg, rows, ok, [f"min gap {worst:.3e} (>= {-cfg.tolerance:g}), regenerated {regenerated}"],
                  {"min_gap": worst, "regenerated": regenerated})


def run_maxprinciple(cfg: ExperimentConfig) -> Result:
    """Largest entrywise log-gap ``log V_t^k - log H_k(v_t)`` along the dual-linear geodesic."""
    _need(cfg, 2)
    a, b = cfg.potentials
    _finite_energy(cfg, a, b)
    u0, u1 = potential(a), potential(b)

    def curve(t):
        return radial.geodesic_t(u0, u1, t)

    times = cfg.t_list
    margin = positivity_margin(curve, times)

    def one(k):
        return _timed(lambda: max_principle_check(curve, times, k, eps=0.0,
                                                  endpoints=(hilbert(a, k), hilbert(b, k))))

    rows, reports = [], []
    for k, (rep, ms) in zip(cfg.k_list, _map_k(one, cfg.k_list, cfg)):
        reports.append(rep)
        for t, viol in zip(times, rep.per_time):
            rows.append(_row(cfg, viol, k=k, t=t, reference=0.0, runtime=ms / len(times)))
    worst = max(r.value for r in rows)
    k0 = None
    for rep in reversed(reports):
        if rep.violation > cfg.tolerance:
            break
        k0 = rep.k
    hyp = margin >= -1e-9
    msgs = [f"positivity margin {margin + 0.0:.3g} ({'hypothesis holds' if hyp else 'hypothesis not satisfied'})",
            f"largest violation {worst:.3e} (<= {cfg.tolerance:g})", f"k0 = {k0}"]
    ok = worst <= cfg.tolerance if hyp else True
    return Result(cfg, rows, ok, msgs, {"margin": margin, "k0": k0, "hypothesis_ok": hyp})


def matrix_suite(cfg: ExperimentConfig) -> Result:
    """Property fuzz of the matrix layer; one row per property with its worst residual."""
    from .properties import MATRIX_PROPERTIES
    rng = np.random.default_rng(cfg.seed)
    rows, ok, msgs = [], True, []
    for name, check in MATRIX_PROPERTIES:
        worst, tol = check(rng, cfg.n_samples, cfg.dim)
        good = worst <= tol
        ok &= good
        rows.append(_row(cfg, worst, reference=tol, experiment=f"matrix-suite:{name}"))
        rows[-1].abs_err = rows[-1].rel_err = None
        msgs.append(f"{name}: worst {worst:.3e} (tol {tol:g}) {'ok' if good else 'FAILED'}")
    return Result(cfg, rows, ok, msgs)


RUNNERS = {
    "points": run_points,
    "distance": run_distance,
    "geodesic": run_geodesic,
    "rooftop": run_rooftop,
    "rooftop-distance": run_rooftop,
    "lidskii-matrix": run_lidskii_matrix,
    "lidskii-potential": run_lidskii_potential,
    "maxprinciple": run_maxprinciple,
    "matrix-suite": matrix_suite,
}


def run(cfg: ExperimentConfig) -> Result:
    res = RUNNERS[cfg.experiment](cfg)
    if cfg.out:
        emit_csv(res.rows, cfg.out)
    return res


# CSV ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def emit_csv(rows: Sequence[Row], path) -> None:
    """Write rows under the fixed header, ordered by ``k`` then ``t`` (stable)."""
    order = sorted(range(len(rows)), key=lambda i: (
        -1 if rows[i].k is None else rows[i].k, -1.0 if rows[i].t is None else rows[i].t))
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i in order:
            r = rows[i]
            w.writerow([r.experiment, _fmt(r.p), _fmt(r.k), _fmt(r.t), _fmt(r.value), _fmt(r.reference),
                        _fmt(r.abs_err), _fmt(r.rel_err), _fmt(r.runtime_ms), _fmt(r.seed), _fmt(r.grid_m)])


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **kw)
