"""The acceptance criteria as callable checks, shared by the test-suite and ``finsler-quant check``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import properties, radial
from .experiments import ExperimentConfig, run
from .quantize import fs_map, hilbert_map

K_LIST = (8, 16, 32, 64, 128, 256)
FAMILIES = ("flat:0", "ua:0.5", "shift:1", "cusp:0.5")


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float | None = None

    @property
    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        budget = f", budget {self.budget:g} s" if self.budget else ""
        return f"[{tag}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f} s{budget})"


def _timed(number, name, budget=None):
    def wrap(fn: Callable[[], tuple]) -> Callable[[], Criterion]:
        def inner() -> Criterion:
            start = time.perf_counter()
            ok, detail = fn()
            sec = time.perf_counter() - start
            if budget is not None and sec > budget:
                ok = False
                detail += "; over time budget"
            return Criterion(number, name, bool(ok), detail, sec, budget)
        inner.number = number
        inner.__name__ = f"criterion_{number}"
        return inner
    return wrap


@_timed(1, "closed-form pipeline", budget=5.0)
def criterion_1():
    s = np.linspace(-40.0, 40.0, 161)
    worst = 0.0
    for k in range(1, 65):
        u = fs_map(hilbert_map(radial.flat(0.0), k))
        exact = math.log(k + 1) / k
        worst = max(worst, float(np.max(np.abs(u.u(s) - exact))) / exact)
    return worst <= 1e-8, f"max relative error {worst:.2e} over k = 1..64"


@_timed(2, "quantum Pythagorean", budget=10.0)
def criterion_2():
    worst, _ = properties.pythagorean(np.random.default_rng(2), 500, 32)
    return worst < 1e-9, f"max residual {worst:.2e} over 500 pairs"


@_timed(3, "matrix Lidskii", budget=10.0)
def criterion_3():
    worst, _ = properties.lidskii(np.random.default_rng(3), 1000, 16)
    return -worst >= -1e-9, f"min gap {-worst:.2e} over 1000 triples"


@_timed(4, "geodesic minimality fuzz")
def criterion_4():
    worst, _ = properties.path_minimality(np.random.default_rng(4), 200, 12)
    return worst <= 1e-8, f"max (d_chi - inscribed length) {worst:.2e} over 200 pairs"


@_timed(5, "distance quantization", budget=120.0)
def criterion_5():
    res = run(ExperimentConfig("distance", p=1.0, k_list=K_LIST, potentials=("flat:0", "ua:0.5")))
    errs = [r.rel_err for r in res.rows]
    return res.passed and abs(res.extra["oracle"] - 0.5) < 1e-9, \
        f"oracle {res.extra['oracle']:.12g}, relative errors {_seq(errs)}"


@_timed(6, "point quantization")
def criterion_6():
    ok, parts = True, []
    for spec in FAMILIES:
        res = run(ExperimentConfig("points", p=1.0, k_list=K_LIST, potentials=(spec,)))
        ok &= res.passed
        parts.append(f"{spec} final {res.rows[-1].value:.4g}{'' if res.passed else ' FAILED'}")
    return ok, "; ".join(parts)


@_timed(7, "geodesic quantization")
def criterion_7():
    res = run(ExperimentConfig("geodesic", p=1.0, k_list=K_LIST, t_list=(0.25, 0.5, 0.75),
                               potentials=("ua:0.5", "shift:1")))
    finals = [r.value for r in res.rows if r.k == K_LIST[-1]]
    return res.passed, f"final errors {_seq(finals)} (t = 1/4, 1/2, 3/4)"


@_timed(8, "rooftop quantization")
def criterion_8():
    res = run(ExperimentConfig("rooftop", p=1.0, k_list=K_LIST, potentials=("shift:1", "shift:-1")))
    ref = res.extra["oracle"]
    fin = {r.experiment: r.rel_err for r in res.rows if r.k == K_LIST[-1]}
    return res.passed and abs(ref - 0.25) < 1e-9, \
        f"oracle {ref:.12g}; final relative err_i {fin['rooftop']:.3g}, err_ii {fin['rooftop-distance']:.3g}"


@_timed(9, "potential Lidskii")
def criterion_9():
    worst = math.inf
    for p in (1.0, 2.0, 3.0):
        res = run(ExperimentConfig("lidskii-potential", p=p, n_samples=500, seed=9))
        worst = min(worst, res.extra["min_gap"])
    return worst >= -1e-8, f"min gap {worst:.2e} over 500 triples x p in (1, 2, 3)"


@_timed(10, "quantized maximum principle")
def criterion_10():
    res = run(ExperimentConfig("maxprinciple", k_list=(32, 64, 128),
                               t_list=tuple(i / 10 for i in range(1, 10)), potentials=("ua:0.5", "shift:1")))
    worst = max(r.value for r in res.rows)
    return res.passed and res.extra["hypothesis_ok"] and worst <= 1e-8, \
        f"largest log-violation {worst:.3e}; positivity margin {res.extra['margin'] + 0.0:.2g}"


def oracle_self_consistency(rng, pairs: int = 200, m: int = radial.DEFAULT_M):
    """Pythagorean and constant-speed residuals and the empirical double-estimate constant."""
    pyth = speed = 0.0
    ratios = []
    for i in range(pairs):
        p = (1.0, 2.0, 3.0)[i % 3]
        u0 = radial.random_potential(rng, "u0")
        u1 = radial.random_potential(rng, "u1")
        roof = radial.rooftop(u0, u1)
        d = radial.d_p_oracle(u0, u1, p, m)
        a = radial.d_p_oracle(u0, roof, p, m)
        b = radial.d_p_oracle(roof, u1, p, m)
        pyth = max(pyth, abs(d ** p - a ** p - b ** p) / (1 + d ** p))
        s, t = np.sort(rng.uniform(0, 1, 2))
        dst = radial.d_p_oracle(radial.geodesic_t(u0, u1, s), radial.geodesic_t(u0, u1, t), p, m)
        speed = max(speed, abs(dst - (t - s) * d) / (1 + d))
        ip = radial.i_p_functional(u0, u1, p, m)
        if d > 1e-8:
            ratios.append(max(ip / d ** p, d ** p / ip))
    return pyth, speed, max(ratios)


@_timed(11, "oracle self-consistency")
def criterion_11():
    pyth, speed, c = oracle_self_consistency(np.random.default_rng(11))
    ok = pyth < 1e-6 and speed < 1e-6 and math.isfinite(c) and c >= 1.0
    return ok, f"Pythagorean {pyth:.2e}, constant speed {speed:.2e}, empirical double-estimate C = {c:.4g}"


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11)


def _seq(vals):
    return "[" + ", ".join(f"{v:.3g}" for v in vals) + "]"


def run_all(selected=None, echo=print) -> list:
    out = []
    for crit in CRITERIA:
        if selected and crit.number not in selected:
            continue
        res = crit()
        echo(res.line)
        out.append(res)
    return out
