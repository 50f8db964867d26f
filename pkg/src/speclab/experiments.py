"""
Asymptotic experiments: collapse limits along product families, the degenerate
small-inradius regime, family-restricted shape optimisation and the
multi-component trial construction.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .convexgeom import metrics_analytic, scale_to_unit_volume, union_metrics
from .riesz import ratio_curve
from .semiclassics import lsc
from .spectra import (Box, DisjointUnion, Disk, Interval, Product, dimension, eigenvalues_below,
                      scaled, volume)

VOLUME_TOL = 1e-12
FILLER_EPS = 1e-12


class HypothesisError(ValueError):
    """Raised when a collapse schedule leaves its declared inradius window."""


def pmap(fn, items, threads: int = 1) -> list:
    """Order-preserving map, optionally over a thread pool."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def trace(dom, bc, gamma: float, lam: float) -> float:
    return eigenvalues_below(dom, bc, lam).riesz(gamma, lam)


# ---------------------------------------------------------------- collapse

@dataclass(frozen=True)
class CollapseSpec:
    cross_section: object
    scale: float = 1.0
    axis: object = Interval(1.0)
    lambda_schedule: tuple = (1e2, 1e3, 1e4, 1e5, 1e6)
    gamma: float = 1.0
    bc: str = "D"
    rin_bounds: tuple = (1e-3, 1e3)

    def domain(self, lam: float):
        """(s / sqrt(lam)) * omega x axis."""
        return Product(scaled(self.cross_section, self.scale / math.sqrt(lam)), self.axis)


@dataclass(frozen=True)
class CollapseRow:
    j: int
    lam: float
    ratio: float
    limit: float
    gap: float
    rin_sqrt_lambda: float


def collapse_limit(spec: CollapseSpec) -> float:
    """Tr(s omega - 1)^(gamma + (d-m)/2) / (L_{gamma+(d-m)/2, m} |s omega|)."""
    omega = scaled(spec.cross_section, spec.scale)
    m = dimension(omega)
    d = m + dimension(spec.axis)
    g = spec.gamma + 0.5 * (d - m)
    return trace(omega, spec.bc, g, 1.0) / (lsc(g, m) * volume(omega))


def collapse_experiment(spec: CollapseSpec, threads: int = 1) -> list:
    """Ratio sequence along the schedule next to the closed-form limit."""
    limit = collapse_limit(spec)
    lo, hi = spec.rin_bounds

    def one(item):
        j, lam = item
        dom = spec.domain(lam)
        rs = metrics_analytic(dom).inradius * math.sqrt(lam)
        if not lo <= rs <= hi:
            raise HypothesisError(f"r_in sqrt(lambda) = {rs:.6g} left [{lo:g}, {hi:g}] at j = {j}")
        r = float(ratio_curve(dom, spec.bc, spec.gamma, [lam])[0])
        return CollapseRow(j, float(lam), r, limit, abs(r - limit), rs)

    return pmap(one, list(enumerate(spec.lambda_schedule, start=1)), threads)


def collapse_constant(rows: Sequence[CollapseRow], axis_length: float = 1.0) -> float:
    """Fitted K with gap_j <= K / ell_j, where ell_j = sqrt(lambda_j) * axis length."""
    return max(r.gap * math.sqrt(r.lam) * axis_length for r in rows) if rows else 0.0


# ---------------------------------------------------------------- degenerate regime

@dataclass(frozen=True)
class DegenerateRow:
    param: float
    lam: float
    rin_sqrt_lambda: float
    ratio: float
    below_hersch_protter: bool


def degenerate_regime(family: Callable, schedule: Sequence, bc: str, gamma: float = 1.0) -> list:
    """Normalised traces along (param, lambda) pairs with r_in sqrt(lambda) -> 0."""
    out = []
    for p, lam in schedule:
        dom = family(p)
        rin = metrics_analytic(dom).inradius
        r = float(ratio_curve(dom, bc, gamma, [lam])[0])
        out.append(DegenerateRow(float(p), float(lam), rin * math.sqrt(lam), r,
                                 lam < math.pi ** 2 / (4 * rin * rin)))
    return out


# ---------------------------------------------------------------- shape optimisation

@dataclass
class OptResult:
    family: str
    bc: str
    gamma: float
    lam: float
    best_param: object
    best_value: float
    polya_ratio: float
    r_in_sqrt_lambda: float
    component_count: int
    probe_best: float = math.nan
    stagnated: bool = False
    probes: int = 0

    def as_dict(self) -> dict:
        p = self.best_param
        p = list(p) if isinstance(p, (tuple, list, np.ndarray)) else p
        return {"family": self.family, "bc": self.bc, "gamma": self.gamma, "lambda": self.lam,
                "best_param": p, "best_value": self.best_value, "polya_ratio": self.polya_ratio,
                "r_in_sqrt_lambda": self.r_in_sqrt_lambda, "component_count": self.component_count,
                "probe_best": self.probe_best, "stagnated": self.stagnated, "probes": self.probes}


def family_domain(name: str, param):
    """Unit-volume member of a named family."""
    if name == "rect2":
        a = float(param)
        dom = Box((math.exp(0.5 * a), math.exp(-0.5 * a)))
    elif name == "box3":
        a, b = (float(x) for x in param)
        dom = Box((math.exp(a), math.exp(b), math.exp(-a - b)))
    elif name == "cylinder":
        # log of height over diameter
        a = float(param)
        dom = Product(Disk(1.0), Interval(2.0 * math.exp(a)))
    elif name == "k_squares":
        k = int(param)
        dom = DisjointUnion(tuple(Box((1.0, 1.0)) for _ in range(k)))
    else:
        raise ValueError(f"unknown shape family {name!r}")
    dom, _ = scale_to_unit_volume(dom)
    if abs(volume(dom) - 1.0) > VOLUME_TOL:
        raise AssertionError("unit-volume constraint violated")
    return dom


def _family_dim(name: str) -> int:
    return 2 if name in ("rect2", "k_squares") else 3


def _objective(name: str, bc, gamma: float, lam: float):
    if name == "k_squares":
        # k squares of area 1/k: k^(1+gamma) Tr(Q, lam / k)
        def f(k):
            k = int(k)
            return k ** (1.0 + gamma) * trace(Box((1.0, 1.0)), bc, gamma, lam / k)
        return f

    def f(p):
        return trace(family_domain(name, p), bc, gamma, lam)
    return f


def _param_range(name: str, lam: float) -> float:
    """Largest |log-aspect| with a possibly nonzero Dirichlet trace, plus slack."""
    return 2.0 * max(math.log(math.sqrt(lam) / math.pi), 0.0) + 1.0


def _golden(f, a: float, b: float, sign: float, tol: float):
    """Golden-section search for the maximum of sign * f on [a, b]; returns (x, f(x), stalled)."""
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = sign * f(c), sign * f(d)
    it = 0
    while b - a > tol and it < 200:
        it += 1
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = sign * f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = sign * f(d)
    x = 0.5 * (a + b)
    return x, f(x), it >= 200


def shapeopt_family(name: str, bc: str, gamma: float, lam: float, tol: float = 1e-6,
                    n_probe: int = 201, k_max: int = 32, zoom: int = 2) -> OptResult:
    """Sup (D) or inf (N) of the trace over a unit-volume family."""
    sign = 1.0 if bc == "D" else -1.0
    f = _objective(name, bc, gamma, lam)
    d = _family_dim(name)
    stagnated = False
    if name == "k_squares":
        ks = np.arange(1, k_max + 1)
        vals = np.array([f(k) for k in ks])
        i = int(np.argmax(sign * vals))
        best_p, best_v = int(ks[i]), float(vals[i])
        probe_best = best_v
        probes = ks.size
    elif name == "box3":
        amax = _param_range(name, lam) / 1.5
        grid = np.linspace(-amax, amax, 15)
        pts = [(a, b) for a in grid for b in grid]
        vals = np.array([f(p) for p in pts])
        i = int(np.argmax(sign * vals))
        probe_best = float(vals[i])
        res = optimize.minimize(lambda x: -sign * f(x), np.array(pts[i]), method="Nelder-Mead",
                                options={"xatol": tol, "fatol": 0.0, "maxiter": 2000})
        stagnated = not res.success
        best_p, best_v = tuple(float(x) for x in res.x), sign * float(-res.fun)
        if sign * best_v < sign * probe_best:
            best_p, best_v, stagnated = pts[i], probe_best, True
        probes = len(pts)
    else:
        # objectives are even in the log-aspect for rect2; cylinders need both signs
        amax = _param_range(name, lam)
        lo = 0.0 if name == "rect2" else -amax
        grid = np.linspace(lo, amax, n_probe)
        vals = np.array([f(a) for a in grid])
        i = int(np.argmax(sign * vals))
        probe_best = float(vals[i])
        a = grid[max(i - 1, 0)]
        b = grid[min(i + 1, grid.size - 1)]
        # lattice fluctuations make the objective multimodal on fine scales: zoom in with
        # nested probes before the golden-section polish
        for _ in range(zoom):
            sub = np.linspace(a, b, n_probe)
            sv = np.array([f(x) for x in sub])
            j = int(np.argmax(sign * sv))
            a, b = sub[max(j - 1, 0)], sub[min(j + 1, sub.size - 1)]
        x, v, stagnated = _golden(f, a, b, sign, tol)
        best_p, best_v = float(x), float(v)
        if sign * best_v < sign * probe_best:
            best_p, best_v = float(grid[i]), probe_best
        probes = grid.size
    if name == "k_squares":
        dom = family_domain(name, best_p)
        rin = union_metrics(dom).inradius
        comps = int(best_p)
    else:
        dom = family_domain(name, best_p)
        rin = metrics_analytic(dom).inradius
        comps = 1
    ratio = best_v / (lsc(gamma, d) * lam ** (gamma + 0.5 * d))
    return OptResult(name, bc, float(gamma), float(lam), best_p, best_v, ratio, rin * math.sqrt(lam),
                     comps, probe_best, stagnated, int(probes))


def shapeopt_trajectory(name: str, bc: str, gamma: float, lambda_grid: Sequence[float],
                        threads: int = 1, **kw):
    """OptResults along a lambda grid and a regime summary."""
    results = pmap(lambda lam: shapeopt_family(name, bc, gamma, float(lam), **kw), list(lambda_grid), threads)
    rs = [r.r_in_sqrt_lambda for r in results]
    if len(rs) >= 2:
        growing = rs[-1] > 2 * rs[0] and rs[-1] > 10
        regime = "ball-like" if growing else "collapse"
    else:
        regime = "undetermined"
    summary = {
        "family": name, "bc": bc, "gamma": gamma, "points": len(results),
        "r_in_sqrt_lambda": rs, "regime": regime,
        "limit_estimate": results[-1].polya_ratio if results else math.nan,
    }
    return results, summary


# ---------------------------------------------------------------- multi-component trial

@dataclass(frozen=True)
class TrialResult:
    domain: object = field(repr=False)
    copies: int
    filler_volume: float
    ratio: float
    target: float
    gap: float
    bound: float


def multicomponent_trial(omega_star, lambda_star: float, gamma: float, bc: str, lam: float) -> TrialResult:
    """M copies of sqrt(lambda*/lambda) omega* plus a cube filler of the leftover volume."""
    d = dimension(omega_star)
    vol = volume(omega_star)
    r = math.sqrt(lambda_star / lam)
    m = int(math.floor((lam / lambda_star) ** (0.5 * d) / vol * (1 + 1e-12)))
    if m < 1:
        raise ValueError("lambda too small for a single copy of omega*")
    piece = scaled(omega_star, r)
    fill = 1.0 - m * volume(piece)
    fill = 0.0 if fill < FILLER_EPS else fill
    parts = [piece] * m
    norm = lsc(gamma, d) * lam ** (gamma + 0.5 * d)
    t_piece = trace(piece, bc, gamma, lam)
    t_fill = 0.0
    if fill > 0:
        filler = Box((fill ** (1.0 / d),) * d)
        parts.append(filler)
        t_fill = trace(filler, bc, gamma, lam)
    ratio = (m * t_piece + t_fill) / norm
    target = trace(omega_star, bc, gamma, lambda_star) / (lsc(gamma, d) * vol * lambda_star ** (gamma + 0.5 * d))
    filler_ratio = t_fill / (norm * fill) if fill > 0 else 0.0
    bound = fill * (target + filler_ratio)
    return TrialResult(DisjointUnion(tuple(parts)), m, fill, ratio, target, abs(ratio - target), bound)
