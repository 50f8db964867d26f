"""
Riesz means, counting functions and Polya ratios on top of exact spectra.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import spectra
from .semiclassics import beta_euler, lsc, weyl_prediction
from .spectra import Domain, EigenvalueList, dimension, volume

__all__ = [
    "RieszReport", "FamilyEstimate", "spectrum", "riesz_mean", "counting",
    "polya_ratio", "ratio_curve", "aizenman_lieb_check", "al_quadrature",
    "two_term_residual", "family_r_estimate", "riesz_report", "write_riesz_csv",
    "RIESZ_CSV_HEADER",
]

RIESZ_CSV_HEADER = ["domain", "bc", "gamma", "lambda", "trace", "weyl1", "weyl2", "ratio"]


@lru_cache(maxsize=16)
def _cached_spectrum(dom, bc, cutoff):
    return spectra.eigenvalues_below(dom, bc, cutoff)


def spectrum(dom: Domain, bc, cutoff: float) -> EigenvalueList:
    """Eigenvalues below cutoff, memoised for repeated evaluations."""
    return _cached_spectrum(dom, bc, float(cutoff))


def _closed_cutoff(lam: float) -> float:
    return lam * (1 + 1e-9) + 1e-300


def riesz_mean(dom: Domain, bc, gamma: float, lam: float, ev: EigenvalueList | None = None) -> float:
    """Sum of (lam - lambda_k)_+^gamma; gamma = 0 gives the strict counting function."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam == 0:
        return 0.0
    if ev is None:
        ev = spectrum(dom, bc, lam)
    return ev.riesz(gamma, lam)


def counting(dom: Domain, bc, lam: float, convention: str = "strict",
             ev: EigenvalueList | None = None) -> int:
    """#{k : lambda_k < lam} (strict) or #{k : lambda_k <= lam} (closed)."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if convention not in ("strict", "closed"):
        raise ValueError("convention must be strict or closed")
    closed = convention == "closed"
    if ev is None:
        if lam == 0 and not closed:
            return 0
        ev = spectrum(dom, bc, _closed_cutoff(lam) if closed else lam)
    if lam == 0 and not closed:
        return 0
    return ev.count(lam, closed=closed)


def weyl_leading(dom: Domain, gamma: float, lam: float) -> float:
    return lsc(gamma, dimension(dom)) * volume(dom) * lam ** (gamma + 0.5 * dimension(dom))


def polya_ratio(dom: Domain, bc, gamma: float, lam: float, ev: EigenvalueList | None = None) -> float:
    """Riesz mean divided by its Weyl leading term."""
    if not lam > 0:
        raise ValueError("the Polya ratio needs lambda > 0")
    return riesz_mean(dom, bc, gamma, lam, ev) / weyl_leading(dom, gamma, lam)


def ratio_curve(dom: Domain, bc, gamma: float, lams: Sequence[float],
                ev: EigenvalueList | None = None) -> np.ndarray:
    """Polya ratios at every lambda in lams, reusing one spectrum."""
    lams = np.asarray(lams, dtype=float)
    if lams.size == 0:
        return lams
    if ev is None:
        ev = spectrum(dom, bc, float(lams.max()))
    d = dimension(dom)
    norm = lsc(gamma, d) * volume(dom) * lams ** (gamma + 0.5 * d)
    if gamma == 0:
        return ev.counts(lams) / norm
    return np.array([ev.riesz(gamma, float(x)) for x in lams]) / norm


# ---------------------------------------------------------------- Aizenman-Lieb

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _gl(f, a: float, b: float) -> float:
    x = 0.5 * (b - a) * _GL_X + 0.5 * (b + a)
    return 0.5 * (b - a) * float(np.dot(_GL_W, f(x)))


def _adaptive(f, a: float, b: float, tol: float, depth: int = 0):
    whole = _gl(f, a, b)
    m = 0.5 * (a + b)
    left, right = _gl(f, a, m), _gl(f, m, b)
    err = abs(left + right - whole)
    if err <= tol or depth >= 40:
        return left + right, err
    l_val, l_err = _adaptive(f, a, m, 0.5 * tol, depth + 1)
    r_val, r_err = _adaptive(f, m, b, 0.5 * tol, depth + 1)
    return l_val + r_val, l_err + r_err


def al_quadrature(values, mult, gamma: float, gamma_prime: float, lam: float, tol: float):
    """Quadrature of int_0^lam (lam-t)^(g-g'-1) R_{g'}(t) dt; returns (value, error estimate).

    With u = (lam - t)^a, a = g - g', the kernel becomes du/a.  Each panel between
    consecutive eigenvalues is mapped by u = u_k - (u_k - u_{k+1}) s^2 so that the
    (t - lambda_k)^{g'} onset at its right end turns smooth in s.
    """
    a = gamma - gamma_prime
    values = np.asarray(values, dtype=float)
    mult = np.asarray(mult, dtype=float)
    below = values < lam
    values, mult = values[below], mult[below]
    if values.size == 0:
        return 0.0, 0.0
    ubreak = (lam - values) ** a  # decreasing in k
    ends = np.concatenate([ubreak, [0.0]])
    total, err = 0.0, 0.0
    npanel = values.size
    for k in range(npanel):
        hi, lo = ends[k], ends[k + 1]
        if hi <= lo:
            continue
        vk, mk = values[: k + 1], mult[: k + 1]

        def f(s, hi=hi, lo=lo, vk=vk, mk=mk):
            u = hi - (hi - lo) * s * s
            t = lam - u ** (1.0 / a)
            diff = np.maximum(t[:, None] - vk[None, :], 0.0)
            r = (np.power(diff, gamma_prime) if gamma_prime > 0 else (diff > 0) * 1.0) @ mk
            return r * 2.0 * (hi - lo) * s

        v, e = _adaptive(f, 0.0, 1.0, tol / npanel)
        total += v
        err += e
    return total / a, err / a


def aizenman_lieb_check(dom: Domain, bc, gamma: float, gamma_prime: float, lam: float,
                        ev: EigenvalueList | None = None):
    """(direct, integral_exact, integral_quadrature) for the Aizenman-Lieb identity."""
    if not gamma > gamma_prime >= 0:
        raise ValueError("need gamma > gamma_prime >= 0")
    if ev is None:
        ev = spectrum(dom, bc, lam)
    direct = ev.riesz(gamma, lam)
    b = beta_euler(1.0 + gamma_prime, gamma - gamma_prime)
    i = int(np.searchsorted(ev.values, lam, side="left"))
    per_eig = b * np.power(lam - ev.values[:i], gamma)
    exact = float(np.sum((per_eig * ev.mult[:i]).astype(np.longdouble))) / b
    tol = 1e-10 * max(direct, 1e-300) * b
    quad, err = al_quadrature(ev.values, ev.mult, gamma, gamma_prime, lam, tol)
    return direct, exact, quad / b


# ---------------------------------------------------------------- Weyl residuals

def two_term_residual(dom: Domain, bc, gamma: float, lam: float, ev: EigenvalueList | None = None):
    """(residual, residual / boundary term, log-corrected counting ratio)."""
    from .convexgeom import union_metrics

    if not lam > 0:
        raise ValueError("lambda must be positive")
    met = union_metrics(dom)
    d = dimension(dom)
    if ev is None:
        ev = spectrum(dom, bc, lam)
    trace = ev.riesz(gamma, lam)
    w = weyl_prediction(gamma, d, met.volume, met.surface, lam, bc)
    residual = trace - w.two_term
    rel = residual / w.boundary_term if w.boundary_term > 0 else math.inf
    n = ev.count(lam)
    w0 = lsc(0.0, d) * met.volume * lam ** (0.5 * d)
    log_term = 1.0 + max(0.0, math.log(met.inradius * math.sqrt(lam)))
    log_ratio = abs(n - w0) / (met.surface * lam ** (0.5 * (d - 1)) * log_term)
    return residual, rel, log_ratio


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class RieszReport:
    domain: str
    bc: str
    gamma: float
    lam: float
    trace: float
    weyl_leading: float
    weyl_two_term: float
    polya_ratio: float

    def row(self):
        return [self.domain, self.bc, repr(self.gamma), repr(self.lam), repr(self.trace),
                repr(self.weyl_leading), repr(self.weyl_two_term), repr(self.polya_ratio)]


def riesz_report(dom: Domain, bc, gamma: float, lam: float, ev: EigenvalueList | None = None) -> RieszReport:
    from .convexgeom import union_metrics

    trace = riesz_mean(dom, bc, gamma, lam, ev)
    met = union_metrics(dom)
    w = weyl_prediction(gamma, dimension(dom), met.volume, met.surface, lam, bc if bc in ("D", "N") else "D")
    ratio = trace / w.leading if w.leading > 0 else 0.0
    two = w.two_term if bc in ("D", "N") else math.nan
    return RieszReport(spectra.domain_tag(dom), spectra.bc_tag(bc), float(gamma), float(lam),
                       trace, w.leading, two, ratio)


def write_riesz_csv(reports: Sequence[RieszReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RIESZ_CSV_HEADER)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


# ---------------------------------------------------------------- family estimates

@dataclass(frozen=True)
class FamilyEstimate:
    family: str
    gamma: float
    sup_ratio: float
    inf_ratio: float
    argmax: tuple
    argmin: tuple
    n_params: int
    n_lambdas: int


def family_r_estimate(family: Callable[[float], Domain], bc, gamma: float,
                      lambda_grid: Sequence[float], param_grid: Sequence[float],
                      family_id: str = "family") -> FamilyEstimate:
    """Sup and inf of the Polya ratio over a parameter grid and a lambda grid.

    The sup is a lower bound for the Dirichlet excess constant over all convex
    sets and the inf an upper bound for the Neumann one.
    """
    lams = np.asarray(lambda_grid, dtype=float)
    params = list(param_grid)
    if lams.size == 0 or not params:
        raise ValueError("grids must be nonempty")
    best_hi, best_lo = (-math.inf, None), (math.inf, None)
    for p in params:
        r = ratio_curve(family(p), bc, gamma, lams)
        i, j = int(np.argmax(r)), int(np.argmin(r))
        if r[i] > best_hi[0]:
            best_hi = (float(r[i]), (p, float(lams[i])))
        if r[j] < best_lo[0]:
            best_lo = (float(r[j]), (p, float(lams[j])))
    return FamilyEstimate(family_id, float(gamma), best_hi[0], best_lo[0], best_hi[1], best_lo[1],
                          len(params), int(lams.size))
