"""
Semiclassical constants and the extrapolation functions built from them.

All Gamma ratios are evaluated in log space and exponentiated once, so the
functions stay finite for large dimension and Riesz order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special

__all__ = [
    "WeylPrediction",
    "lsc",
    "log_lsc",
    "f_dirichlet",
    "f_neumann",
    "beta_euler",
    "digamma",
    "digamma_gap",
    "weyl_prediction",
    "bc_sign",
]


def _check_gamma(gamma: float, name: str = "gamma") -> float:
    g = float(gamma)
    if not math.isfinite(g) or g < 0:
        raise ValueError(f"{name} must be a finite nonnegative real, got {gamma!r}")
    return g


def _check_dim(d: int) -> int:
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    return int(d)


def log_lsc(gamma: float, d: int) -> float:
    """log of Gamma(gamma+1) / ((4 pi)^(d/2) Gamma(1+gamma+d/2))."""
    g = _check_gamma(gamma)
    d = _check_dim(d)
    return math.lgamma(g + 1.0) - 0.5 * d * math.log(4.0 * math.pi) - math.lgamma(1.0 + g + 0.5 * d)


def lsc(gamma: float, d: int) -> float:
    """Semiclassical (Weyl) constant L^sc_{gamma,d}."""
    return math.exp(log_lsc(gamma, d))


def _log_f_dirichlet(g: float, gp: float, d: int) -> float:
    a, ap = g + 0.5 * d, gp + 0.5 * d
    return (a * math.log(a) - ap * math.log(ap)
            + math.lgamma(1.0 + ap) + math.lgamma(1.0 + g)
            - math.lgamma(1.0 + a) - math.lgamma(1.0 + gp))


def f_dirichlet(gamma: float, gamma_prime: float, d: int) -> float:
    """Dirichlet extrapolation factor f^D_gamma(gamma'), decreasing in gamma', >= 1."""
    g = _check_gamma(gamma)
    gp = _check_gamma(gamma_prime, "gamma_prime")
    d = _check_dim(d)
    if gp > g:
        raise ValueError("gamma_prime must not exceed gamma")
    return math.exp(_log_f_dirichlet(g, gp, d))


def f_neumann(gamma: float, gamma_prime: float, d: int) -> float:
    """Neumann extrapolation factor f^N_gamma(gamma') = L_{gamma,d}/L_{gamma',d}, in (0, 1]."""
    g = _check_gamma(gamma)
    gp = _check_gamma(gamma_prime, "gamma_prime")
    d = _check_dim(d)
    if gp > g:
        raise ValueError("gamma_prime must not exceed gamma")
    return math.exp(log_lsc(g, d) - log_lsc(gp, d))


def beta_euler(x: float, y: float) -> float:
    """Euler Beta function Gamma(x)Gamma(y)/Gamma(x+y)."""
    if not (x > 0 and y > 0):
        raise ValueError("beta_euler needs positive arguments")
    return math.exp(math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y))


def digamma(s: float) -> float:
    """Digamma function psi(s) for s > 0."""
    if not s > 0:
        raise ValueError("digamma is only provided for s > 0")
    return float(special.digamma(s))


def digamma_gap(d: int) -> float:
    """1 + ln(d/2) + psi(1) - psi(1 + d/2); nonnegative for every d >= 1."""
    d = _check_dim(d)
    return 1.0 + math.log(0.5 * d) + digamma(1.0) - digamma(1.0 + 0.5 * d)


def bc_sign(bc) -> int:
    """-1 for Dirichlet, +1 for Neumann."""
    tag = getattr(bc, "value", bc)
    if tag in ("D", "dirichlet", "Dirichlet"):
        return -1
    if tag in ("N", "neumann", "Neumann"):
        return 1
    raise ValueError(f"boundary condition must be D or N, got {bc!r}")


@dataclass(frozen=True)
class WeylPrediction:
    leading: float
    boundary_term: float
    bc_sign: int

    @property
    def two_term(self) -> float:
        return self.leading + self.bc_sign * self.boundary_term


def weyl_prediction(gamma: float, d: int, volume: float, surface: float,
                    lam: float, bc) -> WeylPrediction:
    """Leading and boundary terms of the two-term Weyl expansion of a Riesz mean."""
    g = _check_gamma(gamma)
    d = _check_dim(d)
    if not volume > 0 or surface < 0 or lam < 0:
        raise ValueError("need volume > 0, surface >= 0, lambda >= 0")
    sign = bc_sign(bc)
    if lam == 0:
        return WeylPrediction(0.0, 0.0, sign)
    leading = lsc(g, d) * volume * lam ** (g + 0.5 * d)
    if surface == 0:
        boundary = 0.0
    elif d == 1:
        # L^sc_{gamma,0} = 1 and H^0 counts boundary points
        boundary = 0.25 * surface * lam ** g
    else:
        boundary = 0.25 * lsc(g, d - 1) * surface * lam ** (g + 0.5 * (d - 1))
    return WeylPrediction(leading, boundary, sign)
