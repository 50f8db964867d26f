"""Laplacian spectra on explicitly solvable convex domains and checks of semiclassical inequalities."""

from .semiclassics import lsc, f_dirichlet, f_neumann
from .spectra import (Ball, Box, DisjointUnion, Disk, Ends, Interval, MixedProduct, Product,
                      eigenvalues_below, parse_domain, domain_tag)
from .riesz import riesz_mean, counting, polya_ratio

__version__ = "0.1.0"
