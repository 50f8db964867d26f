"""
Exact Laplace spectra of explicitly solvable domains.

Domains are intervals, boxes, disks, 3D balls, products and disjoint unions.
Boundary conditions are Dirichlet ("D"), Neumann ("N"), per-end conditions on
an interval (Ends) and factor-wise conditions on a product (MixedProduct).
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import bessel

DEDUP_RTOL = 1e-9
DEFAULT_BUDGET = 50_000_000

__all__ = [
    "Interval", "Box", "Disk", "Ball", "Product", "DisjointUnion", "Domain",
    "Ends", "MixedProduct", "BoundarySpec", "EigenvalueList", "BudgetExceeded",
    "eigenvalues_below", "bessel_zero", "first_eigenvalue", "kth_eigenvalue",
    "continuity_probe", "dimension", "volume", "scaled", "domain_tag",
    "parse_domain", "bc_tag", "parse_bc", "lambda_for_count", "write_spectrum_csv",
    "read_spectrum_csv",
]


class BudgetExceeded(RuntimeError):
    """The requested cutoff would produce more eigenvalues than the entry budget."""


# ---------------------------------------------------------------- domains

def _positive(x, what):
    x = float(x)
    if not (x > 0 and math.isfinite(x)):
        raise ValueError(f"{what} must be a positive finite real, got {x!r}")
    return x


@dataclass(frozen=True)
class Interval:
    length: float

    def __post_init__(self):
        object.__setattr__(self, "length", _positive(self.length, "interval length"))


@dataclass(frozen=True)
class Box:
    lengths: tuple

    def __post_init__(self):
        ls = tuple(_positive(x, "box side") for x in self.lengths)
        if not ls:
            raise ValueError("a box needs at least one side")
        object.__setattr__(self, "lengths", ls)


@dataclass(frozen=True)
class Disk:
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "radius", _positive(self.radius, "disk radius"))


@dataclass(frozen=True)
class Ball:
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "radius", _positive(self.radius, "ball radius"))


@dataclass(frozen=True)
class Product:
    cross: "Domain"
    axis: "Domain"


@dataclass(frozen=True)
class DisjointUnion:
    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("a disjoint union needs at least one part")
        dims = {dimension(p) for p in parts}
        if len(dims) != 1:
            raise ValueError("parts of a disjoint union must share a dimension")
        object.__setattr__(self, "parts", parts)


Domain = Union[Interval, Box, Disk, Ball, Product, DisjointUnion]


def dimension(dom: Domain) -> int:
    if isinstance(dom, Interval):
        return 1
    if isinstance(dom, Box):
        return len(dom.lengths)
    if isinstance(dom, Disk):
        return 2
    if isinstance(dom, Ball):
        return 3
    if isinstance(dom, Product):
        return dimension(dom.cross) + dimension(dom.axis)
    if isinstance(dom, DisjointUnion):
        return dimension(dom.parts[0])
    raise TypeError(f"not a domain: {dom!r}")


def volume(dom: Domain) -> float:
    if isinstance(dom, Interval):
        return dom.length
    if isinstance(dom, Box):
        return math.prod(dom.lengths)
    if isinstance(dom, Disk):
        return math.pi * dom.radius ** 2
    if isinstance(dom, Ball):
        return 4.0 * math.pi * dom.radius ** 3 / 3.0
    if isinstance(dom, Product):
        return volume(dom.cross) * volume(dom.axis)
    if isinstance(dom, DisjointUnion):
        return math.fsum(volume(p) for p in dom.parts)
    raise TypeError(f"not a domain: {dom!r}")


def scaled(dom: Domain, t: float) -> Domain:
    """The dilate t * dom."""
    t = _positive(t, "scale factor")
    if isinstance(dom, Interval):
        return Interval(dom.length * t)
    if isinstance(dom, Box):
        return Box(tuple(x * t for x in dom.lengths))
    if isinstance(dom, Disk):
        return Disk(dom.radius * t)
    if isinstance(dom, Ball):
        return Ball(dom.radius * t)
    if isinstance(dom, Product):
        return Product(scaled(dom.cross, t), scaled(dom.axis, t))
    if isinstance(dom, DisjointUnion):
        return DisjointUnion(tuple(scaled(p, t) for p in dom.parts))
    raise TypeError(f"not a domain: {dom!r}")


def _min_scale(dom: Domain) -> float:
    if isinstance(dom, Interval):
        return dom.length
    if isinstance(dom, Box):
        return min(dom.lengths)
    if isinstance(dom, (Disk, Ball)):
        return 2 * dom.radius
    if isinstance(dom, Product):
        return min(_min_scale(dom.cross), _min_scale(dom.axis))
    return min(_min_scale(p) for p in dom.parts)


# ---------------------------------------------------------------- boundary specs

@dataclass(frozen=True)
class Ends:
    """Separate conditions at the left and right end of an interval."""

    left: str
    right: str

    def __post_init__(self):
        if self.left not in ("D", "N") or self.right not in ("D", "N"):
            raise ValueError("interval end conditions must be D or N")


@dataclass(frozen=True)
class MixedProduct:
    """Condition cross_bc on the cross-section factor and axis_bc on the axis factor."""

    cross_bc: "BoundarySpec"
    axis_bc: "BoundarySpec"


BoundarySpec = Union[str, Ends, MixedProduct]


def _check_bc(dom: Domain, bc: BoundarySpec) -> None:
    if isinstance(bc, str):
        if bc not in ("D", "N"):
            raise ValueError(f"boundary condition must be D or N, got {bc!r}")
        return
    if isinstance(bc, Ends):
        if not isinstance(dom, Interval):
            raise ValueError("per-end conditions apply to intervals only")
        return
    if isinstance(bc, MixedProduct):
        if not isinstance(dom, Product):
            raise ValueError("MixedProduct boundary conditions need a Product domain")
        _check_bc(dom.cross, bc.cross_bc)
        _check_bc(dom.axis, bc.axis_bc)
        return
    raise TypeError(f"not a boundary spec: {bc!r}")


# ---------------------------------------------------------------- eigenvalue lists

@dataclass(frozen=True, eq=False)
class EigenvalueList:
    values: np.ndarray
    mult: np.ndarray
    cutoff: float
    complete: bool = True
    _cum: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_cum", np.cumsum(self.mult))
        self.values.setflags(write=False)
        self.mult.setflags(write=False)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def entries(self):
        return [(float(v), int(m)) for v, m in zip(self.values, self.mult)]

    @property
    def total(self) -> int:
        return int(self._cum[-1]) if self._cum.size else 0

    def count(self, lam: float, closed: bool = False) -> int:
        """Eigenvalues < lam (strict) or <= lam (closed), with multiplicity."""
        self._check_range(lam, closed)
        i = int(np.searchsorted(self.values, lam, side="right" if closed else "left"))
        return int(self._cum[i - 1]) if i else 0

    def counts(self, lams, closed: bool = False) -> np.ndarray:
        lams = np.asarray(lams, dtype=float)
        for lam in (lams.max(initial=0.0),):
            self._check_range(lam, closed)
        i = np.searchsorted(self.values, lams, side="right" if closed else "left")
        cum = np.concatenate([[0], self._cum])
        return cum[i]

    def _check_range(self, lam: float, closed: bool) -> None:
        if lam > self.cutoff or (closed and lam >= self.cutoff):
            raise ValueError(f"lambda={lam} beyond the enumerated cutoff {self.cutoff}")

    def riesz(self, gamma: float, lam: float) -> float:
        """Sum over eigenvalues below lam of (lam - value)^gamma, with multiplicity."""
        self._check_range(lam, False)
        i = int(np.searchsorted(self.values, lam, side="left"))
        if i == 0:
            return 0.0
        if gamma == 0:
            return float(self._cum[i - 1])
        terms = np.power(lam - self.values[:i], gamma) * self.mult[:i]
        return float(np.sum(terms.astype(np.longdouble)))

    def riesz_many(self, gamma: float, lams) -> np.ndarray:
        return np.array([self.riesz(gamma, float(x)) for x in lams])

    def kth(self, k: int) -> float:
        """k-th eigenvalue (1-based, counted with multiplicity)."""
        if k < 1 or k > self.total:
            raise IndexError(k)
        return float(self.values[int(np.searchsorted(self._cum, k, side="left"))])

    def truncate(self, cutoff: float) -> "EigenvalueList":
        i = int(np.searchsorted(self.values, cutoff, side="left"))
        return EigenvalueList(self.values[:i].copy(), self.mult[:i].copy(), min(cutoff, self.cutoff), self.complete)


def _finalize(values: np.ndarray, mult: np.ndarray, cutoff: float) -> EigenvalueList:
    keep = values < cutoff
    values, mult = values[keep], mult[keep]
    order = np.argsort(values, kind="stable")
    values, mult = values[order], mult[order]
    if values.size:
        gap = np.diff(values) > DEDUP_RTOL * np.maximum(np.abs(values[1:]), 1e-300)
        starts = np.concatenate([[0], np.nonzero(gap)[0] + 1])
        values = values[starts]
        mult = np.add.reduceat(mult, starts)
    return EigenvalueList(values.astype(float), mult.astype(np.int64), float(cutoff), True)


# ---------------------------------------------------------------- raw spectra

def _interval_raw(length: float, bc: BoundarySpec, cutoff: float):
    if isinstance(bc, Ends):
        kinds = (bc.left, bc.right)
        if kinds == ("D", "D"):
            bc = "D"
        elif kinds == ("N", "N"):
            bc = "N"
        else:
            bc = "mixed"
    kmax = int(length * math.sqrt(cutoff) / math.pi) + 2
    k = np.arange(0, kmax + 1, dtype=float)
    if bc == "D":
        k = k[1:]
    elif bc == "mixed":
        k = k[1:] - 0.5
    v = (math.pi * k / length) ** 2
    v = v[v < cutoff]
    return v, np.ones(v.size, dtype=np.int64)


def _sum_raw(a, b, cutoff: float, budget: int):
    (av, am), (bv, bm) = a, b
    if av.size == 0 or bv.size == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    if av.size > bv.size:
        (av, am), (bv, bm) = (bv, bm), (av, am)
    ob = np.argsort(bv, kind="stable")
    bv, bm = bv[ob], bm[ob]
    room = (cutoff - av) * (1 + 1e-12) + 1e-300
    counts = np.searchsorted(bv, room, side="left")
    counts = np.where(av < cutoff, counts, 0)
    total = int(counts.sum())
    if total > budget:
        raise BudgetExceeded(f"{total} eigenvalue pairs exceed the entry budget {budget}")
    offs = np.cumsum(counts) - counts
    idx = np.arange(total) - np.repeat(offs, counts)
    vals = np.repeat(av, counts) + bv[idx]
    mult = np.repeat(am, counts) * bm[idx]
    keep = vals < cutoff
    return vals[keep], mult[keep]


def _table_values(family: str, kind: str, radius: float, cutoff: float):
    x = radius * math.sqrt(cutoff)
    tab = bessel.zero_table(family, kind, x)
    orders, zeros = tab.below(x)
    return orders, (zeros / radius) ** 2


def _disk_raw(radius: float, bc: str, cutoff: float):
    if bc == "D":
        m, v = _table_values("int", "J", radius, cutoff)
        mult = np.where(m == 0, 1, 2).astype(np.int64)
        return v, mult
    m1, v1 = _table_values("int", "J", radius, cutoff)
    radial = v1[m1 == 1]  # J_0' = -J_1
    m, v = _table_values("int", "Jprime", radius, cutoff)
    vals = np.concatenate([[0.0], radial, v])
    mult = np.concatenate([[1], np.ones(radial.size, dtype=np.int64), np.full(v.size, 2, dtype=np.int64)])
    return vals, mult.astype(np.int64)


def _ball_raw(radius: float, bc: str, cutoff: float):
    if bc == "D":
        nu, v = _table_values("half", "J", radius, cutoff)
        return v, np.rint(2 * nu).astype(np.int64)
    nu1, v1 = _table_values("half", "J", radius, cutoff)
    radial = v1[nu1 == 1.5]  # j_0' = -j_1
    nu, v = _table_values("half", "Sprime", radius, cutoff)
    vals = np.concatenate([[0.0], radial, v])
    mult = np.concatenate([[1], np.ones(radial.size, dtype=np.int64), np.rint(2 * nu).astype(np.int64)])
    return vals, mult


def _raw(dom: Domain, bc: BoundarySpec, cutoff: float, budget: int):
    if isinstance(dom, Interval):
        return _interval_raw(dom.length, bc, cutoff)
    if isinstance(dom, Box):
        acc = _interval_raw(dom.lengths[0], bc, cutoff)
        for ell in dom.lengths[1:]:
            acc = _sum_raw(acc, _interval_raw(ell, bc, cutoff), cutoff, budget)
        return acc
    if isinstance(dom, Disk):
        return _disk_raw(dom.radius, bc, cutoff)
    if isinstance(dom, Ball):
        return _ball_raw(dom.radius, bc, cutoff)
    if isinstance(dom, Product):
        if isinstance(bc, MixedProduct):
            cbc, abc = bc.cross_bc, bc.axis_bc
        else:
            cbc = abc = bc
        return _sum_raw(_raw(dom.cross, cbc, cutoff, budget), _raw(dom.axis, abc, cutoff, budget), cutoff, budget)
    if isinstance(dom, DisjointUnion):
        parts = [_raw(p, bc, cutoff, budget) for p in dom.parts]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    raise TypeError(f"not a domain: {dom!r}")


def eigenvalues_below(dom: Domain, bc: BoundarySpec, cutoff: float,
                      budget: int = DEFAULT_BUDGET) -> EigenvalueList:
    """All eigenvalues strictly below cutoff, merged with multiplicities."""
    _check_bc(dom, bc)
    cutoff = _positive(cutoff, "cutoff")
    vals, mult = _raw(dom, bc, cutoff, budget)
    if int(np.sum(mult)) > budget:
        raise BudgetExceeded(f"{int(np.sum(mult))} eigenvalues exceed the entry budget {budget}")
    return _finalize(np.asarray(vals, dtype=float), np.asarray(mult, dtype=np.int64), cutoff)


def bessel_zero(order: float, k: int, kind: str = "J") -> float:
    return bessel.bessel_zero(order, k, kind)


def kth_eigenvalue(dom: Domain, bc: BoundarySpec, k: int) -> float:
    """k-th eigenvalue counted with multiplicity (k = 1 is the lowest)."""
    _check_bc(dom, bc)
    cutoff = 16.0 * dimension(dom) / _min_scale(dom) ** 2
    while True:
        ev = eigenvalues_below(dom, bc, cutoff)
        if ev.total >= k:
            return ev.kth(k)
        cutoff *= 2.0


def first_eigenvalue(dom: Domain, bc: BoundarySpec) -> float:
    return kth_eigenvalue(dom, bc, 1)


def _perturb(dom: Domain, f: float) -> Domain:
    """Stretch the first size parameter of dom by the factor f."""
    if isinstance(dom, Interval):
        return Interval(dom.length * f)
    if isinstance(dom, Box):
        return Box((dom.lengths[0] * f,) + dom.lengths[1:])
    if isinstance(dom, Disk):
        return Disk(dom.radius * f)
    if isinstance(dom, Ball):
        return Ball(dom.radius * f)
    if isinstance(dom, Product):
        return Product(_perturb(dom.cross, f), dom.axis)
    if isinstance(dom, DisjointUnion):
        return DisjointUnion((_perturb(dom.parts[0], f),) + dom.parts[1:])
    raise TypeError(dom)


def continuity_probe(dom: Domain, bc: BoundarySpec, k: int, epsilon: float):
    """(lambda_k, lambda_k of the perturbed domain, |difference| / epsilon)."""
    if epsilon < 0 or epsilon >= 0.1:
        raise ValueError("epsilon must lie in [0, 0.1)")
    lam = kth_eigenvalue(dom, bc, k)
    if epsilon == 0:
        return lam, lam, 0.0
    lam_p = kth_eigenvalue(_perturb(dom, 1.0 + epsilon), bc, k)
    return lam, lam_p, abs(lam_p - lam) / epsilon


def lambda_for_count(dom: Domain, n: float) -> float:
    """lambda at which the Weyl count L_{0,d}|dom| lambda^(d/2) equals n."""
    from .semiclassics import lsc
    d = dimension(dom)
    return (n / (lsc(0.0, d) * volume(dom))) ** (2.0 / d)


# ---------------------------------------------------------------- text tags

def _fmt(x: float) -> str:
    return repr(float(x))


def domain_tag(dom: Domain) -> str:
    if isinstance(dom, Interval):
        return f"interval:{_fmt(dom.length)}"
    if isinstance(dom, Box):
        return "box:" + ",".join(_fmt(x) for x in dom.lengths)
    if isinstance(dom, Disk):
        return f"disk:{_fmt(dom.radius)}"
    if isinstance(dom, Ball):
        return f"ball:{_fmt(dom.radius)}"
    if isinstance(dom, Product):
        return f"product[{domain_tag(dom.cross)}|{domain_tag(dom.axis)}]"
    if isinstance(dom, DisjointUnion):
        return "union[" + "|".join(domain_tag(p) for p in dom.parts) + "]"
    raise TypeError(dom)


def _split_top(s: str) -> list:
    parts, depth, cur = [], 0, []
    for ch in s:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise ValueError("unbalanced brackets")
        if ch == "|" and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ValueError("unbalanced brackets")
    parts.append("".join(cur))
    return parts


def _numbers(body: str) -> list:
    try:
        return [float(x) for x in body.split(",") if x.strip()]
    except ValueError as exc:
        raise ValueError(f"bad number list {body!r}") from exc


def parse_domain(text: str) -> Domain:
    """Inverse of domain_tag; e.g. 'box:1,2' or 'product[disk:1|interval:2]'."""
    s = text.strip()
    m = re.fullmatch(r"(product|union)\[(.*)\]", s, flags=re.S)
    if m:
        parts = [parse_domain(p) for p in _split_top(m.group(2))]
        if m.group(1) == "product":
            if len(parts) != 2:
                raise ValueError("product needs exactly two factors")
            return Product(parts[0], parts[1])
        return DisjointUnion(tuple(parts))
    if ":" not in s:
        raise ValueError(f"unknown domain tag {text!r}")
    kind, body = s.split(":", 1)
    nums = _numbers(body)
    if kind in ("interval", "disk", "ball") and len(nums) != 1:
        raise ValueError(f"{kind} takes exactly one size")
    if kind == "interval":
        return Interval(nums[0])
    if kind == "box":
        return Box(tuple(nums))
    if kind == "disk":
        return Disk(nums[0])
    if kind == "ball":
        return Ball(nums[0])
    raise ValueError(f"unknown domain tag {kind!r}")


def bc_tag(bc: BoundarySpec) -> str:
    if isinstance(bc, str):
        return bc
    if isinstance(bc, Ends):
        return f"ends:{bc.left},{bc.right}"
    return f"mixed[{bc_tag(bc.cross_bc)}|{bc_tag(bc.axis_bc)}]"


def parse_bc(text: str) -> BoundarySpec:
    s = text.strip()
    if s in ("D", "N"):
        return s
    m = re.fullmatch(r"ends:([DN]),([DN])", s)
    if m:
        return Ends(m.group(1), m.group(2))
    m = re.fullmatch(r"mixed\[(.*)\]", s)
    if m:
        parts = _split_top(m.group(1))
        if len(parts) == 2:
            return MixedProduct(parse_bc(parts[0]), parse_bc(parts[1]))
    raise ValueError(f"unknown boundary condition {text!r}")


# ---------------------------------------------------------------- csv

def write_spectrum_csv(ev: EigenvalueList, fh=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "multiplicity"])
    for v, m in zip(ev.values, ev.mult):
        w.writerow([repr(float(v)), int(m)])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_spectrum_csv(text: str, cutoff: float) -> EigenvalueList:
    rows = list(csv.DictReader(io.StringIO(text)))
    vals = np.array([float(r["value"]) for r in rows])
    mult = np.array([int(r["multiplicity"]) for r in rows], dtype=np.int64)
    return EigenvalueList(vals, mult, float(cutoff), True)
