"""
Bessel zeros for disk and ball spectra.

Function values come from scipy.special.jv. Zeros are located by interlacing
ladders (zeros of J_{nu+1} sit between consecutive zeros of J_nu) and polished
with a vectorised safeguarded Newton iteration that falls back to bisection.
Tables are cached on disk as plain text, one record per line.
"""

from __future__ import annotations

import hashlib
import math
import os
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special

KINDS = ("J", "Jprime", "Sprime")
FORMAT_HEADER = "besselzeros v1"
MAX_ORDER = 20000
NEWTON_TOL = 1e-15

_lock = threading.Lock()
_memo: dict = {}


class BracketError(RuntimeError):
    """Raised when a zero bracket fails to change sign or Newton does not settle."""


# ---------------------------------------------------------------- evaluation

def _j_and_dj(nu, x):
    j = special.jv(nu, x)
    jm = special.jv(nu - 1.0, x)
    return j, jm - nu / x * j


def _target(kind: str, nu):
    """Return g(x) -> (f, f') for the requested zero family."""
    if kind == "J":
        def g(x):
            j, dj = _j_and_dj(nu, x)
            return j, dj
    elif kind == "Jprime":
        def g(x):
            j, dj = _j_and_dj(nu, x)
            return dj, -dj / x - (1.0 - nu * nu / (x * x)) * j
    elif kind == "Sprime":
        # derivative of the spherical Bessel function, up to a positive factor
        def g(x):
            j, dj = _j_and_dj(nu, x)
            return x * dj - 0.5 * j, -0.5 * dj - (x - nu * nu / x) * j
    else:
        raise ValueError(f"unknown zero kind {kind!r}")
    return g


def residual(order: float, kind: str, z) -> np.ndarray:
    return np.asarray(_target(kind, order)(np.asarray(z, dtype=float))[0])


# ---------------------------------------------------------------- root polish

def _polish(g, lo, hi, x0, slo=None, maxit: int = 200) -> np.ndarray:
    """Safeguarded Newton on brackets [lo, hi]; slo is the sign of g at lo if known."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if lo.size == 0:
        return lo
    if slo is None:
        flo = g(lo)[0]
        fhi = g(hi)[0]
        if np.any(np.sign(flo) * np.sign(fhi) > 0):
            bad = int(np.argmax(np.sign(flo) * np.sign(fhi) > 0))
            raise BracketError(f"no sign change on [{lo[bad]}, {hi[bad]}]")
        slo = np.sign(flo)
    x = np.where((x0 > lo) & (x0 < hi), x0, 0.5 * (lo + hi))
    active = np.ones(x.shape, dtype=bool)
    for _ in range(maxit):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            return x
        xa = x[idx]
        f, fp = g(xa)
        hit = f == 0
        same = np.sign(f) == slo[idx]
        lo[idx] = np.where(same, xa, lo[idx])
        hi[idx] = np.where(same, hi[idx], xa)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / fp
        xn = xa - step
        out = ~((xn > lo[idx]) & (xn < hi[idx]))
        xn = np.where(out, 0.5 * (lo[idx] + hi[idx]), xn)
        xn = np.where(hit, xa, xn)
        # quadratic convergence: a Newton step below 1e-8 x leaves an error far below one ulp
        done = hit | (~out & (np.abs(step) <= 1e-8 * xa)) | (hi[idx] - lo[idx] <= 2 * NEWTON_TOL * xa)
        x[idx] = xn
        active[idx[done]] = False
    raise BracketError("safeguarded Newton did not converge")


def _alternating(n: int, first: float = 1.0) -> np.ndarray:
    return first * np.where(np.arange(n) % 2 == 0, 1.0, -1.0)


def mcmahon(order: float, k: int, kind: str = "J") -> float:
    """McMahon asymptotic guess for the k-th positive zero."""
    mu = 4.0 * order * order
    if kind == "J":
        b = (k + 0.5 * order - 0.25) * math.pi
        return b - (mu - 1) / (8 * b) - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * b) ** 3)
    if order == 0 and kind == "Jprime":
        k += 1
    b = (k + 0.5 * order - 0.75) * math.pi
    return b - (mu + 3) / (8 * b) - 4 * (7 * mu * mu + 82 * mu - 9) / (3 * (8 * b) ** 3)


def _scan_brackets(g, start: float, count: int, step: float = 0.5):
    """First `count` sign changes of g on (start, inf), scanned with a fixed step."""
    found_lo, found_hi = [], []
    a = start
    while len(found_lo) < count:
        xs = a + step * np.arange(0, 65)
        f = g(xs)[0]
        s = np.sign(f)
        ch = np.nonzero(s[:-1] * s[1:] <= 0)[0]
        for i in ch:
            if s[i] == 0:
                continue
            found_lo.append(xs[i])
            found_hi.append(xs[i + 1])
            if len(found_lo) == count:
                break
        a = xs[-1]
    return np.array(found_lo), np.array(found_hi)


def _check_order(order: float) -> float:
    o = float(order)
    if o < 0 or 2 * o != round(2 * o) or o > MAX_ORDER:
        raise ValueError(f"order must be an integer or half-integer in [0, {MAX_ORDER}], got {order!r}")
    return o


def bessel_zero(order: float, k: int, kind: str = "J") -> float:
    """k-th positive zero of J_order (kind J) or of its derivative (kind Jprime)."""
    nu = _check_order(order)
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    if kind not in ("J", "Jprime", "Sprime"):
        raise ValueError(f"unknown kind {kind!r}")
    if kind == "J" and nu == 0.5:
        return k * math.pi
    g = _target(kind, nu)
    start = max(nu * 0.5, 1e-3) if kind != "J" else max(nu, 1e-3)
    lo, hi = _scan_brackets(g, start, int(k))
    guess = np.array([mcmahon(nu, int(k), "J" if kind == "J" else "Jprime")])
    return float(_polish(g, lo[-1:], hi[-1:], guess)[0])


# ---------------------------------------------------------------- ladders

@dataclass
class ZeroTable:
    """All zeros below x_max for a ladder of orders base, base+1, ..."""

    family: str  # "int" or "half"
    kind: str
    x_max: float
    orders: np.ndarray
    zeros: np.ndarray

    def below(self, x: float):
        m = self.zeros < x
        return self.orders[m], self.zeros[m]


def _base_j_zeros(base: float, n: int) -> np.ndarray:
    k = np.arange(1, n + 1, dtype=float)
    if base == 0.5:
        return k * math.pi
    b = (k - 0.25) * math.pi
    g = _target("J", 0.0)
    guess = b + 1 / (8 * b) - 31 / (384 * b ** 3)
    return _polish(g, b, b + 0.2, guess)


def _extend(g, z: np.ndarray, need: int) -> np.ndarray:
    """Append zeros of g beyond z[-1] until len(z) >= need."""
    if len(z) >= need:
        return z
    lo, hi = _scan_brackets(g, float(z[-1]) + 1e-6, need - len(z))
    return np.concatenate([z, _polish(g, lo, hi, 0.5 * (lo + hi))])


def _j_ladder(base: float, x_max: float, max_order: float):
    """Yield (nu, zeros) with every J_nu zero below x_max plus two guards."""
    n0 = int(x_max / math.pi) + 3
    z = _base_j_zeros(base, n0)
    prev = None
    nu = base
    while nu <= max_order:
        yield nu, z
        # next order: one root in each gap of the current order
        nxt = nu + 1.0
        g = _target("J", nxt)
        lo, hi = z[:-1], z[1:]
        if prev is not None and len(prev) >= len(lo):
            guess = 2 * z[:-1] - prev[: len(lo)]
        else:
            guess = 0.5 * (lo + hi)
        # J_{nu+1}(j_{nu,k}) = -J_nu'(j_{nu,k}) has sign (-1)^(k+1)
        w = _polish(g, lo, hi, guess, slo=_alternating(lo.size))
        keep = int(np.searchsorted(w, x_max)) + 2
        w = _extend(g, w[:keep], keep)
        prev, z, nu = z, w, nxt


def _derivative_zeros(kind: str, nu: float, jz: np.ndarray, x_max: float) -> np.ndarray:
    g = _target(kind, nu)
    if kind == "Jprime":
        left = nu
    else:
        left = math.sqrt(nu * nu - 0.25)  # sqrt(l(l+1)) for nu = l + 1/2
    lo = np.concatenate([[left], jz[:-1]])
    hi = jz
    n = int(np.searchsorted(lo, x_max))
    if n == 0:
        return np.empty(0)
    lo, hi = lo[:n], hi[:n]
    if g(lo[:1])[0][0] <= 0:
        raise BracketError(f"derivative bracket start {left} has the wrong sign")
    z = _polish(g, lo, hi, 0.5 * (lo + hi), slo=_alternating(n))
    return z[z < x_max]


def _build_tables(family: str, x_max: float) -> dict:
    """J zeros and derivative zeros below x_max, sharing one ladder pass."""
    base = 0.0 if family == "int" else 0.5
    dkind = "Jprime" if family == "int" else "Sprime"
    parts = {"J": ([], []), dkind: ([], [])}
    j_done = False
    for nu, jz in _j_ladder(base, x_max, max_order=x_max + 2):
        if not j_done:
            z = jz[jz < x_max]
            if z.size == 0:
                j_done = True
            else:
                parts["J"][0].append(np.full(z.size, nu))
                parts["J"][1].append(z)
        # J_0' = -J_1 and j_0' = -j_1 are read off the J table by the caller
        if nu != base:
            if nu >= x_max:
                break
            z = _derivative_zeros(dkind, nu, jz, x_max)
            parts[dkind][0].append(np.full(z.size, nu))
            parts[dkind][1].append(z)
    out = {}
    for kind, (o, z) in parts.items():
        if o:
            out[kind] = ZeroTable(family, kind, x_max, np.concatenate(o), np.concatenate(z))
        else:
            out[kind] = ZeroTable(family, kind, x_max, np.empty(0), np.empty(0))
    return out


# ---------------------------------------------------------------- disk cache

def cache_dir() -> Path:
    env = os.environ.get("SPECLAB_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "speclab"


def _file_name(family: str, kind: str, x_max: float) -> str:
    key = f"{family}|{kind}|{x_max!r}|{NEWTON_TOL!r}|v1"
    h = hashlib.sha256(key.encode()).hexdigest()[:12]
    return f"zeros_{family}_{kind}_{h}.txt"


def write_table(path: Path, table: ZeroTable) -> None:
    lines = [FORMAT_HEADER,
             f"# family={table.family} kind={table.kind} x_max={table.x_max!r} tol={NEWTON_TOL!r}"]
    k = 0
    last = None
    for nu, z in zip(table.orders, table.zeros):
        k = k + 1 if nu == last else 1
        last = nu
        lines.append(f"{nu:.17g} {table.kind} {k} {z:.17g}")
    tmp = path.with_suffix(f".tmp{os.getpid()}")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_table(path: Path) -> ZeroTable:
    with open(path) as fh:
        head = fh.readline().strip()
        if head != FORMAT_HEADER:
            raise ValueError(f"{path}: bad header {head!r}")
        meta = dict(item.split("=", 1) for item in fh.readline().lstrip("# ").split())
        tokens = fh.read().split()
    arr = np.array(tokens, dtype=object).reshape(-1, 4)
    orders = arr[:, 0].astype(float)
    zeros = arr[:, 3].astype(float)
    return ZeroTable(meta["family"], meta["kind"], float(meta["x_max"]), orders, zeros)


def _round_up(x: float) -> float:
    return max(64.0, 2.0 ** (math.ceil(4 * math.log2(x)) / 4))


def zero_table(family: str, kind: str, x_needed: float, use_disk: bool = True) -> ZeroTable:
    """Zero table covering (0, x_needed); built once and reused from memory or disk."""
    if family not in ("int", "half") or kind not in KINDS:
        raise ValueError("bad table request")
    if (family, kind) in (("int", "Sprime"), ("half", "Jprime")):
        raise ValueError(f"kind {kind} is not tabulated for the {family} ladder")
    x_max = _round_up(x_needed)
    with _lock:
        for (fam, knd, xm), tab in _memo.items():
            if fam == family and knd == kind and xm >= x_needed:
                return tab
        path = cache_dir() / _file_name(family, kind, x_max)
        tab = None
        if use_disk and path.exists():
            try:
                tab = read_table(path)
            except (OSError, ValueError, KeyError):
                tab = None
        if tab is not None:
            _memo[(family, kind, x_max)] = tab
            return tab
        tables = _build_tables(family, x_max)
        for knd, t in tables.items():
            _memo[(family, knd, x_max)] = t
            if use_disk:
                try:
                    cache_dir().mkdir(parents=True, exist_ok=True)
                    write_table(cache_dir() / _file_name(family, knd, x_max), t)
                except OSError:
                    pass
        return tables[kind]


def clear_memory_cache() -> None:
    with _lock:
        _memo.clear()
