"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Tolerances and sizes are the ones fixed by the acceptance list; nothing here is
loosened to make a line green.  Criteria 1 (d = 1) and 6 (factor-2 boundary) are
known failures marked as strict expected failures; the parts of each that do hold
are asserted by separate tests.  See the decisions ledger.
"""

import functools
import math
import time
from decimal import Decimal, getcontext

import numpy as np
import pytest

from speclab import convexgeom as cg
from speclab import experiments as ex
from speclab import riesz
from speclab import verify as vf
from speclab.bessel import bessel_zero
from speclab.cli import SUITES, run
from speclab.semiclassics import digamma_gap, f_dirichlet, f_neumann, lsc
from speclab.spectra import Box, Disk, Interval, Product, first_eigenvalue, lambda_for_count


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


# ---------------------------------------------------------------- 1

def constant_identities():
    fails = {}
    worst_prod = 0.0
    mono_ok = True
    for d in range(1, 11):
        gs = np.linspace(0.0, 5.0, 101)
        vals = [lsc(float(g), d) for g in gs]
        mono_ok &= all(b < a for a, b in zip(vals, vals[1:]))
        if d >= 2:
            for g in gs:
                lhs = lsc(float(g), d)
                worst_prod = max(worst_prod, abs(lhs - lsc(float(g) + 0.5, d - 1) * lsc(float(g), 1)) / lhs)
    if worst_prod > 1e-13 or not mono_ok:
        fails["lsc"] = (worst_prod, mono_ok)
    rng = np.random.default_rng(2024)
    n = 10_000
    g = rng.uniform(0, 5, n)
    gp = g * rng.uniform(0, 1, n)
    gpp = gp * rng.uniform(0, 1, n)
    ds = rng.integers(1, 11, n)
    bad_by_dim = {}
    worst_semi = 0.0
    for a, b, c, d in zip(g, gp, gpp, ds):
        d = int(d)
        fd = [f_dirichlet(a, b, d), f_dirichlet(b, c, d), f_dirichlet(a, c, d)]
        fn = [f_neumann(a, b, d), f_neumann(b, c, d), f_neumann(a, c, d)]
        worst_semi = max(worst_semi, abs(fd[0] * fd[1] - fd[2]) / fd[2], abs(fn[0] * fn[1] - fn[2]) / fn[2])
        ok = (fd[2] >= fd[0] * (1 - 1e-10) and fd[0] >= 1 - 1e-10 and fn[2] <= fn[0] * (1 + 1e-10)
              and 0 < fn[0] <= 1 + 1e-10)
        if not ok:
            bad_by_dim[d] = bad_by_dim.get(d, 0) + 1
    if worst_semi > 1e-10:
        fails["semigroup"] = worst_semi
    if bad_by_dim:
        fails["monotone_range"] = bad_by_dim
    gaps = {d: digamma_gap(d) for d in range(1, 201)}
    neg = [d for d, v in gaps.items() if v < 0]
    if neg:
        fails["digamma"] = {d: gaps[d] for d in neg}
    return fails, worst_prod, worst_semi


@functools.lru_cache(maxsize=None)
def criterion1_result():
    return timed(constant_identities)


@pytest.mark.xfail(strict=True, reason="digamma inequality and f^D monotonicity fail at d = 1 (ledger)")
def test_criterion_01_constant_identities(criterion):
    (fails, wp, ws), dt = criterion1_result()
    detail = f"lsc product err {wp:.1e}, semigroup err {ws:.1e}, {dt:.1f}s"
    if fails:
        detail += f"; failing parts {sorted(fails)}: {fails}"
    ok = not fails and dt < 5
    criterion(1, ok, detail)
    assert ok


def test_criterion_01_holds_from_dimension_two():
    # every failing comparison of the full statement sits in d = 1
    (fails, wp, ws), dt = criterion1_result()
    assert set(fails) <= {"digamma", "monotone_range"}
    assert set(fails.get("digamma", {})) <= {1} and set(fails.get("monotone_range", {})) <= {1}
    assert dt < 5


# ---------------------------------------------------------------- 2

def test_criterion_02_polya_cuboids(criterion):
    doms = vf.random_boxes(100, 2, 101) + vf.random_boxes(100, 3, 202)
    rep, dt = timed(lambda: vf.verify_polya(doms, points=40))
    top = max(vf.lambda_max_for(d) / first_eigenvalue(d, "D") for d in doms)
    ok = rep.passed and rep.samples == 200 * 40 * 2 and dt < 120
    criterion(2, ok, f"{rep.violations} violations / {rep.samples} comparisons, lambda up to {top:.2g} lambda_1, "
                     f"worst margin {rep.worst_margin:.3g}, grid {rep.details['grid_hash']}, {dt:.0f}s")
    assert ok


# ---------------------------------------------------------------- 3

def test_criterion_03_bly_kroger(criterion):
    doms = (vf.family("boxes", 20, 3) + vf.family("disks", 8, 3) + vf.family("balls", 8, 3)
            + vf.family("cylinders", 8, 3) + vf.family("unions", 8, 3))

    def go():
        return [vf.verify_semiclassical(doms, bc, 1.0, points=40) for bc in ("D", "N")]

    (rd, rn), dt = timed(go)
    ok = rd.passed and rn.passed and dt < 180
    criterion(3, ok, f"D: {rd.violations}/{rd.samples} (sup ratio {rd.empirical_constants['sup_ratio']:.6f}), "
                     f"N: {rn.violations}/{rn.samples} (inf ratio {rn.empirical_constants['inf_ratio']:.6f}), "
                     f"{len(doms)} domains, {dt:.0f}s")
    assert ok


# ---------------------------------------------------------------- 4

def test_criterion_04_aizenman_lieb(criterion):
    doms = (vf.family("boxes2", 5, 11) + vf.family("disks", 5, 11) + vf.family("balls", 3, 11)
            + vf.family("cylinders", 3, 11) + vf.family("intervals", 2, 11) + vf.family("unions", 2, 11))
    assert len(doms) == 20

    def go():
        we = wq = 0.0
        for dom in doms:
            lam = lambda_for_count(dom, 800)
            for bc in ("D", "N"):
                for g, gp in ((1.0, 0.0), (1.0, 0.5), (2.0, 1.0)):
                    d, e, q = riesz.aizenman_lieb_check(dom, bc, g, gp, lam)
                    we, wq = max(we, abs(e - d) / d), max(wq, abs(q - d) / d)
        return we, wq

    (we, wq), dt = timed(go)
    ok = we <= 1e-12 and wq <= 1e-8 and dt < 60
    criterion(4, ok, f"closed form rel err {we:.1e}, quadrature rel err {wq:.1e}, 20 domains x 2 bc x 3 orders, {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------- 5

def test_criterion_05_laptev(criterion):
    rep, dt = timed(lambda: vf.verify_laptev_pointwise(100_000, seed=17, slack=1e-12))
    ok = rep.passed and rep.samples == 4 * 100_000 and dt < 5
    criterion(5, ok, f"{rep.violations} violations / 1e5 tuples x 4 chains, worst log margin {rep.worst_margin:.3g}, {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------- 6

@functools.lru_cache(maxsize=None)
def criterion6_result():
    omegas = [Interval(1.0), Box((1.0, 1.5)), Disk(1.0)]
    ells = [1.0, 10.0, 100.0, 1000.0]

    def grid(omega):
        lam1 = first_eigenvalue(omega, "D")
        return vf.geometric_grid(0.5 * lam1, (100.0 if omega == Interval(1.0) else 50.0) * lam1, 20)

    def go():
        viol, samples, decay = 0, 0, []
        for omega in omegas:
            lams = grid(omega)
            for gamma in (0.0, 0.5, 1.0):
                for ell in ells:
                    rep = vf.verify_cylinder_lift(omega, ell, gamma, lams)
                    viol += rep.violations
                    samples += rep.samples
                if gamma > 0:
                    for bc in ("D", "N"):
                        decay.append(vf.cylinder_decay(omega, ells[1:], gamma, lams, bc))
        return viol, samples, decay

    return timed(go)


@pytest.mark.xfail(strict=True, reason="gap/bound tends to exactly 1/2, so 'within a factor 2' is a "
                                       "boundary case that finite ell misses on both sides (ledger)")
def test_criterion_06_cylinder_lift(criterion):
    (viol, samples, decay), dt = criterion6_result()
    ratios = [v for dec in decay for v in dec["gap_over_bound"].values()]
    spreads = [dec["spread"] for dec in decay]
    below = sum(r < 0.5 for r in ratios)
    # literal reading: bound / 2 <= gap <= 2 bound for every configuration, gap * ell constant within 2
    ok = viol == 0 and min(ratios) >= 0.5 and max(ratios) <= 2 and max(spreads) <= 2 and dt < 120
    criterion(6, ok, f"{viol} sandwich violations / {samples}; gap/bound in [{min(ratios):.4f}, {max(ratios):.4f}] "
                     f"({below}/{len(ratios)} configurations below 1/2), max spread over ell {max(spreads):.3f}, {dt:.0f}s")
    assert ok


def test_criterion_06_sandwich_and_decay_rate():
    (viol, samples, decay), dt = criterion6_result()
    ratios = [v for dec in decay for v in dec["gap_over_bound"].values()]
    assert viol == 0 and samples > 0
    assert max(dec["spread"] for dec in decay) <= 2
    # gap/bound clusters at the Euler-Maclaurin value 1/2
    assert abs(float(np.median(ratios)) - 0.5) < 0.01
    assert dt < 120


# ---------------------------------------------------------------- 7

def test_criterion_07_bracketing(criterion):
    def go():
        viol, samples = 0, 0
        for box in (Box((1.0, 1.0)), Box((1.0, 1.0, 1.0))):
            lams = vf.geometric_grid(1.0, 1e4, 40)
            for slices in range(2, 9):
                for gamma in (0.0, 1.0):
                    rep = vf.verify_bracketing(box, slices, gamma, lams)
                    viol += rep.violations
                    samples += rep.samples
        return viol, samples

    (viol, samples), dt = timed(go)
    ok = viol == 0 and dt < 60
    criterion(7, ok, f"{viol} violations / {samples} comparisons, square and cube, 2-8 slices, {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------- 8

def test_criterion_08_collapse(criterion):
    def go():
        return {bc: ex.collapse_experiment(ex.CollapseSpec(Interval(2.0), bc=bc)) for bc in ("D", "N")}

    rows, dt = timed(go)
    parts = []
    ok = dt < 120
    for bc, rs in rows.items():
        last = rs[-1]
        within = abs(last.ratio - last.limit) <= 0.02 * abs(last.limit) if last.limit else last.ratio == 0
        gaps = [r.gap for r in rs]
        strict = all(b < a for a, b in zip(gaps, gaps[1:]))
        nonincr = all(b <= a for a, b in zip(gaps, gaps[1:]))
        # the Dirichlet sequence is identically 0 = limit (ledger): non-increasing is all it can do
        dec = strict if last.limit else nonincr
        ok &= within and dec
        parts.append(f"{bc}: ratio {last.ratio:.6g} vs limit {last.limit:.6g}, gaps "
                     + ",".join(f"{g:.2g}" for g in gaps))
    criterion(8, ok, "; ".join(parts) + f", {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------- 9

def windowed_log_ratio(ev, lo, hi):
    """Sup of the log-corrected counting ratio on [lo, hi], including right limits at eigenvalues."""
    sq = Box((1.0, 1.0))
    vals = ev.values[(ev.values >= lo) & (ev.values < hi)]
    pts = np.concatenate([vf.geometric_grid(lo, hi, 400), vals * (1 + 1e-12)])
    return max(riesz.two_term_residual(sq, "D", 0.0, float(x), ev)[2] for x in pts)


def test_criterion_09_two_term_weyl(criterion):
    sq = Box((1.0, 1.0))

    def go():
        _, rel, _ = riesz.two_term_residual(sq, "D", 1.0, 1e5)
        ev = riesz.spectrum(sq, "D", 4.1e5)
        return rel, windowed_log_ratio(ev, 1e5, 2e5), windowed_log_ratio(ev, 2e5, 4e5)

    (rel, c1, c2), dt = timed(go)
    stable = abs(c2 - c1) <= 0.10 * c1
    ok = abs(rel) <= 0.05 and stable and dt < 60
    criterion(9, ok, f"gamma=1 residual {rel:.4%} of boundary term; gamma=0 log ratio sup {c1:.5f} on [1e5,2e5] vs "
                     f"{c2:.5f} on [2e5,4e5] ({(c2 - c1) / c1:+.1%}), {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------- 10

def test_criterion_10_deficit(criterion):
    (rd, rn), dt = timed(lambda: (vf.deficit_profile(0.1, "D"), vf.deficit_profile(0.1, "N")))
    ok = rd.passed and rn.passed and dt < 120
    e = lambda r: f"b={r.empirical_constants['b']:.4f}/{r.empirical_constants['b_refined']:.4f}"
    criterion(10, ok, f"D {e(rd)} ({rd.violations} nonpositive), N {e(rn)} ({rn.violations} nonpositive), {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------- 11

def test_criterion_11_two_term_inequalities(criterion):
    doms = vf.family("boxes", 6, 5) + vf.family("disks", 3, 5) + vf.family("cylinders", 3, 5)

    def go():
        out = {}
        for bc in ("D", "N"):
            for g in (0.25, 0.5, 1.0):
                out[(bc, g)] = vf.verify_two_term(doms, bc, g, points=40, max_count=2e5)
        return out

    reps, dt = timed(go)
    ok = all(r.empirical_constants["c"] > 0 for r in reps.values()) and dt < 180
    detail = ", ".join(f"{bc}{g:g}: c={r.empirical_constants['c']:.4f}" for (bc, g), r in reps.items())
    criterion(11, ok, detail + f", {dt:.0f}s")
    assert ok


# ---------------------------------------------------------------- 12

def test_criterion_12_extrapolation(criterion):
    instances = [(Box((1.0, 1.0)), 1.0, 0.0, 5e3), (Disk(1.0), 1.0, 0.5, 2e3),
                 (Box((1.0, 1.0, 1.0)), 1.5, 0.5, 1e3)]

    def go():
        reps = []
        for bc in ("D", "N"):
            for dom, g, gp, top in instances:
                reps.append(vf.verify_extrapolation(dom, bc, g, gp, 1.0, top))
            reps.append(vf.verify_prop31(Box((1.0, 1.5)), bc, 0.0, 1.0, 100.0, 400.0))
        return reps

    reps, dt = timed(go)
    premises = all(r.details.get("premise_ok", r.details.get("hypotheses_ok")) for r in reps)
    viol = sum(r.violations for r in reps)
    ok = premises and viol == 0 and dt < 60
    gam = [r.empirical_constants["gamma"] for r in reps if "gamma" in r.empirical_constants]
    criterion(12, ok, f"{viol} violations over 3 extrapolation + 1 improved-exponent instance per condition, "
                      f"premises {'met' if premises else 'NOT met'}, improved exponents "
                      + ", ".join(f"{x:.3f}" for x in gam) + f", {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------- 13

def test_criterion_13_shape_optimisation(criterion):
    def go():
        r4 = ex.shapeopt_family("rect2", "D", 1.0, 1e4)
        r6 = ex.shapeopt_family("rect2", "D", 1.0, 1e6)
        ks = [ex.shapeopt_family("k_squares", "D", 1.0, lam).best_param for lam in (1e3, 1e4, 1e5)]
        return r4, r6, ks

    (r4, r6, ks), dt = timed(go)
    a4, a6 = math.exp(abs(r4.best_param)), math.exp(abs(r6.best_param))
    ok = (abs(a4 - 1) <= 0.05 and abs(a6 - 1) <= 0.01 and abs(r6.polya_ratio - 1) <= 0.02
          and ks == [1, 1, 1] and dt < 300)
    criterion(13, ok, f"aspect {a4:.4f} at 1e4, {a6:.4f} at 1e6; ratio {r6.polya_ratio:.5f} at 1e6; "
                      f"k-squares picks {ks} at 1e3,1e4,1e5; {dt:.0f}s")
    assert ok


# ---------------------------------------------------------------- 14

getcontext().prec = 50


def _series_j(n, x):
    h = x / 2
    term = h ** n / math.factorial(n)
    total, m = term, 0
    while abs(term) > Decimal(10) ** -45:
        m += 1
        term = -term * h * h / (m * (m + n))
        total += term
    return total


def _bisect(f, lo, hi):
    lo, hi = Decimal(lo), Decimal(hi)
    flo = f(lo)
    while hi - lo > Decimal(10) ** -30:
        mid = (lo + hi) / 2
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return float((lo + hi) / 2)


def test_criterion_14_geometry(criterion):
    def go():
        rng = np.random.default_rng(14)
        polys = [cg.random_polygon(rng) for _ in range(1000)]
        bad = {"sandwich": 0, "width": 0, "john": 0, "hausdorff": 0}
        c_diam = 0.0
        for p in polys:
            m = cg.metrics(p)
            q = m.volume / m.surface
            if not (q * (1 - 1e-12) <= m.inradius <= 2 * q * (1 + 1e-12)):
                bad["sandwich"] += 1
            if not (2 * m.inradius <= m.width * (1 + 1e-12) and m.width <= m.diameter * (1 + 1e-12)):
                bad["width"] += 1
            c_diam = max(c_diam, m.diameter * m.inradius / m.volume)
            chk = cg.check_john(p, cg.john_inner_ellipse(p))
            if not (chk.inner_ok and chk.outer_ok):
                bad["john"] += 1
        for a, b, c in zip(polys[0::3], polys[1::3], polys[2::3]):
            ab, bc_, ac = cg.hausdorff_distance(a, b), cg.hausdorff_distance(b, c), cg.hausdorff_distance(a, c)
            if not (cg.hausdorff_distance(a, a) == 0 and ab == cg.hausdorff_distance(b, a) and ab > 0
                    and ac <= ab + bc_ + 1e-12):
                bad["hausdorff"] += 1
        j01 = abs(bessel_zero(0, 1, "J") - _bisect(lambda x: _series_j(0, x), 2, 3))
        jp11 = abs(bessel_zero(1, 1, "Jprime") - _bisect(lambda x: _series_j(0, x) - _series_j(1, x) / x, 1.5, 2.5))
        return bad, c_diam, j01, jp11

    (bad, c_diam, j01, jp11), dt = timed(go)
    ok = not any(bad.values()) and math.isfinite(c_diam) and j01 < 1e-12 and jp11 < 1e-12 and dt < 60
    criterion(14, ok, f"failures {bad} on 1000 polygons, diam <= {c_diam:.3f} |K|/r_in, "
                      f"j01 err {j01:.1e}, j'11 err {jp11:.1e}, {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------- 15

def _strip(text):
    return "".join(line for line in text.splitlines(True) if not line.lstrip().startswith('"timestamp"'))


def test_criterion_15_determinism(criterion, tmp_path):
    manifest = tmp_path / "m.cfg"
    manifest.write_text("family = boxes\nn = 6\npoints = 12\nseed = 12345678901234567890\n"
                        "samples = 20000\nlambda_max = 2e3\n")
    mismatched = []
    runs = [["verify", "--suite", s] for s in SUITES]
    runs += [["collapse", "--domain", "disk:1", "--scale", "2", "--lambda", "1e2,1e3,1e4,1e5"],
             ["shapeopt", "--family", "rect2", "--lambda", "1e3,3e3,1e4"]]

    def go():
        for argv in runs:
            texts = []
            for t in ("1", "8"):
                out = tmp_path / f"{argv[0]}_{argv[2]}_{t}.{'json' if argv[0] == 'verify' else 'csv'}"
                code = run(argv + ["--manifest", str(manifest), "--threads", t, "--out", str(out)])
                text = out.read_text()
                side = out.with_suffix(".json")
                if argv[0] != "verify" and side.exists():
                    text += side.read_text()
                texts.append((code, _strip(text)))
            if texts[0] != texts[1] or texts[0][0] != 0:
                mismatched.append((argv[2], texts[0][0], texts[1][0]))

    _, dt = timed(go)
    ok = not mismatched
    criterion(15, ok, f"{len(runs)} runs ({len(SUITES)} suites + collapse + shapeopt) identical for --threads 1 "
                      f"vs 8 (timestamp excluded); mismatches {mismatched}; {dt:.0f}s")
    assert ok
