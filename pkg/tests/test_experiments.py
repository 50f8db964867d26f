import math

import numpy as np
import pytest

from speclab import experiments as ex
from speclab.riesz import riesz_mean
from speclab.semiclassics import lsc
from speclab.spectra import Box, Disk, Interval, volume


def test_pmap_preserves_order():
    items = list(range(50))
    assert ex.pmap(lambda x: x * x, items, threads=8) == [x * x for x in items]
    assert ex.pmap(lambda x: -x, items, threads=1) == [-x for x in items]


def test_collapse_neumann_interval_limit():
    # omega = (0, 2): only the zero mode lies below 1, so the limit is 1 / (L_{3/2,1} * 2) = 8/3
    spec = ex.CollapseSpec(Interval(2.0), bc="N")
    assert ex.collapse_limit(spec) == pytest.approx(1 / (lsc(1.5, 1) * 2), rel=1e-14)
    assert ex.collapse_limit(spec) == pytest.approx(8 / 3, rel=1e-14)
    rows = ex.collapse_experiment(spec)
    gaps = [r.gap for r in rows]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.01
    # gap * ell stays bounded: the sequence approaches at rate 1/ell
    assert ex.collapse_constant(rows) < 10


def test_collapse_neumann_against_direct_trace():
    spec = ex.CollapseSpec(Interval(2.0), bc="N", lambda_schedule=(1e3,))
    row = ex.collapse_experiment(spec)[0]
    w = 2 / math.sqrt(1e3)
    # spectrum of (0, w) x (0, 1) with Neumann conditions, summed directly
    tr = sum(1e3 - (math.pi * k / w) ** 2 - (math.pi * j) ** 2
             for k in range(0, 5) for j in range(0, 12)
             if (math.pi * k / w) ** 2 + (math.pi * j) ** 2 < 1e3)
    assert row.ratio == pytest.approx(tr / (lsc(1, 2) * w * 1e3 ** 2), rel=1e-12)


def test_collapse_dirichlet_is_identically_zero():
    rows = ex.collapse_experiment(ex.CollapseSpec(Interval(2.0), bc="D"))
    assert all(r.ratio == 0 and r.limit == 0 for r in rows)


def test_collapse_disk_cross_section_threads_agree():
    spec = ex.CollapseSpec(Disk(1.0), scale=3.0, lambda_schedule=(1e2, 1e3, 1e4))
    a = ex.collapse_experiment(spec, threads=1)
    b = ex.collapse_experiment(spec, threads=3)
    assert a == b
    assert a[-1].gap < a[0].gap


def test_collapse_hypothesis_monitor():
    # r_in sqrt(lambda) = min(1, sqrt(lambda) / 2): 1/2 at lambda = 1, 1 afterwards
    spec = ex.CollapseSpec(Interval(2.0), lambda_schedule=(1.0, 100.0), rin_bounds=(0.9, 2.0))
    with pytest.raises(ex.HypothesisError):
        ex.collapse_experiment(spec)


def test_degenerate_regime_below_threshold():
    # thin boxes below the inradius threshold have no Dirichlet eigenvalue below lambda
    sched = [(w, 0.9 * math.pi ** 2 / w ** 2) for w in (0.1, 0.03, 0.01)]
    rows = ex.degenerate_regime(lambda w: Box((w, 1 / w)), sched, "D")
    for r in rows:
        assert r.below_hersch_protter
        assert r.ratio == 0
        assert r.rin_sqrt_lambda == pytest.approx(0.5 * math.sqrt(0.9) * math.pi)
    rows_n = ex.degenerate_regime(lambda w: Box((w, 1 / w)), sched, "N")
    assert all(r.ratio > 1 for r in rows_n)


@pytest.mark.parametrize("name,param", [("rect2", 0.7), ("box3", (0.2, -0.5)), ("cylinder", 0.3), ("k_squares", 5)])
def test_family_members_have_unit_volume(name, param):
    assert volume(ex.family_domain(name, param)) == pytest.approx(1.0, abs=1e-12)


def test_shapeopt_rect2_against_dense_scan():
    lam = 2000.0
    res = ex.shapeopt_family("rect2", "D", 1.0, lam)
    scan = max(riesz_mean(ex.family_domain("rect2", a), "D", 1.0, lam) for a in np.linspace(0, 3, 3001))
    assert res.best_value >= scan * (1 - 1e-12)
    assert res.component_count == 1
    assert res.polya_ratio <= 1
    assert res.polya_ratio == pytest.approx(res.best_value / (lsc(1, 2) * lam ** 2))


def test_shapeopt_neumann_minimises():
    lam = 2000.0
    res = ex.shapeopt_family("rect2", "N", 1.0, lam)
    scan = min(riesz_mean(ex.family_domain("rect2", a), "N", 1.0, lam) for a in np.linspace(0, 3, 3001))
    assert res.best_value <= scan * (1 + 1e-12)
    assert res.polya_ratio >= 1


def test_shapeopt_k_squares_matches_brute_force():
    lam = 500.0
    res = ex.shapeopt_family("k_squares", "D", 1.0, lam, k_max=12)
    vals = [riesz_mean(ex.family_domain("k_squares", k), "D", 1.0, lam) for k in range(1, 13)]
    assert res.best_param == int(np.argmax(vals)) + 1
    assert res.best_value == pytest.approx(max(vals), rel=1e-12)
    assert res.component_count == res.best_param


def test_shapeopt_box3_and_trajectory():
    res = ex.shapeopt_family("box3", "D", 1.0, 300.0)
    assert len(res.best_param) == 2
    assert res.best_value >= res.probe_best * (1 - 1e-12)
    results, summary = ex.shapeopt_trajectory("rect2", "D", 1.0, [1e3, 1e4], threads=2)
    assert len(results) == 2 and summary["points"] == 2
    assert summary["regime"] in ("ball-like", "collapse")
    assert summary["limit_estimate"] == results[-1].polya_ratio
    with pytest.raises(ValueError):
        ex.family_domain("hexagon", 1)


def test_trial_exact_when_copies_tile():
    # lambda = 9 lambda*: nine squares of side 1/3 fill the unit volume exactly
    t = ex.multicomponent_trial(Box((1.0, 1.0)), 100.0, 1.0, "D", 900.0)
    assert t.copies == 9 and t.filler_volume == 0
    assert t.ratio == pytest.approx(t.target, rel=1e-13)
    assert t.target == pytest.approx(riesz_mean(Box((1.0, 1.0)), "D", 1.0, 100.0) / (lsc(1, 2) * 100.0 ** 2))


def test_trial_gap_within_bound():
    for lam in (1234.5, 5e3, 3.3e4):
        t = ex.multicomponent_trial(Box((1.0, 1.0)), 100.0, 1.0, "D", lam)
        assert t.filler_volume < 1
        assert volume(t.domain) == pytest.approx(1.0, rel=1e-12)
        assert t.gap <= t.bound + 1e-12
    with pytest.raises(ValueError):
        ex.multicomponent_trial(Box((1.0, 1.0)), 100.0, 1.0, "D", 50.0)
