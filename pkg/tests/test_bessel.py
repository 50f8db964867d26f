import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from scipy import optimize, special

from speclab import bessel
from speclab.bessel import bessel_zero, mcmahon, residual

getcontext().prec = 50


def series_j(n, x):
    """J_n(x) from its power series in 50-digit decimal arithmetic."""
    x = Decimal(x)
    h = x / 2
    term = h ** n / math.factorial(n)
    total = term
    m = 0
    while abs(term) > Decimal(10) ** -45:
        m += 1
        term = -term * h * h / (m * (m + n))
        total += term
    return total


def bisect(f, lo, hi, tol=Decimal(10) ** -30):
    lo, hi = Decimal(lo), Decimal(hi)
    flo = f(lo)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return float((lo + hi) / 2)


def test_j0_first_zero_against_series_bisection():
    oracle = bisect(lambda x: series_j(0, x), 2, 3)
    assert oracle == pytest.approx(2.404825557695773, abs=1e-15)
    assert abs(bessel_zero(0, 1, "J") - oracle) < 1e-12


def test_j1_prime_first_zero_against_series_bisection():
    # J_1'(x) = J_0(x) - J_1(x) / x
    oracle = bisect(lambda x: series_j(0, x) - series_j(1, x) / x, 1.5, 2.5)
    assert oracle == pytest.approx(1.841183781340659, abs=1e-15)
    assert abs(bessel_zero(1, 1, "Jprime") - oracle) < 1e-12


@pytest.mark.parametrize("n,k,lo,hi", [(0, 2, 5, 6), (1, 1, 3.5, 4.2), (2, 1, 5, 5.5), (3, 2, 9.5, 10.5)])
def test_more_j_zeros_against_series(n, k, lo, hi):
    oracle = bisect(lambda x: series_j(n, x), lo, hi)
    assert abs(bessel_zero(n, k, "J") - oracle) < 1e-12


def test_j0_prime_is_minus_j1():
    assert bessel_zero(0, 1, "Jprime") == pytest.approx(bessel_zero(1, 1, "J"), abs=1e-12)


def test_half_integer_orders():
    for k in (1, 2, 7):
        assert bessel_zero(0.5, k, "J") == pytest.approx(k * math.pi, rel=1e-15)
    # J_{3/2} vanishes where tan x = x
    root = optimize.brentq(lambda x: math.sin(x) - x * math.cos(x), 4.0, 4.6, xtol=1e-15)
    assert bessel_zero(1.5, 1, "J") == pytest.approx(root, abs=1e-12)
    # spherical j_1' = 0  <=>  2 x cos x + (x^2 - 2) sin x = 0
    root = optimize.brentq(lambda x: 2 * x * math.cos(x) + (x * x - 2) * math.sin(x), 1.5, 2.5, xtol=1e-15)
    assert bessel_zero(1.5, 1, "Sprime") == pytest.approx(root, abs=1e-12)


def test_residuals_and_mcmahon():
    for nu in (0, 1, 5, 17):
        for k in (1, 3, 10):
            z = bessel_zero(nu, k, "J")
            assert abs(residual(nu, "J", z)) < 1e-12
            assert abs(z - mcmahon(nu, k, "J")) < 0.5 + 0.1 * nu
    z = bessel_zero(3, 2, "Jprime")
    assert abs(residual(3, "Jprime", z)) < 1e-12


@pytest.mark.parametrize("bad", [(-1, 1), (0.3, 1), (1, 0)])
def test_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        bessel_zero(*bad)


def test_ladder_table_matches_scipy_zeros():
    tab = bessel.zero_table("int", "J", 40.0, use_disk=False)
    orders, zeros = tab.below(40.0)
    for m in range(0, 12):
        mine = np.sort(zeros[orders == m])
        ref = special.jn_zeros(m, mine.size + 1)
        ref = ref[ref < 40.0]
        np.testing.assert_allclose(mine, ref, rtol=1e-13)
    jp = bessel.zero_table("int", "Jprime", 40.0, use_disk=False)
    o, z = jp.below(40.0)
    for m in range(1, 8):
        mine = np.sort(z[o == m])
        ref = special.jnp_zeros(m, mine.size + 1)
        ref = ref[ref < 40.0]
        np.testing.assert_allclose(mine, ref, rtol=1e-13)


def test_disk_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv("SPECLAB_CACHE_DIR", str(tmp_path))
    bessel.clear_memory_cache()
    try:
        t1 = bessel.zero_table("half", "J", 30.0)
        files = sorted(p.name for p in tmp_path.iterdir())
        assert any(f.startswith("zeros_half_J_") for f in files)
        assert any(f.startswith("zeros_half_Sprime_") for f in files)
        path = next(p for p in tmp_path.iterdir() if p.name.startswith("zeros_half_J_"))
        lines = path.read_text().splitlines()
        assert lines[0] == "besselzeros v1"
        assert lines[1].startswith("# family=half kind=J")
        order, kind, k, z = lines[2].split()
        assert kind == "J" and k == "1" and float(order) == 0.5
        t2 = bessel.read_table(path)
        np.testing.assert_array_equal(t1.zeros, t2.zeros)
        np.testing.assert_array_equal(t1.orders, t2.orders)
        bessel.clear_memory_cache()
        t3 = bessel.zero_table("half", "J", 30.0)
        np.testing.assert_array_equal(t1.zeros, t3.zeros)
    finally:
        bessel.clear_memory_cache()


def test_corrupt_cache_is_rebuilt(tmp_path, monkeypatch):
    monkeypatch.setenv("SPECLAB_CACHE_DIR", str(tmp_path))
    bessel.clear_memory_cache()
    try:
        bessel.zero_table("int", "J", 20.0)
        path = next(p for p in tmp_path.iterdir() if p.name.startswith("zeros_int_J_"))
        path.write_text("garbage\n")
        bessel.clear_memory_cache()
        t = bessel.zero_table("int", "J", 20.0)
        assert t.zeros.size > 0
    finally:
        bessel.clear_memory_cache()
