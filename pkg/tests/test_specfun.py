import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from abdisk import specfun
from abdisk.specfun import BesselOrder

mpmath.mp.dps = 30


def mp_j(twice_order, x):
    return float(mpmath.besselj(mpmath.mpf(twice_order) / 2, x))


@pytest.mark.parametrize("twice_order", range(0, 31))
@pytest.mark.parametrize("x", [0.05, 0.7, 3.3, 9.9, 17.5, 31.0, 50.0])
def test_bessel_j_matches_mpmath(twice_order, x):
    ref = mp_j(twice_order, x)
    got = specfun.bessel_j(BesselOrder(twice_order), x)
    # relative where the value is not tiny; near zeros use an absolute floor
    assert abs(got - ref) <= 1e-10 * max(abs(ref), 1e-3)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 30), st.floats(0.01, 50.0))
def test_bessel_j_random_points(twice_order, x):
    ref = mp_j(twice_order, x)
    got = specfun.bessel_j(BesselOrder(twice_order), x)
    assert abs(got - ref) <= 1e-10 * max(abs(ref), 1e-3)


def test_half_order_closed_form_vanishes_at_pi():
    assert abs(specfun.bessel_j(BesselOrder(1), math.pi)) <= 1e-12


def test_derivative_matches_mpmath():
    for twice_order in (0, 1, 2, 3, 7, 12):
        for x in (0.4, 2.0, 11.0):
            ref = float(mpmath.diff(lambda s: mpmath.besselj(mpmath.mpf(twice_order) / 2, s), x))
            assert specfun.bessel_j_derivative(BesselOrder(twice_order), x) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_domain_and_order_errors():
    with pytest.raises(specfun.BesselDomainError):
        specfun.bessel_j(BesselOrder(1), 0.0)
    with pytest.raises(specfun.BesselDomainError):
        specfun.bessel_j(BesselOrder(1), -1.0)
    with pytest.raises(specfun.UnsupportedOrderError):
        specfun.bessel_j(BesselOrder(31), 1.0)
    with pytest.raises(ValueError):
        BesselOrder(-1)


def test_order_representation():
    o = BesselOrder.from_nu(1.5)
    assert o.twice_order == 3 and o.is_half_integer and o.nu == 1.5
    assert not BesselOrder(4).is_half_integer


@pytest.mark.parametrize("twice_order", [0, 1, 2, 3, 4, 5, 8, 13, 20, 30])
def test_zeros_match_mpmath(twice_order):
    table = specfun.bessel_zeros(BesselOrder(twice_order), 6)
    nu = mpmath.mpf(twice_order) / 2
    for k, z in enumerate(table.zeros, 1):
        ref = float(mpmath.besseljzero(nu, k))
        assert z == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_zero_table_invariants():
    table = specfun.bessel_zeros(BesselOrder(3), 30)
    z = table.zeros
    assert all(a < b for a, b in zip(z, z[1:]))
    for x in z:
        d = specfun.bessel_j_derivative(table.order, x)
        assert abs(specfun.bessel_j(table.order, x)) <= 1e-12 * max(1.0, abs(d) * x)
    gaps = [b - a for a, b in zip(z, z[1:])]
    assert abs(gaps[-1] - math.pi) < abs(gaps[0] - math.pi)
    assert abs(gaps[-1] - math.pi) < 1e-2


def test_half_order_zeros_are_multiples_of_pi():
    z = specfun.bessel_zeros(BesselOrder(1), 5).zeros
    assert all(abs(v - (k + 1) * math.pi) <= 1e-12 for k, v in enumerate(z))


def test_reference_zero_values():
    assert specfun.bessel_zeros(BesselOrder(3), 1)[0] == pytest.approx(4.493409457909064, abs=1e-9)
    assert specfun.bessel_zeros(BesselOrder(0), 1)[0] == pytest.approx(2.404825557695773, abs=1e-9)
    assert specfun.bessel_zeros(BesselOrder(2), 1)[0] == pytest.approx(3.8317059702075125, abs=1e-9)


def test_zero_count_validation():
    assert len(specfun.bessel_zeros(BesselOrder(1), 0)) == 0
    with pytest.raises(ValueError):
        specfun.bessel_zeros(BesselOrder(1), -1)
    with pytest.raises(ValueError):
        specfun.bessel_zeros(BesselOrder(1), 51)


def test_interlacing_chain():
    rep = specfun.interlacing_check(7, 3)
    assert rep.passed and not rep.violations
    head = [(n, k) for n, k, _ in rep.chain[:5]]
    assert head == [(1, 1), (3, 1), (5, 1), (1, 2), (7, 1)]
    small = specfun.interlacing_check(3, 2)
    assert small.passed


def test_exact_ab_spectrum():
    spec = specfun.exact_ab_spectrum(6)
    lams = [e.lam for e in spec]
    assert lams == sorted(lams)
    assert lams[0] == pytest.approx(math.pi ** 2, rel=1e-14)
    assert (spec[0].n, spec[0].k) == (1, 1)
    assert lams[1] == pytest.approx(4.493409457909064 ** 2, rel=1e-12)
    # brute force over all odd n / k
    brute = sorted(float(mpmath.besseljzero(mpmath.mpf(n) / 2, k)) ** 2 for n in range(1, 30, 2) for k in range(1, 8))
    assert lams == pytest.approx(brute[:6], rel=1e-12)
    assert all(e.n % 2 == 1 and e.lam > 0 for e in spec)


def test_exact_ab_spectrum_bounds():
    assert len(specfun.exact_ab_spectrum(20)) == 20
    assert specfun.exact_ab_spectrum(0) == []
    with pytest.raises(ValueError):
        specfun.exact_ab_spectrum(21)


def test_closed_form_slopes():
    s = specfun.closed_form_slopes()
    assert s.mu1_slope == pytest.approx(-math.pi ** 2, rel=1e-10)
    assert s.mu2_slope == pytest.approx(math.pi ** 2, rel=1e-10)
    assert s.B ** 2 == pytest.approx(2 * math.pi, rel=1e-10)
    assert s.A ** 2 == pytest.approx(2 * math.pi, rel=1e-10)
    assert s.mu1_slope == pytest.approx(-math.pi / 2 * s.B ** 2)
    assert s.mu1_slope < 0 < s.mu2_slope
