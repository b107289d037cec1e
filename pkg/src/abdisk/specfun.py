"""Bessel functions of integer and half-integer order, their zeros, and the
exact spectrum of the half-flux Aharonov-Bohm operator with the pole at the
centre of the unit disk.

Orders are stored as ``twice_order`` so that ``nu = twice_order / 2`` covers
both families with one integer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from scipy import integrate

MAX_TWICE_ORDER = 30  # nu <= 15
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class BesselDomainError(ValueError):
    pass


class UnsupportedOrderError(ValueError):
    pass


class BracketError(RuntimeError):
    def __init__(self, order: "BesselOrder", index: int, message: str = ""):
        self.order = order
        self.index = index
        super().__init__(
            f"no sign change bracketing zero #{index} of J_{order.nu:g}" + (f": {message}" if message else "")
        )


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class BesselOrder:
    twice_order: int

    def __post_init__(self):
        if not isinstance(self.twice_order, int) or isinstance(self.twice_order, bool):
            raise TypeError("twice_order must be an int")
        if self.twice_order < 0:
            raise UnsupportedOrderError(f"negative order {self.twice_order}/2")
        if self.twice_order > MAX_TWICE_ORDER:
            raise UnsupportedOrderError(f"order {self.twice_order}/2 exceeds cap {MAX_TWICE_ORDER}/2")

    @classmethod
    def from_nu(cls, nu: float) -> "BesselOrder":
        twice = 2 * nu
        if abs(twice - round(twice)) > 1e-12:
            raise UnsupportedOrderError(f"order {nu} is neither integer nor half-integer")
        return cls(int(round(twice)))

    @property
    def nu(self) -> float:
        return self.twice_order / 2

    @property
    def is_half_integer(self) -> bool:
        return self.twice_order % 2 == 1


@dataclass(frozen=True)
class ZeroTable:
    order: BesselOrder
    zeros: tuple[float, ...]

    def __len__(self):
        return len(self.zeros)

    def __getitem__(self, k):
        return self.zeros[k]


@dataclass(frozen=True)
class ExactEigenvalue:
    n: int
    k: int
    lam: float


@dataclass(frozen=True)
class ClosedFormSlopes:
    mu1_slope: float
    mu2_slope: float
    A: float
    B: float
    C: float
    radial_integral: float


def _as_order(order) -> BesselOrder:
    if isinstance(order, BesselOrder):
        return order
    return BesselOrder.from_nu(order)


# -- evaluation ---------------------------------------------------------------

def _half_integer_pair(x: float) -> tuple[float, float]:
    """(J_{-1/2}(x), J_{1/2}(x)) from the elementary closed forms."""
    s = _SQRT_2_OVER_PI / math.sqrt(x)
    return s * math.cos(x), s * math.sin(x)


def _j_half_integer(m: int, x: float) -> float:
    """J_{m + 1/2}(x) for m >= -1."""
    jm, j0 = _half_integer_pair(x)
    if m == -1:
        return jm
    if m == 0:
        return j0
    nu = m + 0.5
    if x >= nu:
        # upward recurrence is stable once x >= nu
        prev, cur = jm, j0
        mu = 0.5
        for _ in range(m):
            prev, cur = cur, (2.0 * mu / x) * cur - prev
            mu += 1.0
        return cur
    # Miller: downward recurrence from a high start order, normalised by
    # whichever closed form is larger in magnitude.
    start = m + 20 + int(2 * math.sqrt(40.0 * (m + 1)))
    f_next, f_cur = 0.0, 1e-30
    target = None
    mu = start + 0.5
    while mu > -0.5:
        f_prev = (2.0 * mu / x) * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        mu -= 1.0
        if abs(f_cur) > 1e250:
            f_next *= 1e-250
            f_cur *= 1e-250
            if target is not None:
                target *= 1e-250
        if abs(mu - nu) < 0.25:
            target = f_cur
    # loop leaves f_cur = f_{-1/2}, f_next = f_{1/2}
    if abs(jm) >= abs(j0):
        scale = jm / f_cur
    else:
        scale = j0 / f_next
    return target * scale


def _j_integer(n: int, x: float) -> float:
    """Power series summed exactly in rational arithmetic, rounded once."""
    q = Fraction(x) / 2
    q2 = q * q
    term = q ** n / math.factorial(n)
    total = term
    k = 0
    tiny = Fraction(1, 10 ** 30)
    while True:
        k += 1
        term = -term * q2 / (k * (k + n))
        total += term
        if k > x / 2 + 2 and abs(term) < tiny:
            break
    return float(total)


def _check_args(order: BesselOrder, x: float) -> None:
    if not x > 0 or not math.isfinite(x):
        raise BesselDomainError(f"x must be positive and finite, got {x!r}")


def bessel_j(order, x: float) -> float:
    """First-kind Bessel function J_nu(x) for nu in {0, 1/2, 1, ..., 15}."""
    order = _as_order(order)
    x = float(x)
    _check_args(order, x)
    if order.is_half_integer:
        return _j_half_integer((order.twice_order - 1) // 2, x)
    return _j_integer(order.twice_order // 2, x)


def bessel_j_derivative(order, x: float) -> float:
    """J_nu'(x) = J_{nu-1}(x) - (nu/x) J_nu(x)."""
    order = _as_order(order)
    x = float(x)
    _check_args(order, x)
    nu = order.nu
    if order.is_half_integer:
        m = (order.twice_order - 1) // 2
        lower = _j_half_integer(m - 1, x)
        return lower - (nu / x) * _j_half_integer(m, x)
    n = order.twice_order // 2
    if n == 0:
        return -_j_integer(1, x)
    return _j_integer(n - 1, x) - (nu / x) * _j_integer(n, x)


# -- zeros ----------------------------------------------------------------------

def mcmahon_guess(order, k: int) -> float:
    order = _as_order(order)
    return (k + order.nu / 2 - 0.25) * math.pi


def _refine_zero(order: BesselOrder, a: float, b: float, fa: float) -> float:
    while b - a > 1e-3:
        m = 0.5 * (a + b)
        fm = bessel_j(order, m)
        if fm == 0.0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    z = 0.5 * (a + b)
    for _ in range(50):
        step = bessel_j(order, z) / bessel_j_derivative(order, z)
        z_new = z - step
        if not a <= z_new <= b:
            z_new = 0.5 * (a + b)
        if abs(z_new - z) <= 1e-13 * z:
            return z_new
        z = z_new
    return z


def bessel_zeros(order, count: int) -> ZeroTable:
    """First ``count`` positive zeros of J_nu.

    The bracket for zero k is found by stepping 0.5 to the right of zero k-1
    (or of nu, below which J_nu has no zeros); the search window ends 2 pi past
    the McMahon estimate.  Bisection to width 1e-3 then Newton.
    """
    order = _as_order(order)
    if count < 0 or count > 50:
        raise ValueError("count must lie in [0, 50]")
    zeros: list[float] = []
    a = max(order.nu, 0.5)
    fa = bessel_j(order, a)
    for k in range(1, count + 1):
        limit = max(mcmahon_guess(order, k), a) + 2 * math.pi
        while True:
            b = a + 0.5
            if b > limit:
                raise BracketError(order, k)
            fb = bessel_j(order, b)
            if fb == 0.0 or (fa > 0) != (fb > 0):
                break
            a, fa = b, fb
        z = b if fb == 0.0 else _refine_zero(order, a, b, fa)
        zeros.append(z)
        a = z + 1e-6
        fa = bessel_j(order, a)
    return ZeroTable(order, tuple(zeros))


@dataclass
class InterlacingReport:
    chain: list[tuple[int, int, float]]
    passed: bool
    violations: list[str]


def interlacing_check(max_n: int, count: int) -> InterlacingReport:
    """Zero interlacing of J_{n/2} against J_{(n+1)/2} and (Porter) J_{(n+2)/2}.

    ``chain`` is the merged sorted list of (n, k, z_{n/2,k}) over odd n <= max_n.
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    if count <= 0:
        return InterlacingReport([], True, [])
    tables = {n: bessel_zeros(BesselOrder(n), count + 1).zeros for n in range(1, max_n + 1)}
    violations = []

    def _interlaced(n, m):
        lo, hi = tables[n], tables[m]
        for k in range(count):
            if not lo[k] < hi[k] < lo[k + 1]:
                violations.append(f"z({n}/2,{k + 1}) < z({m}/2,{k + 1}) < z({n}/2,{k + 2}) fails")

    for n in range(1, max_n + 1):
        if n + 1 <= max_n:
            _interlaced(n, n + 1)
        if n + 2 <= max_n:
            _interlaced(n, n + 2)
    chain = sorted(
        ((n, k + 1, tables[n][k]) for n in range(1, max_n + 1, 2) for k in range(count)),
        key=lambda item: item[2],
    )
    for (_, _, z0), (_, _, z1) in zip(chain, chain[1:]):
        if not z0 < z1:
            violations.append(f"chain not strictly increasing at {z0}")
    return InterlacingReport(chain, not violations, violations)


def exact_ab_spectrum(count: int) -> list[ExactEigenvalue]:
    """Distinct eigenvalues z_{n/2,k}^2 (odd n) of the centred half-flux AB
    operator on the unit disk, ascending.  Each one is double."""
    if count < 0 or count > 20:
        raise ValueError("count must lie in [0, 20]")
    if count == 0:
        return []
    found: list[ExactEigenvalue] = []
    bound = math.inf
    n = 1
    while True:
        if n > MAX_TWICE_ORDER:
            raise UnsupportedOrderError("spectrum request exceeds the supported order cap")
        table = bessel_zeros(BesselOrder(n), count)
        if table[0] ** 2 > bound:
            break
        found.extend(ExactEigenvalue(n, k + 1, z * z) for k, z in enumerate(table.zeros))
        found.sort(key=lambda e: e.lam)
        if len(found) >= count:
            bound = found[count - 1].lam
        n += 2
    return found[:count]


def closed_form_slopes() -> ClosedFormSlopes:
    """Branch slopes at the origin from the normalised centred eigenfunctions.

    C^2 = 1 / (pi * int_0^1 J_{1/2}(pi r)^2 r dr) normalises
    J_{1/2}(pi r) sin(theta/2) on the disk; since J_{1/2}(pi r) ~ sqrt(2 r) the
    r^{1/2} tip coefficient is B = A = sqrt(2) C.
    """
    order = BesselOrder(1)
    integral, err = integrate.quad(lambda r: bessel_j(order, math.pi * r) ** 2 * r, 0.0, 1.0,
                                   epsabs=1e-14, epsrel=1e-13, limit=200)
    if not math.isfinite(integral) or err > 1e-11:
        raise QuadratureError(f"radial normalisation integral did not converge (err={err:g})")
    c2 = 1.0 / (math.pi * integral)
    C = math.sqrt(c2)
    A = B = math.sqrt(2.0) * C
    return ClosedFormSlopes(
        mu1_slope=-(math.pi / 2) * B * B,
        mu2_slope=(math.pi / 2) * A * A,
        A=A,
        B=B,
        C=C,
        radial_integral=integral,
    )
