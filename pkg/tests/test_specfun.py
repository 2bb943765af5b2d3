"""Bessel/Hankel evaluation against independent series oracles and identities."""

import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from emdsm import specfun
from emdsm.errors import DomainError

EULER_GAMMA = 0.57721566490153286060651209

# published table values (Abramowitz & Stegun style references)
TABLE = {
    ("j", 0, 1.0): 0.7651976865579666,
    ("j", 1, 1.0): 0.4400505857449335,
    ("y", 0, 1.0): 0.08825696421567696,
    ("y", 1, 1.0): -0.7812128213002887,
}


def j_series_oracle(order: int, x: float, terms: int = 40) -> float:
    """Ascending series summed in exact rational arithmetic (x rational)."""
    xq = Fraction(x).limit_denominator(10**12)
    half = xq / 2
    term = half**order / math.factorial(order)
    total = term
    for m in range(1, terms):
        term *= -(half * half) / (m * (m + order))
        total += term
    return float(total)


def y0_series_oracle(x: float, terms: int = 40) -> float:
    """Log series for Y_0 with rational inner sums."""
    xq = Fraction(x).limit_denominator(10**12)
    q = xq * xq / 4
    total = Fraction(0)
    term = Fraction(1)
    harmonic = Fraction(0)
    for m in range(1, terms):
        term *= q / (m * m)
        harmonic += Fraction(1, m)
        total += (-1) ** (m + 1) * harmonic * term
    j0 = j_series_oracle(0, x, terms)
    return (2.0 / math.pi) * ((math.log(x / 2.0) + EULER_GAMMA) * j0 + float(total))


def y1_series_oracle(x: float, terms: int = 40) -> float:
    xq = Fraction(x).limit_denominator(10**12)
    q = xq * xq / 4
    term = Fraction(1)
    h_m = Fraction(0)
    h_m1 = Fraction(1)
    total = (h_m + h_m1) * term
    gamma_part = float(term)
    for m in range(1, terms):
        term *= -q / (m * (m + 1))
        h_m += Fraction(1, m)
        h_m1 += Fraction(1, m + 1)
        total += (h_m + h_m1) * term
        gamma_part += float(term)
    series = float(total) - 2.0 * EULER_GAMMA * gamma_part
    j1 = j_series_oracle(1, x, terms)
    return (2.0 / math.pi) * math.log(x / 2.0) * j1 - 2.0 / (math.pi * x) - x / (2.0 * math.pi) * series


def test_oracles_match_published_tables():
    assert j_series_oracle(0, 1.0) == pytest.approx(TABLE[("j", 0, 1.0)], rel=1e-14)
    assert j_series_oracle(1, 1.0) == pytest.approx(TABLE[("j", 1, 1.0)], rel=1e-14)
    assert y0_series_oracle(1.0) == pytest.approx(TABLE[("y", 0, 1.0)], rel=1e-13)
    assert y1_series_oracle(1.0) == pytest.approx(TABLE[("y", 1, 1.0)], rel=1e-13)


def test_j_at_zero():
    assert specfun.bessel_j(0, 0.0) == 1.0
    assert specfun.bessel_j(1, 0.0) == 0.0
    assert specfun.bessel_j(2, 0.0) == 0.0


def test_j_against_series_oracle():
    for order in (0, 1, 2):
        for x in (0.05, 0.7, 1.0, 3.3, 7.9, 11.5):
            assert specfun.bessel_j(order, x) == pytest.approx(
                j_series_oracle(order, x, 60), rel=1e-10
            )


def test_y_against_series_oracle():
    for x in (0.02, 0.4, 1.0, 2.9, 8.1):
        assert specfun.bessel_y(0, x) == pytest.approx(y0_series_oracle(x, 60), rel=1e-10)
        assert specfun.bessel_y(1, x) == pytest.approx(y1_series_oracle(x, 60), rel=1e-10)


def test_y0_log_blowup_near_zero():
    assert specfun.bessel_y(0, 1e-9) < -10.0


def test_hankel_is_j_plus_iy_exactly():
    for order in (0, 1, 2):
        x = np.linspace(0.3, 150.0, 500)
        h = specfun.hankel1(order, x)
        np.testing.assert_array_equal(h.real, specfun.bessel_j(order, x))
        np.testing.assert_array_equal(h.imag, specfun.bessel_y(order, x))


def test_hankel_recurrence_pins_order_two():
    x = 3.7
    lhs = specfun.hankel1(2, x)
    rhs = 2.0 * specfun.hankel1(1, x) / x - specfun.hankel1(0, x)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_large_argument_amplitude():
    # |H_0(x)| sqrt(x) -> sqrt(2/pi)
    x = 100.0
    amp = abs(specfun.hankel1(0, x)) * math.sqrt(x)
    assert amp == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-5)
    # phase against the leading asymptotic form
    ref = math.sqrt(2.0 / (math.pi * x)) * np.exp(1j * (x - math.pi / 4.0))
    assert specfun.hankel1(0, x) == pytest.approx(ref, rel=2e-3)


def test_domain_errors():
    with pytest.raises(DomainError):
        specfun.bessel_j(0, -1.0)
    with pytest.raises(DomainError):
        specfun.bessel_y(0, 0.0)
    with pytest.raises(DomainError):
        specfun.hankel1(1, -2.0)
    with pytest.raises(DomainError):
        specfun.bessel_j(3, 1.0)


def test_wronskian_on_random_sample():
    # J_n Y_n' - J_n' Y_n = 2/(pi x), derivatives via the recurrence
    rng = np.random.default_rng(7)
    x = rng.uniform(0.01, 100.0, 200)
    for order in (0, 1, 2):
        j = specfun.bessel_j(order, x)
        y = specfun.bessel_y(order, x)
        if order == 0:
            jp = -specfun.bessel_j(1, x)
            yp = -specfun.bessel_y(1, x)
        else:
            jp = specfun.bessel_j(order - 1, x) - order * j / x
            yp = specfun.bessel_y(order - 1, x) - order * y / x
        w = j * yp - jp * y
        ref = 2.0 / (np.pi * x)
        assert np.max(np.abs(w - ref) / ref) < 1e-9


def test_recurrence_closure_on_random_sample():
    rng = np.random.default_rng(11)
    x = rng.uniform(0.01, 100.0, 200)
    h0 = specfun.hankel1(0, x)
    h1 = specfun.hankel1(1, x)
    h2 = specfun.hankel1(2, x)
    lhs = 2.0 * h1 / x
    rhs = h0 + h2
    assert np.max(np.abs(lhs - rhs) / np.abs(lhs)) < 1e-10


def test_derivative_identity_vs_finite_differences():
    # d/dx H_0 = -H_1, checked against 4th-order central differences
    h = 1e-5
    for x in (0.5, 1.7, 6.3, 20.0, 80.0):
        fd = (
            -specfun.hankel1(0, x + 2 * h)
            + 8.0 * specfun.hankel1(0, x + h)
            - 8.0 * specfun.hankel1(0, x - h)
            + specfun.hankel1(0, x - 2 * h)
        ) / (12.0 * h)
        assert abs(fd - (-specfun.hankel1(1, x))) < 1e-7


@settings(max_examples=150, deadline=None)
@given(
    order=st.integers(min_value=0, max_value=2),
    x=st.floats(min_value=1e-3, max_value=200.0, allow_nan=False),
)
def test_matches_scipy_within_contract(order, x):
    envelope = math.sqrt(2.0 / (math.pi * x))
    ref_j = sp.jv(order, x)
    ref_y = sp.yv(order, x)
    assert abs(specfun.bessel_j(order, x) - ref_j) <= 1e-10 * max(abs(ref_j), envelope)
    assert abs(specfun.bessel_y(order, x) - ref_y) <= 1e-10 * max(abs(ref_y), envelope)


def test_vectorized_matches_scalar():
    x = np.array([0.2, 1.0, 11.9, 12.1, 60.0])
    for order in (0, 1, 2):
        vec = specfun.hankel1(order, x)
        scal = np.array([specfun.hankel1(order, v) for v in x])
        np.testing.assert_array_equal(vec, scal)


def test_hankel_runs_fast_path_matches_public_api():
    x = np.linspace(0.05, 90.0, 1000)
    h0, h1, h2 = specfun.hankel1_runs(x)
    np.testing.assert_allclose(h0, specfun.hankel1(0, x), rtol=0, atol=0)
    np.testing.assert_allclose(h1, specfun.hankel1(1, x), rtol=0, atol=0)
    np.testing.assert_allclose(h2, specfun.hankel1(2, x), rtol=0, atol=0)
