"""Floor and fractional-part arithmetic against high-precision oracles."""

import gmpy2
import numpy as np
import pytest
from gmpy2 import mpfr, mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab.precision import (
    DEFAULT_BITS,
    floor_linear,
    floor_linear_batch,
    floor_pow,
    floor_pow_batch,
    frac,
    parse_real,
    phi,
    real,
)


def test_frac_examples():
    assert float(frac(1.25)) == 0.25
    assert float(frac(-0.25)) == 0.75
    assert float(frac(3.0)) == 0.0


def test_frac_shift_invariance():
    gmpy2.get_context().precision = 120  # keep the test's own sums exact
    for x in (0.3, -1.7, 12.99, 0.0):
        base = frac(real(x))
        for k in (-3, 1, 7):
            assert abs(frac(real(x) + k) - base) < mpfr(2) ** -80


def test_phi_examples():
    assert float(phi(0.75)) == 0.25
    assert float(phi(0.0)) == -0.5
    assert float(phi(-0.25)) == 0.25


def test_phi_range():
    for x in np.linspace(-3, 3, 61):
        v = float(phi(x))
        assert -0.5 <= v < 0.5


def test_floor_pow_integer_exponent_exact():
    r = floor_pow(1, 1, 5)
    assert r.floor_value == 5 and float(r.frac_value) == 0.0
    assert r.boundary_flag is False
    r = floor_pow(mpq(-3, 2), 1, 2)
    assert r.floor_value == -3


def test_floor_pow_oracle_160bit():
    # alpha n^c at c = 51/50 against a much wider recomputation
    gmpy2.get_context().precision = 220
    for alpha, n in [(1, 1000), (2, 999983), (mpq(7, 3), 4096)]:
        wide = mpfr(alpha) * mpfr(n) ** (mpfr(51) / 50)
        want = int(gmpy2.floor(wide))
        got = floor_pow(alpha, mpq(51, 50), n)
        assert got.floor_value == want
    assert floor_pow(1, mpq(51, 50), 1000).floor_value == 1148


def test_floor_pow_validation():
    with pytest.raises(ValueError):
        floor_pow(1, 1, 0)
    with pytest.raises(ValueError):
        floor_pow(1, 2.5, 10)
    with pytest.raises(ValueError):
        floor_pow(0, 1.02, 10)


def test_floor_pow_monotone_in_n():
    ns = np.arange(1, 2000, dtype=np.int64)
    ks, _ = floor_pow_batch(parse_real("sqrt(2)"), mpq(51, 50), ns)
    assert np.all(np.diff(ks) >= 0)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(min_value=-50, max_value=50),
    st.integers(min_value=1, max_value=5000),
)
def test_floor_linear_batch_matches_scalar(num, n):
    theta = mpq(num, 7)
    d = mpq(3, 11)
    ns = np.array([n, n + 1, 2 * n], dtype=np.int64)
    ks, _ = floor_linear_batch(theta, d, ns)
    for i, m in enumerate(ns):
        assert ks[i] == floor_linear(theta, d, int(m)).floor_value


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=1, max_value=100000))
def test_floor_pow_batch_matches_scalar(n):
    c = mpq(51, 50)
    al = parse_real("sqrt(2)")
    ns = np.array([n], dtype=np.int64)
    ks, _ = floor_pow_batch(al, c, ns)
    assert ks[0] == floor_pow(al, c, n).floor_value


def test_floor_linear_near_boundary_forced():
    # arguments landing exactly on integers must floor to them
    ns = np.arange(1, 50, dtype=np.int64)
    ks, flags = floor_linear_batch(mpq(1, 2), 0, ns)
    assert list(ks) == [n // 2 for n in range(1, 50)]
    assert not flags.any()  # exact rational path never guesses


def test_parse_real_forms():
    gmpy2.get_context().precision = 130
    assert abs(parse_real("sqrt(2)") - gmpy2.sqrt(mpfr(2))) < mpfr(2) ** -100
    assert parse_real("51/50") == mpq(51, 50)
    assert parse_real("0.25") == 0.25
    assert float(parse_real("sqrt(2)-1")) == pytest.approx(0.41421356, abs=1e-8)
    assert abs(float(parse_real("pi")) - 3.14159265358979) < 1e-12
    with pytest.raises(ValueError):
        parse_real("sqrt(-1)")
    with pytest.raises(ValueError):
        parse_real("two")


def test_real_accepts_common_types():
    assert real(mpq(1, 4)) == 0.25
    assert real(0.5) == 0.5
    assert real(3) == 3
