"""Kernel parameters, the sequence Lambda, sawtooth weights, and the
differencing inequality."""

import math
from fractions import Fraction

import gmpy2
import numpy as np
import pytest
from gmpy2 import mpfr, mpq

from ergolab.kernels import (
    correlation_bound_ratio,
    delta_diff,
    dyadic_split,
    e_weight,
    e_weight_batch,
    fourier_kernel,
    kernel_params,
    lambda_count,
    mu_N,
    psi_inverse,
    r_H,
    vdc_check,
)
from ergolab.precision import parse_real, phi


def test_kernel_params_exact_at_51_over_50():
    kp = kernel_params(mpq(51, 50))
    assert kp._c_q == mpq(51, 50)
    assert (23 - 22 * kp._c_q) / (40 * kp._c_q) == mpq(7, 510)
    assert kp._sigma_q == mpq(1, 30)
    assert kp.M_of_N(10**6) == 1
    assert kp.M_of_N(2**30) == 2  # (2^30)^(1/30) lands exactly on 2


def test_kernel_params_validation():
    for bad in (1, mpq(23, 22), 0.9, 1.5):
        with pytest.raises(ValueError):
            kernel_params(bad)


def test_psi_inverse_formula():
    assert float(psi_inverse(2, 1, 5)) == 2.5
    # (1148)^(50/51), the exponent inverse, not a round number
    v = float(psi_inverse(1, mpq(51, 50), 1148))
    assert abs(v - 1148 ** (50 / 51)) < 1e-9
    with pytest.raises(ValueError):
        psi_inverse(0, 1.02, 5)
    with pytest.raises(ValueError):
        psi_inverse(1, 1.02, -1)


def test_lambda_count_linear_cases():
    cnt, ind = lambda_count(1, 1, 10)
    assert cnt == 10 and ind[1:].all()
    cnt, ind = lambda_count(2, 1, 10)
    assert cnt == 5
    assert [i for i in range(11) if ind[i]] == [2, 4, 6, 8, 10]


def test_lambda_count_against_exact_enumeration():
    # floor(n^(51/50)) <= 100 membership recomputed with integer roots
    members = set()
    n = 1
    while True:
        v = int(gmpy2.iroot(gmpy2.mpz(n) ** 51, 50)[0])
        if v > 100:
            break
        members.add(v)
        n += 1
    cnt, ind = lambda_count(1, mpq(51, 50), 100)
    assert cnt == len(members) == 92
    assert {i for i in range(101) if ind[i]} == members


def test_e_weight_examples():
    assert float(e_weight(2, 1, 5)) == -0.5
    assert float(e_weight(1, 1, 5)) == 0.0
    ns = np.arange(1, 30, dtype=np.int64)
    batch = e_weight_batch(2, 1, ns)
    for i, n in enumerate(ns):
        assert abs(batch[i] - float(e_weight(2, 1, int(n)))) < 1e-12


def test_e_weight_telescopes():
    # partial sums collapse to a boundary difference of the sawtooth
    L, c = 3, mpq(51, 50)
    ns = np.arange(1, 500, dtype=np.int64)
    total = math.fsum(e_weight_batch(L, c, ns))
    lo = float(phi(-psi_inverse(L, c, 1)))
    hi = float(phi(-psi_inverse(L, c, 500)))
    assert abs(total - (hi - lo)) < 1e-9


def test_fourier_kernel_m1_sin_form():
    kp = kernel_params(mpq(51, 50))
    L, N = 1, 1000
    assert kp.M_of_N(N) == 1
    kern = fourier_kernel(kp, L, N)
    cnt, _ = lambda_count(L, mpq(51, 50), N)
    ns = np.arange(1, N + 1, dtype=np.float64)
    psi1 = ns ** (50 / 51)
    psi2 = (ns + 1) ** (50 / 51)
    direct = (np.sin(2 * np.pi * psi2) - np.sin(2 * np.pi * psi1)) / np.pi / cnt
    assert np.max(np.abs(kern.values[1:] - direct)) < 1e-9
    assert kern.imag_mass == 0.0
    assert kern.values[0] == 0.0
    assert kern.sup <= 2 * 1 / (np.pi * cnt) + 1e-12


def test_dyadic_split_partitions():
    kp = kernel_params(mpq(51, 50))
    kern = fourier_kernel(kp, 1, 1000)
    blocks = dyadic_split(kern, 1000)
    assert len(blocks) == 10  # 2^9 <= 1000 < 2^10
    total = np.zeros_like(kern.values)
    support = np.zeros(1001, dtype=int)
    for blk in blocks:
        total = total + blk.values
        support += np.abs(blk.values) > 0
    assert np.array_equal(total, kern.values)  # exact reassembly
    assert support.max() <= 1  # supports are disjoint


def test_mu_weights():
    assert mu_N(4, 0) == Fraction(4, 16)
    assert mu_N(4, 3) == Fraction(1, 16)
    assert mu_N(4, 4) == 0
    assert sum(mu_N(7, n) for n in range(-7, 8)) == 1


def test_r_H_counts():
    H = [1, 2, 3]
    assert r_H(H, 0) == 3
    assert r_H(H, 1) == 2
    assert r_H(H, 2) == 1
    assert sum(r_H(H, h) for h in range(-3, 4)) == 9


def test_delta_diff_quadratic_phase_is_constant():
    theta = 0.37
    f = {x: np.exp(2j * np.pi * theta * x * x) for x in range(-30, 31)}
    d = delta_diff(f, [3, 5])
    vals = [v for x, v in d.items() if -20 <= x <= 20]
    want = np.exp(2j * np.pi * theta * 2 * 15)
    assert all(abs(v - want) < 1e-12 for v in vals)


def test_delta_diff_order_commutes():
    f = {x: np.exp(2j * np.pi * 0.11 * x**3) for x in range(-20, 21)}
    a = delta_diff(f, [2, 7])
    b = delta_diff(f, [7, 2])
    common = set(a) & set(b)
    assert common
    assert all(abs(a[x] - b[x]) < 1e-12 for x in common)


def test_vdc_worked_example():
    lhs, rhs = vdc_check({y: 1.0 for y in range(1, 11)}, list(range(1, 6)))
    assert lhs == 100.0
    # the bound is (|S - H| / |H|^2) * 210 = 588/5, checked as a rational
    total = Fraction(0)
    for h in range(-4, 5):
        total += Fraction(r_H(list(range(1, 6)), h)) * max(10 - abs(h), 0)
    assert Fraction(14, 25) * total == Fraction(588, 5)
    assert abs(rhs - 117.6) < 1e-9


def test_vdc_single_spike():
    lhs, rhs = vdc_check({0: 1.0}, [1])
    assert lhs == 1.0 and rhs == 1.0


def test_vdc_randomized_inequality():
    rng = np.random.default_rng(7)
    for _ in range(60):
        ssz = int(rng.integers(1, 33))
        ys = rng.choice(np.arange(-40, 41), size=ssz, replace=False)
        vals = rng.uniform(-1, 1, ssz) + 1j * rng.uniform(-1, 1, ssz)
        g = {int(y): v / max(1.0, abs(v)) for y, v in zip(ys, vals)}
        hsz = int(rng.integers(1, 9))
        H = [int(h) for h in rng.choice(np.arange(-10, 11), size=hsz, replace=False)]
        lhs, rhs = vdc_check(g, H)  # raises if the inequality fails
        assert lhs <= rhs * (1 + 2**-40) + 2**-40


def test_vdc_empty_rejected():
    with pytest.raises(ValueError):
        vdc_check({}, [1])
    with pytest.raises(ValueError):
        vdc_check({0: 1.0}, [])


def test_correlation_bound_structure():
    f = {x: 1.0 for x in range(4)}
    out = correlation_bound_ratio(f, f, f, {0: 1.0, 1: -1.0}, 1, 2, 4)
    assert set(out) >= {"lhs", "rhs", "ratio", "S"}
    assert out["S"] == 10**9 * (1 + 2 + 1)
    with pytest.raises(ValueError):
        correlation_bound_ratio(f, f, f, {0: 2.0}, 1, 2, 4)  # not 1-bounded
    with pytest.raises(ValueError):
        correlation_bound_ratio(f, f, f, f, 1, 2, 40)  # N capped small
