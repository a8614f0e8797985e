"""Closed-form limit evaluators for the double averages.

The rational-ratio formula averages an inner double Birkhoff limit
over q sub-intervals of length |p|/q; the irrational-ratio formula
integrates a single inner limit over the unit interval.  Both inner
integrands are step functions of t (they depend on t only through
orbit floors), so midpoint quadrature converges at the rate set by the
number of breakpoints and needs no smoothness.

Inner limits are approximated at one large inner_N; on a finite cycle
they are instead computed exactly as one-period means.  Quadrature
node sums use numpy reductions (deterministic on a fixed platform);
the node-combination step uses compensated summation like the average
engines.  Each node records the drift between the half-range and
full-range inner values as a convergence diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from .dynsys import FiniteCycle
from .precision import DEFAULT_BITS, _to_mpq, floor_linear_batch, parse_real, real

_NODE_OSC_TOL = 0.05


@dataclass(frozen=True)
class LimitReport:
    """Direct average against formula value, with evaluation scale."""

    lhs_value: complex
    rhs_value: complex
    abs_diff: float
    quadrature_points: int
    inner_N: int


def _fill(diag, **kv):
    if diag is not None:
        diag.update(kv)


def limit_rational(
    system,
    f,
    g,
    p,
    q,
    x,
    inner_N=100000,
    grid_G=512,
    exact_inner=None,
    bits=DEFAULT_BITS,
    diag=None,
):
    """Limit of the double average when the exponent ratio is p/q.

    (1/|p|) sum_{r<q} integral over the r-th span of length |p|/q of
    lim (1/N) sum_n (T^r g)(T^{qn} x) (T^{floor t} f)(T^{pn} x) dt,
    with the p < 0 branch integrating its reversed spans forward.
    """
    p, q = int(p), int(q)
    if p == 0 or q < 1:
        raise ValueError("need p != 0 and q >= 1")
    if gcd(abs(p), q) != 1:
        raise ValueError("p and q must be coprime")
    if grid_G < 1 or inner_N < 1:
        raise ValueError("grid_G and inner_N must be positive")
    if exact_inner is None:
        exact_inner = isinstance(system, FiniteCycle)

    cache = {}

    def inner(r, j):
        if (r, j) not in cache:
            if exact_inner:
                M = system.modulus
                ns = np.arange(M, dtype=np.int64)
            else:
                ns = np.arange(inner_N, dtype=np.int64)
            vg = system.orbit_observe(g, x, r + q * ns)
            vf = system.orbit_observe(f, x, j + p * ns)
            terms = vg * vf
            cache[(r, j)] = complex(
                math.fsum(terms.real), math.fsum(terms.imag)
            ) / len(ns)
        return cache[(r, j)]

    width = Fraction(abs(p), q)
    node_re, node_im = [], []
    for r in range(q):
        a, b = Fraction(p * r, q), Fraction(p * (r + 1), q)
        lo = min(a, b)
        for i in range(grid_G):
            t = lo + (2 * i + 1) * width / (2 * grid_G)
            j = t.numerator // t.denominator
            v = inner(r, j)
            node_re.append(v.real)
            node_im.append(v.imag)
    value = complex(math.fsum(node_re), math.fsum(node_im)) / (q * grid_G)
    _fill(
        diag,
        inner_cells=len(cache),
        exact_inner=exact_inner,
        quadrature_points=q * grid_G,
        inner_N=0 if exact_inner else inner_N,
    )
    return value


def limit_irrational(
    system,
    f,
    g,
    gamma,
    x,
    inner_N=100000,
    grid_G=512,
    bits=DEFAULT_BITS,
    diag=None,
):
    """Integral over t in [0,1) of the inner limit of
    (1/N) sum_n g(T^n x) f(T^floor(gamma (n+t)) x).

    gamma enters only through this ratio; a rational gamma evaluates
    the same formula (it then agrees with the rational-ratio
    evaluator, which is how integer ratios are cross-checked).
    """
    gam = parse_real(gamma, bits)
    gq = _to_mpq(gam)
    if gq == 0 or abs(gq) == 1:
        raise ValueError("gamma must be non-zero with |gamma| != 1")
    ns = np.arange(inner_N, dtype=np.int64)
    g_vals = system.orbit_observe(g, x, ns)
    half = inner_N // 2
    node_re, node_im = [], []
    osc_max = 0.0
    flagged_nodes = 0
    floor_flags = 0
    for i in range(grid_G):
        t = (2 * i + 1) / (2 * grid_G)
        d = real(gam * real(t, bits), bits)
        kf, fl = floor_linear_batch(gam, d, ns, bits)
        terms = g_vals * system.orbit_observe(f, x, kf)
        full = complex(np.sum(terms.real), np.sum(terms.imag)) / inner_N
        if half:
            head = complex(np.sum(terms.real[:half]), np.sum(terms.imag[:half]))
            osc = abs(full - head / half)
            osc_max = max(osc_max, osc)
            flagged_nodes += osc > _NODE_OSC_TOL
        floor_flags += int(fl.sum())
        node_re.append(full.real)
        node_im.append(full.imag)
    value = complex(math.fsum(node_re), math.fsum(node_im)) / grid_G
    _fill(
        diag,
        node_osc_max=osc_max,
        nodes_flagged=flagged_nodes,
        floor_flags=floor_flags,
        quadrature_points=grid_G,
        inner_N=inner_N,
    )
    return value


def compare_limits(direct, formula, quadrature_points=0, inner_N=0):
    """Report the gap between a direct series and a formula value."""
    lhs = complex(direct.values[-1])
    rhs = complex(formula)
    return LimitReport(
        lhs_value=lhs,
        rhs_value=rhs,
        abs_diff=abs(lhs - rhs),
        quadrature_points=int(quadrature_points),
        inner_N=int(inner_N),
    )
