"""Continued fractions and certified rational approximation.

Expansion runs in exact rational arithmetic on the input value.  An
int, Fraction, or mpq is taken as exactly the intended number, so the
expansion terminates at the true last quotient.  A float or mpfr is a
dyadic stand-in for some nearby real: its expansion is cut off once
the remainder drops below 2^-90, past which the quotients would
reflect the representation rather than the number.

Each convergent carries a certified error bound: 1/(q_k q_{k+1}) in
the interior (a true bound for any number sharing the expansion), and
for the final convergent the measured residual against the input.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import gmpy2

from .precision import _to_mpq

_TRUST_FLOOR = gmpy2.mpq(1, 2**90)


@dataclass(frozen=True)
class CFResult:
    quotients: tuple
    terminated: bool


@dataclass(frozen=True)
class Convergent:
    p: int
    q: int
    error_bound: Fraction


def cf_expand(gamma, max_terms=64):
    """Continued fraction quotients [a0; a1, a2, ...] with a0 = floor(gamma)."""
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    exact = isinstance(gamma, (int, Fraction)) or isinstance(gamma, type(gmpy2.mpq()))
    v = _to_mpq(gamma)
    quotients = []
    terminated = False
    for _ in range(int(max_terms)):
        a = v.numerator // v.denominator
        quotients.append(int(a))
        r = v - a
        if r == 0:
            terminated = True
            break
        if not exact and r < _TRUST_FLOOR:
            break
        v = 1 / r
    return CFResult(tuple(quotients), terminated)


def convergents(cf, gamma=None):
    """Convergents p_k/q_k of an expansion, with certified error bounds.

    cf may be a CFResult or a plain quotient sequence.  When gamma is
    given (or the expansion terminated), the last bound is the actual
    residual; otherwise the standard 1/q_k^2 upper bound stands in.
    """
    if isinstance(cf, CFResult):
        quotients, terminated = cf.quotients, cf.terminated
    else:
        quotients, terminated = tuple(cf), False
    if not quotients:
        raise ValueError("empty quotient sequence")
    ps = [0, 1]
    qs = [1, 0]
    for a in quotients:
        ps.append(a * ps[-1] + ps[-2])
        qs.append(a * qs[-1] + qs[-2])
    ps, qs = ps[2:], qs[2:]
    out = []
    last = len(quotients) - 1
    for k, (p, q) in enumerate(zip(ps, qs)):
        if k < last:
            bound = Fraction(1, q * qs[k + 1])
        elif terminated and gamma is None:
            bound = Fraction(0)
        elif gamma is not None:
            res = abs(_to_mpq(gamma) - gmpy2.mpq(p, q))
            bound = Fraction(res.numerator, res.denominator) if res else Fraction(0)
        else:
            bound = Fraction(1, q * q)
        out.append(Convergent(int(p), int(q), bound))
    return out


def best_approx(gamma, N, max_terms=64):
    """Smallest-denominator convergent p/q with |gamma - p/q| < 1/N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    g = _to_mpq(gamma)
    cf = cf_expand(gamma, max_terms=max_terms)
    for conv in convergents(cf, gamma=g):
        if abs(g - gmpy2.mpq(conv.p, conv.q)) < gmpy2.mpq(1, N):
            return conv
    raise ValueError("no convergent within 1/N at this expansion depth")


def _selftest_coprime(conv):
    return gcd(conv.p, conv.q) == 1
