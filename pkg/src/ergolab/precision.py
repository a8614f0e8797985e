"""Extended-precision scalars and floor/fractional-part primitives.

Everything downstream reduces to deciding floors of alpha*n**c and of
linear forms theta*n + d, and to taking fractional parts of the results.
Scalar values are computed with MPFR at a configurable precision
(default 106 bits, the double-double ballpark).  Bulk paths run in
float64 and fall back to the scalar path for any entry that lands too
close to an integer for the fast path to certify the floor, so batch
floors always agree with the scalar reference.

A floor decision whose fractional part lies within 2**-GUARD_EXP of an
integer is never silently trusted: the result carries a boundary flag
and callers count flagged entries per experiment.  Flagged floors keep
the value floor(computed), i.e. the downward rounding of the computed
point value.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import re

import gmpy2
import numpy as np
from gmpy2 import mpfr, mpq

DEFAULT_BITS = 106
GUARD_EXP = 40

# Fast-path controls: entries whose fractional part is within
# _REFINE_EPS of an integer are recomputed in MPFR.  The float64 error
# of a*n**c is below ~4 ulp, so for magnitudes up to _MAX_FAST_MAG the
# error stays under 1e9 * 2**-50 < 1e-6, comfortably inside the margin.
_REFINE_EPS = 1e-5
_MAX_FAST_MAG = 1e9


def real(x, bits=DEFAULT_BITS):
    """Build an MPFR scalar at the given precision.

    Accepts int, float, Fraction, mpq, mpfr, and numeric strings
    (parsed as decimal).  Non-finite values are rejected.
    """
    with gmpy2.context(precision=bits):
        if isinstance(x, Fraction):
            v = mpfr(mpq(x.numerator, x.denominator))
        elif isinstance(x, str):
            v = mpfr(x)
        else:
            v = mpfr(x)
    if not gmpy2.is_finite(v):
        raise ValueError(f"non-finite value: {x!r}")
    return v


_CONST_RE = re.compile(
    r"^\s*(?P<head>pi|e|golden|sqrt\((?P<rad>\d+)\))"
    r"\s*(?P<shift>[+-]\s*\d+(?:\.\d+)?(?:/\d+)?)?\s*$"
)
_RATIONAL_RE = re.compile(r"^\s*[+-]?\d+/\d+\s*$")


def parse_real(spec, bits=DEFAULT_BITS):
    """Parse a config-level real: a number, 'p/q', a decimal string, or
    a named constant ('pi', 'e', 'golden', 'sqrt(k)') with an optional
    rational shift such as 'sqrt(2)-1'.

    Exact rational inputs (ints, Fractions, mpq, 'p/q' strings) come
    back as mpq so downstream floor arithmetic keeps its exact paths;
    everything else becomes an MPFR scalar at the given precision.
    """
    if isinstance(spec, (int, Fraction)) and not isinstance(spec, bool):
        return mpq(spec)
    if isinstance(spec, type(mpq())):
        return spec
    if not isinstance(spec, str):
        return real(spec, bits)
    s = spec.strip()
    if _RATIONAL_RE.match(s):
        num, den = s.split("/")
        return mpq(int(num), int(den))
    m = _CONST_RE.match(s)
    if m:
        with gmpy2.context(precision=bits):
            head = m.group("head")
            if head == "pi":
                v = gmpy2.const_pi()
            elif head == "e":
                v = gmpy2.exp(1)
            elif head == "golden":
                v = (1 + gmpy2.sqrt(5)) / 2
            else:
                v = gmpy2.sqrt(int(m.group("rad")))
            shift = m.group("shift")
            if shift:
                shift = shift.replace(" ", "")
                sign = -1 if shift[0] == "-" else 1
                body = shift[1:]
                if "/" in body:
                    num, den = body.split("/")
                    v = v + sign * mpq(int(num), int(den))
                else:
                    v = v + sign * mpfr(body)
        return v
    return real(s, bits)


def frac(x):
    """Fractional part in [0, 1); exact at the input's precision."""
    v = x if isinstance(x, mpfr) else real(x)
    if not gmpy2.is_finite(v):
        raise ValueError("frac of non-finite value")
    with gmpy2.context(precision=v.precision):
        f = v - gmpy2.floor(v)
        if f >= 1:  # cannot occur for exact floor; kept as a tripwire
            f = mpfr(0)
    return f


def phi(x):
    """The sawtooth x -> {x} - 1/2, valued in [-1/2, 1/2)."""
    f = frac(x)
    with gmpy2.context(precision=f.precision):
        return f - mpfr("0.5")


@dataclass(frozen=True)
class FloorResult:
    """A decided floor plus its fractional part and ambiguity flag."""

    floor_value: int
    frac_value: object  # mpfr in [0, 1)
    boundary_flag: bool


def _to_mpq(x):
    """Exact rational view of a rational-representable input."""
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, (int, np.integer)):
        return mpq(int(x), 1)
    return mpq(x)  # float and mpfr are exact dyadic rationals


def _flagged(v, bits):
    """Floor an MPFR value, marking fractional parts inside the guard."""
    with gmpy2.context(precision=bits):
        fl = gmpy2.floor(v)
        fr = v - fl
        guard = mpfr(2) ** (-GUARD_EXP)
        flag = bool(fr < guard or fr > 1 - guard)
    return FloorResult(int(fl), fr, flag)


def floor_pow(alpha, c, n, bits=DEFAULT_BITS):
    """FloorResult of alpha * n**c for integer n >= 1.

    Exact (never flagged) when c == 1 and alpha is rational-
    representable; otherwise computed in MPFR at `bits` precision with
    the guard-flag policy.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    c_r = c if isinstance(c, mpfr) else real(c, bits)
    if not (0 < c_r < 2):
        raise ValueError("c must lie in (0, 2)")
    if c_r == 1:
        v = _to_mpq(alpha) * n
        if v == 0:
            raise ValueError("alpha must be non-zero")
        fl = v.numerator // v.denominator
        return FloorResult(int(fl), real(v - fl, bits), False)
    a_r = alpha if isinstance(alpha, mpfr) else real(alpha, bits)
    if a_r == 0:
        raise ValueError("alpha must be non-zero")
    with gmpy2.context(precision=bits):
        v = a_r * (mpfr(n) ** c_r)
    return _flagged(v, bits)


def floor_linear(theta, d, n, bits=DEFAULT_BITS):
    """FloorResult of theta*n + d at `bits` precision.

    Exact (never flagged) when theta and d are rationals with small
    combined denominator, mirroring the batch fast path.
    """
    tq, dq = _to_mpq(theta), _to_mpq(d)
    if int(tq.denominator) * int(dq.denominator) <= 2**20:
        v = tq * n + dq
        fl = v.numerator // v.denominator
        return FloorResult(int(fl), real(v - fl, bits), False)
    t_r = theta if isinstance(theta, mpfr) else real(theta, bits)
    d_r = d if isinstance(d, mpfr) else real(d, bits)
    with gmpy2.context(precision=bits):
        v = t_r * n + d_r
    return _flagged(v, bits)


def _refine(vf, ns, scalar, bits):
    """Shared tail of the batch paths: float64 candidates plus MPFR
    refinement of near-integer entries."""
    floors = np.floor(vf)
    fr = vf - floors
    floors = floors.astype(np.int64)
    flags = np.zeros(len(ns), dtype=bool)
    near = np.nonzero((fr < _REFINE_EPS) | (fr > 1 - _REFINE_EPS))[0]
    for i in near:
        r = scalar(int(ns[i]), bits)
        floors[i] = r.floor_value
        flags[i] = r.boundary_flag
    return floors, flags


def floor_pow_batch(alpha, c, ns, bits=DEFAULT_BITS):
    """Vector of floors of alpha * n**c with per-entry boundary flags.

    Agrees entrywise with floor_pow.  Falls back to the scalar path
    entirely when magnitudes exceed the float64 comfort zone.
    """
    ns = np.asarray(ns, dtype=np.int64)
    c_r = c if isinstance(c, mpfr) else real(c, bits)
    if c_r == 1:
        aq = _to_mpq(alpha)
        num, den = int(aq.numerator), int(aq.denominator)
        nmax = int(np.max(np.abs(ns))) if len(ns) else 1
        if abs(num) * nmax < 2**62 and den < 2**62:
            floors = (num * ns) // den
            return floors, np.zeros(len(ns), dtype=bool)
    a_f = float(real(alpha, bits) if not isinstance(alpha, mpfr) else alpha)
    c_f = float(c_r)
    vf = a_f * np.power(ns.astype(np.float64), c_f) if c_f != 1.0 else a_f * ns
    if len(ns) and np.max(np.abs(vf)) > _MAX_FAST_MAG:
        results = [floor_pow(alpha, c, int(n), bits) for n in ns]
        floors = np.array([r.floor_value for r in results], dtype=np.int64)
        flags = np.array([r.boundary_flag for r in results], dtype=bool)
        return floors, flags
    return _refine(vf, ns, lambda n, b: floor_pow(alpha, c, n, b), bits)


def floor_linear_batch(theta, d, ns, bits=DEFAULT_BITS):
    """Vector of floors of theta*n + d with per-entry boundary flags."""
    ns = np.asarray(ns, dtype=np.int64)
    tq, dq = _to_mpq(theta), _to_mpq(d)
    den = int(tq.denominator) * int(dq.denominator)
    if den <= 2**20:
        # exact integer path: theta*n + d = (num_t*n + num_d) / den
        num_t = int(tq.numerator) * int(dq.denominator)
        num_d = int(dq.numerator) * int(tq.denominator)
        nmax = int(np.max(np.abs(ns))) if len(ns) else 0
        if abs(num_t) * nmax + abs(num_d) < 2**62:
            floors = (num_t * ns + num_d) // den
            return floors, np.zeros(len(ns), dtype=bool)
    t_r = theta if isinstance(theta, mpfr) else real(theta, bits)
    d_r = d if isinstance(d, mpfr) else real(d, bits)
    t_f, d_f = float(t_r), float(d_r)
    vf = t_f * ns.astype(np.float64) + d_f
    if len(ns) and np.max(np.abs(vf)) > _MAX_FAST_MAG:
        results = [floor_linear(theta, d, int(n), bits) for n in ns]
        floors = np.array([r.floor_value for r in results], dtype=np.int64)
        flags = np.array([r.boundary_flag for r in results], dtype=bool)
        return floors, flags
    return _refine(vf, ns, lambda n, b: floor_linear(theta, d, n, b), bits)
