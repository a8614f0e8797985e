"""Weight sequences and kernels for averages along power times.

Covers the index set Lambda = {floor(L n^c)}, the inverse map psi of
L x^c, sawtooth E-weights, the truncated Fourier kernel K_N with its
(eps0, sigma0, M) parameter pack, dyadic splits, the mu_N and r_H
counting weights, iterated multiplicative differences, and a checked
van der Corput inequality.

The kernel parameters keep exact rational copies of c-derived
quantities when c is rational with small denominator, so M(N) floors
are decided by integer root extraction instead of rounding.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np

from .precision import (
    DEFAULT_BITS,
    _to_mpq,
    floor_pow_batch,
    phi,
    real,
)

_C_LOW = gmpy2.mpq(1)
_C_HIGH = gmpy2.mpq(23, 22)


@dataclass(frozen=True)
class KernelParams:
    """Exponent c with its derived truncation parameters."""

    c: object      # mpfr
    eps0: object   # mpfr, (23 - 22c) / (40c)
    sigma0: object  # mpfr, 1 + eps0 - 1/c
    _c_q: object = None
    _sigma_q: object = None

    def M_of_N(self, N):
        """floor(N**sigma0); exact via integer roots for rational sigma0."""
        if N < 1:
            raise ValueError("N must be >= 1")
        u = int(self._sigma_q.numerator)
        v = int(self._sigma_q.denominator)
        if u <= 64 and v <= 64:
            root, _ = gmpy2.iroot(gmpy2.mpz(N) ** u, v)
            return int(root)
        with gmpy2.context(precision=212):
            return int(gmpy2.floor(gmpy2.mpfr(N) ** self.sigma0))


def kernel_params(c, bits=DEFAULT_BITS):
    if isinstance(c, str):
        try:
            cq = gmpy2.mpq(c)
        except ValueError:
            from .precision import parse_real

            cq = _to_mpq(parse_real(c, bits))
    else:
        cq = _to_mpq(c)
    if not (_C_LOW < cq < _C_HIGH):
        raise ValueError("c must lie strictly between 1 and 23/22")
    eps0_q = (23 - 22 * cq) / (40 * cq)
    sigma0_q = 1 + eps0_q - 1 / cq
    return KernelParams(
        c=real(Fraction(cq.numerator, cq.denominator), bits),
        eps0=real(Fraction(eps0_q.numerator, eps0_q.denominator), bits),
        sigma0=real(Fraction(sigma0_q.numerator, sigma0_q.denominator), bits),
        _c_q=cq,
        _sigma_q=sigma0_q,
    )


def psi_inverse(L, c, y, bits=DEFAULT_BITS):
    """(y/L)**(1/c): the inverse of x -> L x^c on [0, inf)."""
    L_r = L if isinstance(L, type(gmpy2.mpfr())) else real(L, bits)
    c_r = c if isinstance(c, type(gmpy2.mpfr())) else real(c, bits)
    y_r = y if isinstance(y, type(gmpy2.mpfr())) else real(y, bits)
    if L_r <= 0:
        raise ValueError("L must be positive")
    if y_r < 0:
        raise ValueError("y must be non-negative")
    with gmpy2.context(precision=bits):
        return (y_r / L_r) ** (1 / c_r)


def _psi_batch(L, c, ns):
    """float64 psi values over an integer array."""
    return (np.asarray(ns, dtype=np.float64) / float(real(L))) ** (
        1.0 / float(real(c))
    )


def lambda_count(L, c, N, bits=DEFAULT_BITS):
    """|Lambda cap [N]| for Lambda = {floor(L n^c) : n >= 1}.

    Returns (count, indicator) where indicator is a bool array of
    length N+1 indexed by the integer value (index 0 unused).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    guess = int((float(N) / float(real(L))) ** (1.0 / float(real(c)))) + 8
    while True:
        ns = np.arange(1, guess + 1, dtype=np.int64)
        floors, _ = floor_pow_batch(L, c, ns, bits)
        if floors[-1] > N:
            break
        guess *= 2
    members = np.unique(floors[(floors >= 1) & (floors <= N)])
    indicator = np.zeros(N + 1, dtype=bool)
    indicator[members] = True
    return int(len(members)), indicator


def default_step_scale(k, gamma, beta, bits=DEFAULT_BITS):
    """The constraint-satisfying default L = k (|gamma| + 3) |beta|."""
    with gmpy2.context(precision=bits):
        return gmpy2.mpfr(k) * (abs(real(gamma, bits)) + 3) * abs(real(beta, bits))


def e_weight(L, c, n, bits=DEFAULT_BITS):
    """Phi(-psi(n+1)) - Phi(-psi(n)) for the sawtooth Phi = {x} - 1/2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    with gmpy2.context(precision=bits):
        return phi(-psi_inverse(L, c, n + 1, bits)) - phi(-psi_inverse(L, c, n, bits))


def e_weight_batch(L, c, ns):
    """float64 E-weights; agrees with e_weight away from sawtooth jumps."""
    ns = np.asarray(ns, dtype=np.int64)
    lo = -_psi_batch(L, c, ns)
    hi = -_psi_batch(L, c, ns + 1)
    return (hi - np.floor(hi)) - (lo - np.floor(lo))


@dataclass(frozen=True)
class WeightSeq:
    """Weights w(n) on n in [N]; stored as an array indexed by n."""

    values: np.ndarray  # length N+1, entry 0 unused (zero)
    tag: str
    sup: float
    imag_mass: float = 0.0

    @property
    def N(self):
        return len(self.values) - 1


def fourier_kernel(params, L, N, bits=DEFAULT_BITS):
    """K_N(n) = (1/|Lambda cap [N]|) sum_{0<|m|<=M} [e(m psi(n+1)) - e(m psi(n))] / (2 pi i m).

    The +m/-m pairing makes the sum exactly real; any residual
    imaginary mass is recorded (and flagged downstream if > 2^-60).
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    M = params.M_of_N(N)
    cnt, _ = lambda_count(L, params.c, N, bits)
    if cnt == 0:
        raise ValueError("Lambda has no members in [1, N]")
    ns = np.arange(1, N + 1, dtype=np.int64)
    psi_lo = _psi_batch(L, params.c, ns)
    psi_hi = _psi_batch(L, params.c, ns + 1)
    acc = np.zeros(N, dtype=np.complex128)
    for m in range(1, M + 1):
        ep = np.exp(2j * np.pi * m * psi_hi)
        em = np.exp(2j * np.pi * m * psi_lo)
        term = (ep - em) / (2j * np.pi * m)
        acc += term + np.conj(term)
    imag_mass = float(np.max(np.abs(acc.imag))) if N else 0.0
    values = np.zeros(N + 1, dtype=np.float64)
    values[1:] = acc.real / cnt
    return WeightSeq(
        values=values,
        tag=f"K_N c={float(params.c):.6g} L={float(real(L)):.6g} N={N} M={M}",
        sup=float(np.max(np.abs(values))),
        imag_mass=imag_mass,
    )


def dyadic_split(w, N):
    """Pieces 1_[2^j, min(2^{j+1}, N+1)) * w for j = 0..floor(log2 N)."""
    if len(w.values) != N + 1:
        raise ValueError("weight sequence does not cover [N]")
    if w.values[0] != 0:
        raise ValueError("weight sequence must vanish at index 0")
    out = []
    j = 0
    while 2**j <= N:
        lo, hi = 2**j, min(2 ** (j + 1), N + 1)
        vals = np.zeros_like(w.values)
        vals[lo:hi] = w.values[lo:hi]
        out.append(
            WeightSeq(
                values=vals,
                tag=f"{w.tag} | block j={j}",
                sup=float(np.max(np.abs(vals))),
                imag_mass=w.imag_mass,
            )
        )
        j += 1
    return out


def mu_N(N, n):
    """|{(h1,h2) in [N]^2 : h1-h2 = n}| / N^2 as an exact Fraction."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return Fraction(max(N - abs(n), 0), N * N)


def r_H(H, h):
    """|{(h1,h2) in H^2 : h1-h2 = h}|."""
    H = list(H)
    if not H:
        raise ValueError("H must be non-empty")
    return sum(1 for a in H for b in H if a - b == h)


def delta_diff(f, shifts):
    """Iterated multiplicative difference of a dict-backed sequence.

    One step sends f to x -> f(x) * conj(f(x+h)); steps are applied in
    the order given (the operations commute).
    """
    cur = dict(f)
    for h in shifts:
        h = int(h)
        cur = {
            x: v * np.conj(cur[x + h]).item()
            for x, v in cur.items()
            if x + h in cur
        }
    return cur


def vdc_check(g, H):
    """Both sides of |sum g|^2 <= (|S-H|/|H|^2) sum_h r_H(h) sum_y g(y+h) conj(g(y)).

    S is the support of g (the dict keys); H a finite integer set.
    Returns (lhs, rhs).  The inequality is a theorem with an explicit
    constant, so a violation beyond 2^-40 relative slack is an
    arithmetic fault and raises.
    """
    if not g:
        raise ValueError("g must have non-empty support")
    H = sorted(set(int(h) for h in H))
    if not H:
        raise ValueError("H must be non-empty")
    total = complex(
        math.fsum(complex(v).real for v in g.values()),
        math.fsum(complex(v).imag for v in g.values()),
    )
    lhs = abs(total) ** 2
    S = set(g.keys())
    diff_set = {s - h for s in S for h in H}
    diff_counts = Counter(a - b for a in H for b in H)
    corr = 0j
    for h, r in sorted(diff_counts.items()):
        inner = sum(
            complex(g[y + h]) * complex(g[y]).conjugate()
            for y in g
            if y + h in g
        )
        corr += r * inner
    rhs = (len(diff_set) / len(H) ** 2) * corr.real
    if lhs > rhs * (1 + 2.0**-40) + 2.0**-40:
        raise ArithmeticError(f"van der Corput inequality violated: {lhs} > {rhs}")
    return lhs, rhs


def correlation_bound_ratio(f0, f1, f2, f3, p, q, N):
    """Both sides of the tiny-instance correlation bound.

    lhs = |sum_x sum_n f0(x) f1(x+pn) f2(x+qn) f3(n)|, rhs is the
    N^13-scaled difference-average majorant.  The inequality's constant
    depends on S = 10^9 (|p|+q+1) and is unspecified, so only the two
    values and their ratio are reported; nothing is asserted.
    """
    if N < 1 or N > 16:
        raise ValueError("tiny-instance evaluator: need 1 <= N <= 16")
    if q < 1:
        raise ValueError("q must be >= 1")
    for tag, fk in (("f0", f0), ("f1", f1), ("f2", f2), ("f3", f3)):
        for v in fk.values():
            if abs(complex(v)) > 1 + 2.0**-40:
                raise ValueError(f"{tag} is not 1-bounded")
    S_const = 10**9 * (abs(p) + q + 1)
    lhs_acc = 0j
    for x, v0 in f0.items():
        for n, v3 in f3.items():
            a = f1.get(x + p * n)
            if a is None:
                continue
            b = f2.get(x + q * n)
            if b is None:
                continue
            lhs_acc += complex(v0) * complex(a) * complex(b) * complex(v3)
    lhs = abs(lhs_acc)
    rhs_acc = 0j
    for h3 in range(-(N - 1), N):
        w = mu_N(N, h3)
        if w == 0:
            continue
        block = 0j
        for h1 in range(-N, N + 1):
            for h2 in range(-N, N + 1):
                d = delta_diff(f3, (h1, h2, h3))
                block += sum(d.values())
        rhs_acc += float(w) * block
    rhs = (N**13) * rhs_acc.real
    ratio = lhs / rhs if rhs != 0 else math.inf if lhs > 0 else 0.0
    return {
        "lhs": lhs,
        "rhs": rhs,
        "rhs_imag": abs(rhs_acc.imag) * N**13,
        "ratio": ratio,
        "S": S_const,
    }
