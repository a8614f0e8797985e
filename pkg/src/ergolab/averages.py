"""Ergodic average engines over closed-form systems.

All variants share one reproducible accumulation scheme.  The index
range [1, N_max] is cut into pieces at multiples of 4096 and at every
checkpoint; each piece's terms are summed left to right with
math.fsum, and a checkpoint value is the fsum of its prefix of piece
partials.  Piece partials do not depend on which thread computed them,
so results are bit-identical for any worker count, and computing a
shorter schedule reproduces the shared prefix exactly.

Orbit exponents (the floor sequences) are decided by the precision
module; every flagged floor decision that enters a value is counted
and reported alongside it.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from math import gcd

import gmpy2
import numpy as np

from .dynsys import (
    Character,
    CircleRotation,
    Constant,
    CoordinateIndicator,
    FiniteCycle,
    FiniteTable,
    TorusTranslation,
    tuple_apply,
)
from .kernels import e_weight_batch, fourier_kernel, lambda_count
from .precision import (
    DEFAULT_BITS,
    _to_mpq,
    floor_linear_batch,
    floor_pow_batch,
    parse_real,
    real,
)
from .suspension import SuspensionFlow

_CHUNK = 4096
_C_HIGH = gmpy2.mpq(23, 22)


def lacunary_schedule(n_max, lam=None, bits=DEFAULT_BITS):
    """Deduplicated checkpoints floor(lam^m) up to and including n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    with gmpy2.context(precision=bits):
        lam_r = gmpy2.root(gmpy2.mpfr(2), 8) if lam is None else real(lam, bits)
        if not lam_r > 1:
            raise ValueError("lambda must exceed 1")
        out = []
        m = 0
        while True:
            v = int(gmpy2.floor(lam_r**m))
            if v > n_max:
                break
            if not out or v > out[-1]:
                out.append(v)
            m += 1
    if not out or out[-1] != n_max:
        out.append(n_max)
    return tuple(out)


@dataclass
class AverageSpec:
    """Inputs of one average experiment.

    system: a system instance, or a list of commuting systems for the
    multi-axis variants.  params holds the variant coefficients
    (alpha/beta/c, a/b/d, or vectors b/d with c).  schedule is the
    strictly increasing checkpoint list ending at the largest N.
    """

    system: object
    f: object
    g: object = None
    params: dict = field(default_factory=dict)
    schedule: tuple = ()
    sample_count: int = 8
    seed: int = 2024
    variant: str = "tb"
    threads: int = 1
    bits: int = DEFAULT_BITS

    def __post_init__(self):
        self.schedule = tuple(int(n) for n in self.schedule)
        if not self.schedule:
            raise ValueError("schedule must be non-empty")
        if any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise ValueError("schedule must be strictly increasing")
        if self.schedule[0] < 1:
            raise ValueError("checkpoints start at 1")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


@dataclass
class AverageSeries:
    """Per-checkpoint sample means plus per-point values and spread."""

    checkpoints: tuple
    values: np.ndarray      # sample mean per checkpoint
    per_point: np.ndarray   # shape (points, checkpoints)
    dispersion: np.ndarray  # max |per-point - mean| per checkpoint
    flag_counts: np.ndarray  # flagged floor decisions entering each value
    meta: dict


def _pieces(n_max, checkpoints):
    cuts = sorted(set(range(_CHUNK, n_max + 1, _CHUNK)) | set(checkpoints) | {n_max})
    out = []
    lo = 0
    for cut in cuts:
        if cut > lo:
            out.append((lo + 1, cut))
            lo = cut
    return out


def _run_engine(points, spec, shared_builder, term_fn, norm_fn, bound, meta):
    """Shared accumulation core; see module docstring for the scheme."""
    schedule = spec.schedule
    pieces = _pieces(schedule[-1], schedule)
    shared = [shared_builder(lo, hi) for lo, hi in pieces]
    P, Q, K = len(points), len(pieces), len(schedule)
    re = np.zeros((P, Q))
    im = np.zeros((P, Q))
    fl = np.zeros((P, Q), dtype=np.int64)

    def job(task):
        pi, qi = task
        terms, flags = term_fn(points[pi], shared[qi])
        re[pi, qi] = math.fsum(terms.real)
        im[pi, qi] = math.fsum(terms.imag)
        fl[pi, qi] = flags

    tasks = [(pi, qi) for pi in range(P) for qi in range(Q)]
    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as ex:
            for _ in ex.map(job, tasks):
                pass
    else:
        for task in tasks:
            job(task)

    ends = {hi: i + 1 for i, (_, hi) in enumerate(pieces)}
    per_point = np.zeros((P, K), dtype=np.complex128)
    flag_counts = np.zeros(K, dtype=np.int64)
    for k, N in enumerate(schedule):
        j = ends[N]
        norm = norm_fn(N)
        for pi in range(P):
            per_point[pi, k] = complex(
                math.fsum(re[pi, :j]), math.fsum(im[pi, :j])
            ) / norm
        flag_counts[k] = int(fl[:, :j].sum())
    values = np.array(
        [
            complex(math.fsum(per_point[:, k].real), math.fsum(per_point[:, k].imag))
            / P
            for k in range(K)
        ],
        dtype=np.complex128,
    )
    dispersion = np.max(np.abs(per_point - values[None, :]), axis=0)
    meta = dict(meta)
    meta["bound"] = bound
    meta["max_modulus"] = float(np.max(np.abs(per_point)))
    meta["sample_count"] = P
    meta["seed"] = spec.seed
    meta["threads"] = spec.threads
    return AverageSeries(
        checkpoints=schedule,
        values=values,
        per_point=per_point,
        dispersion=dispersion,
        flag_counts=flag_counts,
        meta=meta,
    )


def _parse_c(value, bits, allow_wide=True, allow_unit=False):
    c = parse_real(value, bits)
    cq = _to_mpq(c)
    low_ok = cq >= 1 if allow_unit else cq > 1
    if not low_ok or cq >= 2:
        raise ValueError("c must lie in (1, 2)" + (" or equal 1" if allow_unit else ""))
    if cq >= _C_HIGH:
        if not allow_wide:
            raise ValueError("c must lie in (1, 23/22)")
        warnings.warn(
            "c outside (1, 23/22): equidistribution still holds but the "
            "convergence theory is not covered",
            stacklevel=3,
        )
    return c


def avg_nc_double(spec):
    """(1/N) sum f(T^floor(alpha n^c) x) g(T^floor(beta n^c) x)."""
    p = spec.params
    alpha = parse_real(p["alpha"], spec.bits)
    beta = parse_real(p["beta"], spec.bits)
    c = _parse_c(p.get("c", gmpy2.mpq(51, 50)), spec.bits)
    aq, bq = _to_mpq(alpha), _to_mpq(beta)
    if aq == 0 or bq == 0:
        raise ValueError("alpha and beta must be non-zero")
    if abs(aq) == abs(bq) and aq != -bq:
        raise ValueError("need |alpha| != |beta| (beta = -alpha is allowed)")
    system, f, g = spec.system, spec.f, spec.g

    def shared_builder(lo, hi):
        ns = np.arange(lo, hi + 1, dtype=np.int64)
        kf, ff = floor_pow_batch(alpha, c, ns, spec.bits)
        kg, fg = floor_pow_batch(beta, c, ns, spec.bits)
        return kf, kg, int(ff.sum()) + int(fg.sum())

    def term_fn(x, sh):
        kf, kg, flags = sh
        return system.orbit_observe(f, x, kf) * system.orbit_observe(g, x, kg), flags

    points = system.sample_points(spec.sample_count, spec.seed)
    meta = {
        "variant": "nc_double",
        "alpha": float(alpha),
        "beta": float(beta),
        "c": float(c),
    }
    return _run_engine(
        points, spec, shared_builder, term_fn, lambda N: N, f.bound * g.bound, meta
    )


def avg_linear_double(spec):
    """(1/N) sum f(T^floor(a n) x) g(T^floor(b n + d) x)."""
    p = spec.params
    a = parse_real(p["a"], spec.bits)
    b = parse_real(p["b"], spec.bits)
    d = parse_real(p.get("d", 0), spec.bits)
    system, f, g = spec.system, spec.f, spec.g

    def shared_builder(lo, hi):
        ns = np.arange(lo, hi + 1, dtype=np.int64)
        kf, ff = floor_linear_batch(a, 0, ns, spec.bits)
        kg, fg = floor_linear_batch(b, d, ns, spec.bits)
        return kf, kg, int(ff.sum()) + int(fg.sum())

    def term_fn(x, sh):
        kf, kg, flags = sh
        return system.orbit_observe(f, x, kf) * system.orbit_observe(g, x, kg), flags

    points = system.sample_points(spec.sample_count, spec.seed)
    meta = {"variant": "linear_double", "a": float(a), "b": float(b), "d": float(d)}
    return _run_engine(
        points, spec, shared_builder, term_fn, lambda N: N, f.bound * g.bound, meta
    )


def avg_BAE_family(spec, L, variant, case="ir", p=None, q=None):
    """The three weighted flow averages along Lambda = {floor(L n^c)}.

    B weights by the Lambda indicator over |Lambda cap [N]|, A by 1/N,
    E by the sawtooth increments over |Lambda cap [N]|.  Flow arguments
    are (floor(gamma n), n) scaled by beta/L in the irrational case and
    (p n, q n) scaled by beta/(qL) in the rational case.
    """
    if variant not in ("B", "A", "E"):
        raise ValueError("variant must be B, A, or E")
    if case not in ("ir", "ra"):
        raise ValueError("case must be ir or ra")
    prm = spec.params
    alpha = parse_real(prm["alpha"], spec.bits)
    beta = parse_real(prm["beta"], spec.bits)
    # c = 1 is the degenerate exactness fixture: Lambda has period L and
    # the sawtooth increments vanish for integer psi steps
    c = _parse_c(prm.get("c", gmpy2.mpq(51, 50)), spec.bits, allow_unit=True)
    aq, bq = _to_mpq(alpha), _to_mpq(beta)
    if bq == 0:
        raise ValueError("beta must be non-zero")
    Lq = _to_mpq(parse_real(L, spec.bits))
    if Lq <= 0:
        raise ValueError("L must be positive")
    n_max = spec.schedule[-1]

    if case == "ir":
        gamma_q = aq / bq
        step = bq / Lq
        m_builder = lambda ns: floor_linear_batch(gamma_q, 0, ns, spec.bits)
        g_scale = 1
    else:
        if p is None or q is None:
            raise ValueError("rational case needs p and q")
        p, q = int(p), int(q)
        if q < 1 or p == 0 or gcd(abs(p), q) != 1:
            raise ValueError("need gcd(|p|, q) = 1 with q >= 1, p != 0")
        if aq * q != bq * p:
            raise ValueError("p/q must equal alpha/beta exactly")
        step = bq / (q * Lq)
        m_builder = lambda ns: (p * ns, np.zeros(len(ns), dtype=bool))
        g_scale = q

    cnt_total, indicator = lambda_count(L, c, n_max, spec.bits)
    member_counts = np.cumsum(indicator[1:])  # |Lambda cap [N]| at N = index+1

    def shared_builder(lo, hi):
        ns = np.arange(lo, hi + 1, dtype=np.int64)
        m_f, mflags = m_builder(ns)
        m_g = g_scale * ns
        if variant == "B":
            w = indicator[lo : hi + 1].astype(np.float64)
        elif variant == "E":
            w = e_weight_batch(L, c, ns)
        else:
            w = None
        return m_f, m_g, w, int(np.sum(mflags))

    flow = SuspensionFlow(spec.system, spec.bits)
    base = spec.system
    f, g = spec.f, spec.g

    def term_fn(y, sh):
        m_f, m_g, w, flags = sh
        jf, f1 = floor_linear_batch(step, y.s, m_f, spec.bits)
        jg, f2 = floor_linear_batch(step, y.s, m_g, spec.bits)
        terms = base.orbit_observe(f, y.base, jf) * base.orbit_observe(g, y.base, jg)
        if w is not None:
            terms = terms * w
        return terms, flags + int(f1.sum()) + int(f2.sum())

    def norm_fn(N):
        if variant == "A":
            return N
        cnt = int(member_counts[N - 1])
        if cnt == 0:
            raise ValueError(f"Lambda has no members in [1, {N}]")
        return cnt

    if variant in ("B", "E"):
        # normalized by |Lambda cap [N]|, undefined before the first member
        kept = tuple(N for N in spec.schedule if member_counts[N - 1] > 0)
        if not kept:
            raise ValueError(f"Lambda has no members in [1, {n_max}]; increase the range")
        if kept != spec.schedule:
            spec = replace(spec, schedule=kept)

    points = flow.sample_points(spec.sample_count, spec.seed)
    meta = {
        "variant": f"bae_{variant}_{case}",
        "alpha": float(alpha),
        "beta": float(beta),
        "c": float(c),
        "L": float(real(L, spec.bits)),
        "lambda_total": cnt_total,
    }
    if case == "ra":
        meta["p"], meta["q"] = p, q
    return _run_engine(
        points, spec, shared_builder, term_fn, norm_fn, f.bound * g.bound, meta
    )


@dataclass
class WResult:
    """Per-point weighted averages at one N plus their mean modulus."""

    per_point: np.ndarray
    l1: float
    meta: dict


def avg_W(spec, params, conv, L):
    """Fourier-kernel weighted flow average at N = last checkpoint.

    Flow arguments are n P_N and n Q_N along S^(beta/(L Q_N)), i.e.
    exponent slopes P_N beta / (L Q_N) for f and beta / L for g; the
    kernel already carries the 1/|Lambda cap [N]| normalization.
    """
    N = spec.schedule[-1]
    beta = parse_real(spec.params["beta"], spec.bits)
    bq = _to_mpq(beta)
    Lq = _to_mpq(parse_real(L, spec.bits))
    kern = fourier_kernel(params, L, N, spec.bits)
    theta_f = bq * conv.p / (Lq * conv.q)
    theta_g = bq / Lq
    flow = SuspensionFlow(spec.system, spec.bits)
    base, f, g = spec.system, spec.f, spec.g
    pieces = _pieces(N, (N,))
    points = flow.sample_points(spec.sample_count, spec.seed)
    P = len(points)
    re = np.zeros((P, len(pieces)))
    im = np.zeros((P, len(pieces)))
    fl = np.zeros((P, len(pieces)), dtype=np.int64)

    def job(task):
        pi, qi = task
        lo, hi = pieces[qi]
        ns = np.arange(lo, hi + 1, dtype=np.int64)
        y = points[pi]
        jf, f1 = floor_linear_batch(theta_f, y.s, ns, spec.bits)
        jg, f2 = floor_linear_batch(theta_g, y.s, ns, spec.bits)
        terms = (
            kern.values[lo : hi + 1]
            * base.orbit_observe(f, y.base, jf)
            * base.orbit_observe(g, y.base, jg)
        )
        re[pi, qi] = math.fsum(terms.real)
        im[pi, qi] = math.fsum(terms.imag)
        fl[pi, qi] = int(f1.sum()) + int(f2.sum())

    tasks = [(pi, qi) for pi in range(P) for qi in range(len(pieces))]
    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as ex:
            for _ in ex.map(job, tasks):
                pass
    else:
        for task in tasks:
            job(task)
    per_point = np.array(
        [complex(math.fsum(re[pi]), math.fsum(im[pi])) for pi in range(P)]
    )
    l1 = math.fsum(np.abs(per_point)) / P
    meta = {
        "variant": "w_kernel",
        "N": N,
        "P_N": conv.p,
        "Q_N": conv.q,
        "M": params.M_of_N(N),
        "kernel_sup": kern.sup,
        "flag_count": int(fl.sum()),
    }
    return WResult(per_point=per_point, l1=l1, meta=meta)


def _tuple_orbit_observe(systems, obs, x, K):
    """obs(T_1^{K[:,0]} ... T_m^{K[:,m-1]} x) vectorized where possible."""
    if isinstance(obs, Constant):
        return np.full(K.shape[0], obs.value, dtype=np.complex128)
    if all(isinstance(s, FiniteCycle) for s in systems):
        mod = systems[0].modulus
        if all(s.modulus == mod for s in systems):
            steps = np.array([s.step for s in systems], dtype=np.int64)
            idx = (int(x) + K @ steps) % mod
            if isinstance(obs, FiniteTable):
                return obs.values[idx]
            return np.array([obs.evaluate(int(i)) for i in idx], dtype=np.complex128)
    if all(isinstance(s, CircleRotation) for s in systems):
        shift = K.astype(np.float64) @ np.array([float(s.theta) for s in systems])
        fr = np.mod(float(x) + shift, 1.0)
        if isinstance(obs, Character):
            return np.exp(2j * np.pi * float(obs.freq) * fr)
        if isinstance(obs, CoordinateIndicator):
            return ((fr >= obs.lo) & (fr < obs.hi)).astype(np.complex128)
    if all(isinstance(s, TorusTranslation) for s in systems):
        dim = systems[0].dim
        if all(s.dim == dim for s in systems) and isinstance(obs, Character):
            thetas = np.array([[float(t) for t in s.thetas] for s in systems])
            fr = np.mod(
                np.array([float(xi) for xi in x])[None, :]
                + K.astype(np.float64) @ thetas,
                1.0,
            )
            return np.exp(2j * np.pi * (fr @ np.asarray(obs.freq, dtype=float)))
    return np.array(
        [
            obs.evaluate(tuple_apply(systems, [int(k) for k in row], x))
            for row in K
        ],
        dtype=np.complex128,
    )


def _dependent(bq, dq):
    """d = lambda*b for scalar lambda != 0, with b != d, b, d != 0."""
    if all(v == 0 for v in bq) or all(v == 0 for v in dq):
        return False
    if list(bq) == list(dq):
        return False
    lam = None
    for bi, di in zip(bq, dq):
        if bi == 0 and di == 0:
            continue
        if bi == 0 or di == 0:
            return False
        r = di / bi
        if lam is None:
            lam = r
        elif r != lam:
            return False
    return lam is not None and lam != 0


def avg_multi_TC(spec, allow_independent=False):
    """(1/N) sum f(prod T_i^floor(b_i n^c) x) g(prod T_i^floor(d_i n^c) x)."""
    prm = spec.params
    bvec = [parse_real(v, spec.bits) for v in prm["b"]]
    dvec = [parse_real(v, spec.bits) for v in prm["d"]]
    if len(bvec) != len(dvec):
        raise ValueError("b and d must have the same length")
    c = _parse_c(prm.get("c", gmpy2.mpq(51, 50)), spec.bits)
    bqs = [_to_mpq(v) for v in bvec]
    dqs = [_to_mpq(v) for v in dvec]
    if not _dependent(bqs, dqs) and not allow_independent:
        raise ValueError(
            "b and d must be distinct non-zero parallel vectors "
            "(pass allow_independent=True for an exploratory run)"
        )
    systems = spec.system if isinstance(spec.system, (list, tuple)) else [spec.system]
    systems = list(systems)
    if len(systems) != len(bvec):
        raise ValueError("one system per vector component")
    f, g = spec.f, spec.g

    def _columns(ns, coeffs):
        cols, flags = [], 0
        for v in coeffs:
            if _to_mpq(v) == 0:
                cols.append(np.zeros(len(ns), dtype=np.int64))
            else:
                k, fk = floor_pow_batch(v, c, ns, spec.bits)
                cols.append(k)
                flags += int(fk.sum())
        return np.stack(cols, axis=1), flags

    def shared_builder(lo, hi):
        ns = np.arange(lo, hi + 1, dtype=np.int64)
        Kb, fb = _columns(ns, bvec)
        Kd, fd = _columns(ns, dvec)
        return Kb, Kd, fb + fd

    def term_fn(x, sh):
        Kb, Kd, flags = sh
        return (
            _tuple_orbit_observe(systems, f, x, Kb)
            * _tuple_orbit_observe(systems, g, x, Kd),
            flags,
        )

    points = systems[0].sample_points(spec.sample_count, spec.seed)
    meta = {
        "variant": "tc_multi",
        "m": len(systems),
        "b": [float(v) for v in bvec],
        "d": [float(v) for v in dvec],
        "c": float(c),
        "dependent": _dependent(bqs, dqs),
    }
    return _run_engine(
        points, spec, shared_builder, term_fn, lambda N: N, f.bound * g.bound, meta
    )


@dataclass
class ProbeResult:
    """Running sup of |single averages| per point, and its sample L2."""

    per_point: np.ndarray
    l2: float
    series: AverageSeries


def sup_average_probe(spec):
    """max over checkpoints of |(1/N) sum f(prod T_i^floor(b_i n^c) x)|."""
    prm = spec.params
    bvec = [parse_real(v, spec.bits) for v in prm["b"]]
    c = _parse_c(prm.get("c", gmpy2.mpq(51, 50)), spec.bits)
    systems = spec.system if isinstance(spec.system, (list, tuple)) else [spec.system]
    systems = list(systems)
    if len(systems) != len(bvec):
        raise ValueError("one system per vector component")
    f = spec.f

    def shared_builder(lo, hi):
        ns = np.arange(lo, hi + 1, dtype=np.int64)
        cols, flags = [], 0
        for v in bvec:
            if _to_mpq(v) == 0:
                cols.append(np.zeros(len(ns), dtype=np.int64))
            else:
                k, fk = floor_pow_batch(v, c, ns, spec.bits)
                cols.append(k)
                flags += int(fk.sum())
        return np.stack(cols, axis=1), flags

    def term_fn(x, sh):
        K, flags = sh
        return _tuple_orbit_observe(systems, f, x, K), flags

    points = systems[0].sample_points(spec.sample_count, spec.seed)
    meta = {"variant": "sup_probe", "b": [float(v) for v in bvec], "c": float(c)}
    series = _run_engine(
        points, spec, shared_builder, term_fn, lambda N: N, f.bound, meta
    )
    sups = np.max(np.abs(series.per_point), axis=1)
    l2 = math.sqrt(math.fsum(sups**2) / len(sups))
    return ProbeResult(per_point=sups, l2=l2, series=series)


def oscillation(series, lam=None):
    """Max pairwise gap of the sample means over the schedule's final third."""
    K = len(series.checkpoints)
    if K < 3:
        raise ValueError("need at least 3 checkpoints")
    start = min((2 * K) // 3, K - 2)
    tail = series.values[start:]
    return float(
        max(abs(a - b) for i, a in enumerate(tail) for b in tail[i + 1 :])
    )
