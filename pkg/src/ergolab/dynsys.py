"""Invertible measure preserving systems with closed-form powers.

Every system implements T^k in O(1) via a closed form, so averages can
index orbits at positions up to ~1e7 (and at negative positions)
without caching orbits.  Scalar point operations go through exact
rational arithmetic where the representation allows it; orbit-sized
evaluations have vectorized fast paths per (system, observable) pair
and fall back to the scalar route otherwise.

Points by kind: circle -> mpfr in [0,1); torus -> tuple of mpfr;
skew product -> (x, y) pair of mpfr; bernoulli shift -> (seed, offset);
finite cycle -> residue int; product -> tuple of component points.
"""

from __future__ import annotations

import numpy as np

from .precision import DEFAULT_BITS, _to_mpq, real

_U64 = 0xFFFFFFFFFFFFFFFF
_SM64_GAMMA = 0x9E3779B97F4A7C15


def e(x):
    """The unit character e(x) = exp(2 pi i x); accepts arrays."""
    return np.exp(2j * np.pi * np.asarray(x, dtype=np.float64))


def _mix64(z):
    """splitmix64 finalizer on uint64 arrays (or scalars)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _digits(seed, positions, alphabet):
    """PRF digits in {0..alphabet-1} at signed integer positions."""
    pos = np.asarray(positions, dtype=np.int64).astype(np.uint64)
    h = _mix64(np.uint64(seed & _U64) ^ _mix64(pos + np.uint64(_SM64_GAMMA)))
    return (h % np.uint64(alphabet)).astype(np.int64)


class SeedStream:
    """Deterministic splitmix64 stream used for point sampling."""

    def __init__(self, seed):
        self.state = int(seed) & _U64

    def next_u64(self):
        self.state = (self.state + _SM64_GAMMA) & _U64
        return int(_mix64(np.uint64(self.state)))

    def next_unit(self):
        """Dyadic uniform in [0,1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53


# ---------------------------------------------------------------------------
# Observables


class Observable:
    bound = 1.0

    def evaluate(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.evaluate(x)


class Constant(Observable):
    def __init__(self, value):
        self.value = complex(value)
        self.bound = abs(self.value)

    def evaluate(self, x):
        return self.value


class Character(Observable):
    """e(<freq, coords>) on circle/torus/skew coordinates."""

    def __init__(self, freq):
        self.freq = freq
        self.bound = 1.0

    def evaluate(self, x):
        if isinstance(x, tuple):
            phase = sum(float(m) * float(c) for m, c in zip(self.freq, x))
        else:
            phase = float(self.freq) * float(x)
        return complex(e(phase))


class CoordinateIndicator(Observable):
    """Indicator of lo <= coord < hi on one circle coordinate."""

    def __init__(self, lo, hi, coord=0):
        if not (0 <= lo < hi <= 1):
            raise ValueError("need 0 <= lo < hi <= 1")
        self.lo, self.hi, self.coord = float(lo), float(hi), int(coord)
        self.bound = 1.0

    def evaluate(self, x):
        v = float(x[self.coord]) if isinstance(x, tuple) else float(x)
        return 1.0 + 0j if self.lo <= v < self.hi else 0j


class BernoulliMeanZero(Observable):
    """Zeroth coordinate minus the alphabet mean; mean-zero by design."""

    def __init__(self, alphabet_size=2):
        self.alphabet_size = int(alphabet_size)
        self.mean = (self.alphabet_size - 1) / 2.0
        self.bound = self.mean if self.mean > 0 else 1.0

    def evaluate(self, x):
        seed, offset = x
        d = int(_digits(seed, np.array([offset]), self.alphabet_size)[0])
        return complex(d - self.mean)


class FiniteTable(Observable):
    """Arbitrary table of complex values indexed by the cycle residue."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=np.complex128)
        self.bound = float(np.max(np.abs(self.values))) if len(self.values) else 0.0

    def evaluate(self, x):
        return complex(self.values[int(x)])


# ---------------------------------------------------------------------------
# Systems


class MPSystem:
    kind = "abstract"
    bits = DEFAULT_BITS

    def power_apply(self, k, x):
        raise NotImplementedError

    def sample_points(self, count, seed):
        raise NotImplementedError

    def orbit_observe(self, obs, x, ks):
        """Vector of obs(T^k x) over an int64 array of exponents.

        Generic scalar fallback; subclasses install fast paths.
        """
        return np.array(
            [obs.evaluate(self.power_apply(int(k), x)) for k in ks],
            dtype=np.complex128,
        )


class CircleRotation(MPSystem):
    kind = "circle_rotation"

    def __init__(self, theta, bits=DEFAULT_BITS):
        self.bits = bits
        self.theta = theta if hasattr(theta, "precision") else real(theta, bits)
        self._theta_q = _to_mpq(self.theta)

    def power_apply(self, k, x):
        v = _to_mpq(x) + int(k) * self._theta_q
        return real(v - (v.numerator // v.denominator), self.bits)

    def sample_points(self, count, seed):
        stream = SeedStream(seed)
        return [real(stream.next_unit(), self.bits) for _ in range(count)]

    def orbit_fracs(self, x, ks):
        tf = float(self.theta)
        return np.mod(float(x) + tf * np.asarray(ks, dtype=np.float64), 1.0)

    def orbit_observe(self, obs, x, ks):
        if isinstance(obs, Constant):
            return np.full(len(ks), obs.value, dtype=np.complex128)
        if isinstance(obs, Character):
            return e(float(obs.freq) * self.orbit_fracs(x, ks))
        if isinstance(obs, CoordinateIndicator):
            fr = self.orbit_fracs(x, ks)
            return ((fr >= obs.lo) & (fr < obs.hi)).astype(np.complex128)
        return super().orbit_observe(obs, x, ks)


class TorusTranslation(MPSystem):
    kind = "torus_translation"

    def __init__(self, thetas, bits=DEFAULT_BITS):
        self.bits = bits
        self.thetas = tuple(
            t if hasattr(t, "precision") else real(t, bits) for t in thetas
        )
        self._qs = tuple(_to_mpq(t) for t in self.thetas)
        self.dim = len(self.thetas)

    def power_apply(self, k, x):
        out = []
        for xi, tq in zip(x, self._qs):
            v = _to_mpq(xi) + int(k) * tq
            out.append(real(v - (v.numerator // v.denominator), self.bits))
        return tuple(out)

    def sample_points(self, count, seed):
        stream = SeedStream(seed)
        return [
            tuple(real(stream.next_unit(), self.bits) for _ in range(self.dim))
            for _ in range(count)
        ]

    def orbit_fracs(self, x, ks):
        ks = np.asarray(ks, dtype=np.float64)
        cols = [np.mod(float(xi) + float(t) * ks, 1.0) for xi, t in zip(x, self.thetas)]
        return np.stack(cols, axis=1)

    def orbit_observe(self, obs, x, ks):
        if isinstance(obs, Constant):
            return np.full(len(ks), obs.value, dtype=np.complex128)
        if isinstance(obs, Character):
            fr = self.orbit_fracs(x, ks)
            phase = fr @ np.asarray(obs.freq, dtype=np.float64)
            return e(phase)
        if isinstance(obs, CoordinateIndicator):
            fr = self.orbit_fracs(x, ks)[:, obs.coord]
            return ((fr >= obs.lo) & (fr < obs.hi)).astype(np.complex128)
        return super().orbit_observe(obs, x, ks)


class SkewProduct(MPSystem):
    """T(x, y) = (x + theta, y + x) on the 2-torus.

    T^k(x, y) = (x + k theta, y + k x + k(k-1)/2 theta), valid for all
    signed k.  The k(k-1)/2 theta term outgrows float64 fast, so orbit
    coordinates are computed by exact rational arithmetic per step.
    """

    kind = "skew_product"

    def __init__(self, theta, bits=DEFAULT_BITS):
        self.bits = bits
        self.theta = theta if hasattr(theta, "precision") else real(theta, bits)
        self._theta_q = _to_mpq(self.theta)

    def power_apply(self, k, x):
        k = int(k)
        xq, yq = _to_mpq(x[0]), _to_mpq(x[1])
        x1 = xq + k * self._theta_q
        y1 = yq + k * xq + (k * (k - 1) // 2) * self._theta_q
        x1 -= x1.numerator // x1.denominator
        y1 -= y1.numerator // y1.denominator
        return (real(x1, self.bits), real(y1, self.bits))

    def sample_points(self, count, seed):
        stream = SeedStream(seed)
        return [
            (real(stream.next_unit(), self.bits), real(stream.next_unit(), self.bits))
            for _ in range(count)
        ]

    def orbit_coords(self, x, ks):
        xq, yq = _to_mpq(x[0]), _to_mpq(x[1])
        tq = self._theta_q
        xs = np.empty(len(ks), dtype=np.float64)
        ys = np.empty(len(ks), dtype=np.float64)
        for i, k in enumerate(ks):
            k = int(k)
            x1 = xq + k * tq
            y1 = yq + k * xq + (k * (k - 1) // 2) * tq
            xs[i] = float(x1 - x1.numerator // x1.denominator)
            ys[i] = float(y1 - y1.numerator // y1.denominator)
        return xs, ys

    def orbit_observe(self, obs, x, ks):
        if isinstance(obs, Constant):
            return np.full(len(ks), obs.value, dtype=np.complex128)
        if isinstance(obs, Character):
            xs, ys = self.orbit_coords(x, ks)
            m1, m2 = obs.freq
            return e(float(m1) * xs + float(m2) * ys)
        return super().orbit_observe(obs, x, ks)


class BernoulliShift(MPSystem):
    """Two-sided iid shift; points are (seed, offset) PRF windows.

    Coordinate j of the point is PRF(seed, offset + j), so T^k just
    advances the offset.  This gives exact invertible shift semantics
    without storing sequences; iid-uniform statistics hold at PRF
    quality, which is noted rather than proven.
    """

    kind = "bernoulli_shift"

    def __init__(self, alphabet_size=2, prf_seed=0):
        self.alphabet_size = int(alphabet_size)
        self.prf_seed = int(prf_seed)

    def power_apply(self, k, x):
        seed, offset = x
        return (seed, offset + int(k))

    def sample_points(self, count, seed):
        stream = SeedStream(seed)
        return [(stream.next_u64(), 0) for _ in range(count)]

    def orbit_observe(self, obs, x, ks):
        if isinstance(obs, Constant):
            return np.full(len(ks), obs.value, dtype=np.complex128)
        if isinstance(obs, BernoulliMeanZero):
            seed, offset = x
            d = _digits(seed, offset + np.asarray(ks, dtype=np.int64), obs.alphabet_size)
            return (d - obs.mean).astype(np.complex128)
        return super().orbit_observe(obs, x, ks)


class FiniteCycle(MPSystem):
    """Rotation by `step` on Z/modulus; step=1 is the canonical cycle."""

    kind = "finite_cycle"

    def __init__(self, modulus, step=1):
        if modulus < 1:
            raise ValueError("modulus must be >= 1")
        self.modulus = int(modulus)
        self.step = int(step) % self.modulus

    def power_apply(self, k, x):
        return (int(x) + int(k) * self.step) % self.modulus

    def sample_points(self, count, seed):
        stream = SeedStream(seed)
        return [stream.next_u64() % self.modulus for _ in range(count)]

    def orbit_indices(self, x, ks):
        ks = np.asarray(ks, dtype=np.int64)
        if len(ks) and int(np.max(np.abs(ks))) * max(self.step, 1) >= 2**62:
            return np.array(
                [self.power_apply(int(k), x) for k in ks], dtype=np.int64
            )
        return (int(x) + ks * self.step) % self.modulus

    def orbit_observe(self, obs, x, ks):
        if isinstance(obs, Constant):
            return np.full(len(ks), obs.value, dtype=np.complex128)
        if isinstance(obs, FiniteTable):
            return obs.values[self.orbit_indices(x, ks)]
        return super().orbit_observe(obs, x, ks)


class ProductSystem(MPSystem):
    """Product measure system; T^k acts componentwise."""

    kind = "product"

    def __init__(self, components):
        self.components = list(components)

    def power_apply(self, k, x):
        return tuple(s.power_apply(k, xi) for s, xi in zip(self.components, x))

    def sample_points(self, count, seed):
        stream = SeedStream(seed)
        seeds = [stream.next_u64() for _ in self.components]
        per = [s.sample_points(count, sd) for s, sd in zip(self.components, seeds)]
        return [tuple(col[i] for col in per) for i in range(count)]


def tuple_apply(systems, ks, x):
    """Apply T_1^{k_1} ... T_m^{k_m} to a shared point of commuting maps."""
    for system, k in zip(systems, ks):
        x = system.power_apply(k, x)
    return x


def power_apply(system, k, x):
    if abs(int(k)) > 2**62:
        raise OverflowError("orbit index beyond 2**62")
    return system.power_apply(int(k), x)


def observe(obs, x):
    return obs.evaluate(x)


def sample_points(system, count, seed):
    if count < 1:
        raise ValueError("count must be >= 1")
    return system.sample_points(count, seed)
