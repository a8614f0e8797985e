"""Suspension of a system under the constant roof 1.

The flow moves the height coordinate and fires the base map once per
unit crossed: S^t(x, s) = (T^{floor(t+s)} x, {t+s}).  The m-parameter
version runs m commuting maps on a shared base point with one height
coordinate per axis.

Height arithmetic is exact rational throughout (times and heights are
converted to mpq), so the number of base firings is never off by one
from rounding; only the stored height is rounded back to mpfr.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dynsys import Observable, SeedStream
from .precision import DEFAULT_BITS, _to_mpq, real


@dataclass(frozen=True)
class FlowPoint:
    """Base point plus height(s); s is mpfr, or a tuple of them."""

    base: object
    s: object


class SuspensionFlow:
    """S over one base map, or over a tuple of commuting base maps."""

    def __init__(self, base, bits=DEFAULT_BITS):
        self.systems = list(base) if isinstance(base, (list, tuple)) else [base]
        self.m = len(self.systems)
        self.bits = bits

    def flow_apply(self, t, y):
        ts = tuple(t) if isinstance(t, (list, tuple)) else (t,)
        zs = y.s if isinstance(y.s, tuple) else (y.s,)
        if len(ts) != self.m or len(zs) != self.m:
            raise ValueError("time/height arity must match the number of maps")
        x = y.base
        heights = []
        for system, ti, zi in zip(self.systems, ts, zs):
            v = _to_mpq(ti) + _to_mpq(zi)
            j = v.numerator // v.denominator
            x = system.power_apply(j, x)
            heights.append(real(v - j, self.bits))
        return FlowPoint(x, heights[0] if self.m == 1 else tuple(heights))

    def sample_points(self, count, seed):
        stream = SeedStream(seed)
        bases = self.systems[0].sample_points(count, stream.next_u64())
        out = []
        for b in bases:
            if self.m == 1:
                out.append(FlowPoint(b, real(stream.next_unit(), self.bits)))
            else:
                out.append(
                    FlowPoint(
                        b,
                        tuple(
                            real(stream.next_unit(), self.bits)
                            for _ in range(self.m)
                        ),
                    )
                )
        return out


class LiftedObservable(Observable):
    """f~(x, s) = f(x): ignores the height coordinate."""

    def __init__(self, obs):
        self.base_obs = obs
        self.bound = obs.bound

    def evaluate(self, y):
        return self.base_obs.evaluate(y.base)


def lift_observable(obs):
    return LiftedObservable(obs)


def flow_apply(flow, t, y):
    return flow.flow_apply(t, y)
