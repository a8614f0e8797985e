"""Average engine invariants: exact trivial cases, reproducibility,
variant cross-checks, and input validation."""

import numpy as np
import pytest
from gmpy2 import mpq

from ergolab.averages import (
    AverageSpec,
    avg_BAE_family,
    avg_linear_double,
    avg_multi_TC,
    avg_nc_double,
    lacunary_schedule,
    oscillation,
    sup_average_probe,
)
from ergolab.dynsys import (
    BernoulliMeanZero,
    BernoulliShift,
    Character,
    CircleRotation,
    Constant,
    FiniteCycle,
    FiniteTable,
    TorusTranslation,
)
from ergolab.precision import parse_real

ROT = CircleRotation(parse_real("sqrt(2)-1"))
CHARS = dict(f=Character(1), g=Character(-1))


def _spec(n_max=8192, system=ROT, variant_params=None, **kw):
    params = variant_params or {"alpha": 2, "beta": 1, "c": "51/50"}
    base = dict(
        system=system,
        params=params,
        schedule=lacunary_schedule(n_max),
        sample_count=3,
        seed=17,
    )
    base.update(CHARS)
    base.update(kw)
    return AverageSpec(**base)


def test_lacunary_schedule_shape():
    sched = lacunary_schedule(100000)
    assert sched[0] == 1 and sched[-1] == 100000
    assert all(b > a for a, b in zip(sched, sched[1:]))
    # ratio approaches 2^(1/8) once steps clear the dedup zone; the
    # final entry is n_max itself and may sit closer
    tail = [b / a for a, b in zip(sched[-10:-2], sched[-9:-1])]
    assert all(abs(r - 2 ** 0.125) < 0.01 for r in tail)


def test_constant_pair_is_exactly_one():
    spec = _spec(4096, f=Constant(1.0), g=Constant(1.0))
    ser = avg_nc_double(spec)
    assert np.all(ser.values == 1.0 + 0j)
    assert np.all(ser.dispersion == 0.0)


def test_threads_do_not_change_bits():
    a = avg_nc_double(_spec(20000, threads=1))
    b = avg_nc_double(_spec(20000, threads=8))
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.per_point, b.per_point)
    assert np.array_equal(a.flag_counts, b.flag_counts)


def test_prefix_schedule_reproduces_long_run():
    long = avg_nc_double(_spec(20000))
    short_sched = long.checkpoints[: len(long.checkpoints) // 2]
    short = avg_nc_double(_spec(20000, schedule=short_sched))
    assert np.array_equal(short.values, long.values[: len(short_sched)])


def test_values_bounded_by_observable_bounds():
    ser = avg_nc_double(_spec(8192))
    assert np.all(np.abs(ser.values) <= 1.0 + 1e-12)
    assert np.all(np.abs(ser.per_point) <= 1.0 + 1e-12)


def test_conjugate_pair_gives_conjugate_value():
    a = avg_nc_double(_spec(8192))
    b = avg_nc_double(_spec(8192, f=Character(-1), g=Character(1)))
    assert np.array_equal(a.values, np.conj(b.values))


def test_nc_validation():
    with pytest.raises(ValueError):
        avg_nc_double(_spec(variant_params={"alpha": 2, "beta": 2, "c": "51/50"}))
    with pytest.raises(ValueError):
        avg_nc_double(_spec(variant_params={"alpha": 0, "beta": 1, "c": "51/50"}))
    with pytest.raises(ValueError):
        avg_nc_double(_spec(variant_params={"alpha": 2, "beta": 1, "c": 3}))
    # the reflected pair beta = -alpha is the allowed equality
    avg_nc_double(_spec(2048, variant_params={"alpha": 1, "beta": -1, "c": "51/50"}))


def test_reflected_matches_linear_baseline_roughly():
    nc = avg_nc_double(_spec(20000, variant_params={"alpha": 1, "beta": -1, "c": "51/50"}))
    lin = avg_linear_double(_spec(20000, variant_params={"a": 1, "b": -1}))
    assert abs(nc.values[-1] - lin.values[-1]) < 0.05


def test_linear_diagonal_geometric_sum():
    # a = b = 1, f = g = character: the average telescopes to a geometric sum
    spec = _spec(4096, f=Character(1), g=Character(1), variant_params={"a": 1, "b": 1})
    ser = avg_linear_double(spec)
    pts = ROT.sample_points(spec.sample_count, spec.seed)
    th = float(ROT.theta)
    for i, x in enumerate(pts):
        z = np.exp(2j * np.pi * 2 * th)
        godd = np.exp(2j * np.pi * 2 * float(x)) * z * (z**4096 - 1) / (z - 1) / 4096
        assert abs(ser.per_point[i, -1] - godd) < 1e-10


def test_bae_degenerate_exactness():
    # c = 1, L = 1: every integer is in Lambda, so B and A coincide and
    # the sawtooth increments vanish identically
    prm = {"alpha": 2, "beta": 1, "c": 1}
    b = avg_BAE_family(_spec(4096, variant_params=prm), 1, "B")
    a = avg_BAE_family(_spec(4096, variant_params=prm), 1, "A")
    e = avg_BAE_family(_spec(4096, variant_params=prm), 1, "E")
    assert np.array_equal(b.values, a.values)
    assert np.all(e.values == 0)


def test_bae_ra_equals_ir_at_integer_ratio():
    prm = {"alpha": 2, "beta": 1, "c": "51/50"}
    ir = avg_BAE_family(_spec(20000, variant_params=prm), 50, "B", "ir")
    ra = avg_BAE_family(_spec(20000, variant_params=prm), 50, "B", "ra", p=2, q=1)
    assert np.array_equal(ir.values, ra.values)


def test_bae_trims_leading_empty_checkpoints():
    prm = {"alpha": 2, "beta": 1, "c": "51/50"}
    ser = avg_BAE_family(_spec(8192, variant_params=prm), 50, "B")
    assert ser.checkpoints[0] >= 50  # Lambda starts at floor(50 * 1^c)
    with pytest.raises(ValueError):
        avg_BAE_family(_spec(16, variant_params=prm), 50, "B")


def test_bae_ra_validation():
    prm = {"alpha": 2, "beta": 1, "c": "51/50"}
    with pytest.raises(ValueError):
        avg_BAE_family(_spec(variant_params=prm), 50, "B", "ra", p=3, q=1)
    with pytest.raises(ValueError):
        avg_BAE_family(_spec(variant_params=prm), 50, "B", "ra", p=4, q=2)
    with pytest.raises(ValueError):
        avg_BAE_family(_spec(variant_params=prm), 50, "X")


def test_tc_single_axis_equals_pair_average():
    # b pairs with f and d with g, mirroring alpha and beta
    prm = {"b": [2], "d": [1], "c": "51/50"}
    tc = avg_multi_TC(_spec(8192, variant_params=prm))
    nc = avg_nc_double(_spec(8192, variant_params={"alpha": 2, "beta": 1, "c": "51/50"}))
    assert np.array_equal(tc.values, nc.values)


def test_tc_torus_pair_matches_single_circle():
    t1 = TorusTranslation([parse_real("sqrt(2)-1"), 0])
    t2 = TorusTranslation([0, parse_real("sqrt(3)-1")])
    prm = {"b": [1, 0], "d": [2, 0], "c": "51/50"}
    pair = avg_multi_TC(
        _spec(
            8192,
            system=[t1, t2],
            variant_params=prm,
            f=Character((1, 0)),
            g=Character((-1, 0)),
        )
    )
    single = avg_nc_double(
        _spec(8192, variant_params={"alpha": 1, "beta": 2, "c": "51/50"})
    )
    # axis 2 is inert and the start point cancels between the two
    # characters, so the pair reduces to the circle case
    assert abs(pair.values[-1] - single.values[-1]) < 2**-20


def test_tc_dependence_validation():
    prm = {"b": [1, 1], "d": [1, 2], "c": "51/50"}
    t1 = TorusTranslation([parse_real("sqrt(2)-1"), 0])
    t2 = TorusTranslation([0, parse_real("sqrt(3)-1")])
    spec = _spec(
        2048, system=[t1, t2], variant_params=prm,
        f=Character((1, 0)), g=Character((0, 1)),
    )
    with pytest.raises(ValueError):
        avg_multi_TC(spec)
    avg_multi_TC(spec, allow_independent=True)  # exploratory escape hatch


def test_sup_probe_dominates_final_average():
    spec = _spec(8192, variant_params={"b": ["sqrt(2)"], "c": "51/50"})
    probe = sup_average_probe(spec)
    finals = np.abs(probe.series.per_point[:, -1])
    assert np.all(probe.per_point >= finals - 1e-15)
    assert probe.l2 >= 0


def test_oscillation_final_third():
    ser = avg_nc_double(_spec(20000))
    osc = oscillation(ser)
    vals = ser.values[min(2 * len(ser.values) // 3, len(ser.values) - 2):]
    want = max(abs(a - b) for a in vals for b in vals)
    assert osc == want


def test_oscillation_needs_three_checkpoints():
    ser = avg_nc_double(_spec(schedule=(100, 200)))
    with pytest.raises(ValueError):
        oscillation(ser)


def test_bernoulli_mean_zero_small():
    bs = BernoulliShift(2, prf_seed=0)
    spec = _spec(
        20000, system=bs, f=BernoulliMeanZero(2), g=BernoulliMeanZero(2),
        variant_params={"alpha": 2, "beta": 1, "c": "51/50"},
    )
    ser = avg_nc_double(spec)
    assert np.all(np.abs(ser.per_point[:, -1]) < 0.05)


def test_finite_cycle_fast_path_matches_generic():
    cyc = FiniteCycle(12)
    vals = np.exp(2j * np.pi * np.arange(12) / 12)
    spec = _spec(
        4096, system=cyc, f=FiniteTable(vals), g=FiniteTable(np.conj(vals)),
        variant_params={"alpha": 3, "beta": 2, "c": "51/50"},
    )
    ser = avg_nc_double(spec)
    # recompute one point the slow way
    x = cyc.sample_points(spec.sample_count, spec.seed)[0]
    from ergolab.precision import floor_pow_batch

    ns = np.arange(1, 4097, dtype=np.int64)
    kf, _ = floor_pow_batch(3, mpq(51, 50), ns)
    kg, _ = floor_pow_batch(2, mpq(51, 50), ns)
    f, g = FiniteTable(vals), FiniteTable(np.conj(vals))
    slow = np.mean([f(cyc.power_apply(int(a), x)) * g(cyc.power_apply(int(b), x))
                    for a, b in zip(kf, kg)])
    assert abs(ser.per_point[0, -1] - slow) < 1e-12
