"""Command line front end.

`ergolab run <config.json>` executes one experiment described by a
JSON config and writes two files per run: a CSV of checkpoint rows
with the fixed header N,value_re,value_im,dispersion,flags,ms and a
JSON sidecar holding the fully resolved config plus run metadata.
Re-running a sidecar (its `_meta` block is ignored on load) reproduces
the CSV byte for byte; the ms column stays 0 unless --timing is given,
and timed CSVs are by nature not reproducible.

`ergolab presets` lists built-in configs; `ergolab run preset:<name>`
runs one directly.  Exit codes: 0 success, 2 config or validation
error, 3 numeric failure, 4 expectation breach in --assert mode.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import gmpy2
import numpy as np

from . import __version__
from .averages import (
    AverageSpec,
    avg_BAE_family,
    avg_linear_double,
    avg_multi_TC,
    avg_nc_double,
    avg_W,
    lacunary_schedule,
    sup_average_probe,
)
from .diophantine import best_approx
from .dynsys import (
    BernoulliMeanZero,
    BernoulliShift,
    Character,
    CircleRotation,
    Constant,
    CoordinateIndicator,
    FiniteCycle,
    FiniteTable,
    ProductSystem,
    SkewProduct,
    TorusTranslation,
)
from .kernels import default_step_scale, kernel_params, vdc_check
from .limits import compare_limits, limit_irrational, limit_rational
from .precision import DEFAULT_BITS, parse_real
from .presets import preset_config, preset_description, preset_names

CSV_HEADER = "N,value_re,value_im,dispersion,flags,ms"

EXPERIMENTS = (
    "tb_direct",
    "tc_multi",
    "linear_baseline",
    "bae_family",
    "w_decay",
    "limit_compare",
    "equidistribution",
    "vdc_suite",
    "sup_probe",
)


class ConfigError(ValueError):
    pass


def _cnum(v, what):
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(v[0], v[1])
    raise ConfigError(f"{what} must be a number or [re, im] pair")


def build_observable(cfg):
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError("observable config must be an object with a kind")
    kind = cfg["kind"]
    if kind == "constant":
        return Constant(_cnum(cfg.get("value", 1.0), "constant value"))
    if kind == "character":
        freq = cfg["freq"]
        return Character(tuple(freq) if isinstance(freq, list) else int(freq))
    if kind == "coordinate_indicator":
        return CoordinateIndicator(cfg["lo"], cfg["hi"], cfg.get("coord", 0))
    if kind == "bernoulli_mean_zero":
        return BernoulliMeanZero(cfg.get("alphabet_size", 2))
    if kind == "finite_table":
        return FiniteTable([_cnum(v, "table entry") for v in cfg["values"]])
    raise ConfigError(f"unknown observable kind {kind!r}")


def build_system(cfg, bits=DEFAULT_BITS):
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError("system config must be an object with a kind")
    kind = cfg["kind"]
    if kind == "circle_rotation":
        return CircleRotation(parse_real(cfg["theta"], bits), bits)
    if kind == "torus_translation":
        thetas = [parse_real(t, bits) for t in cfg["thetas"]]
        return TorusTranslation(thetas, bits)
    if kind == "skew_product":
        return SkewProduct(parse_real(cfg["theta"], bits), bits)
    if kind == "bernoulli_shift":
        return BernoulliShift(cfg.get("alphabet_size", 2), cfg.get("prf_seed", 0))
    if kind == "finite_cycle":
        return FiniteCycle(cfg["modulus"], cfg.get("step", 1))
    if kind == "product":
        return ProductSystem([build_system(c, bits) for c in cfg["components"]])
    raise ConfigError(f"unknown system kind {kind!r}")


def resolve_config(raw):
    """Fill defaults and validate shape; returns a plain JSON-able dict."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = {k: v for k, v in raw.items() if k != "_meta"}
    exp = cfg.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(
            f"experiment must be one of {', '.join(EXPERIMENTS)}; got {exp!r}"
        )
    cfg.setdefault("name", exp)
    cfg.setdefault("params", {})
    cfg.setdefault("sample_count", 8)
    cfg.setdefault("seed", 2024)
    cfg.setdefault("lambda_root", 8)
    cfg.setdefault("precision_bits", DEFAULT_BITS)
    cfg.setdefault("threads", 1)
    if cfg.get("schedule") is None and cfg.get("n_max") is None:
        if exp not in ("vdc_suite",):
            raise ConfigError("config needs n_max or an explicit schedule")
    return cfg


def _schedule(cfg):
    if cfg.get("schedule"):
        return tuple(int(n) for n in cfg["schedule"])
    lam = None
    root = int(cfg.get("lambda_root", 8))
    if root != 8:
        gmpy2.get_context().precision = int(cfg["precision_bits"])
        lam = gmpy2.root(gmpy2.mpfr(2), root)
    return lacunary_schedule(int(cfg["n_max"]), lam, int(cfg["precision_bits"]))


def _make_spec(cfg, threads):
    bits = int(cfg["precision_bits"])
    if "systems" in cfg:
        system = [build_system(s, bits) for s in cfg["systems"]]
    else:
        system = build_system(cfg["system"], bits)
    f = build_observable(cfg["f"]) if "f" in cfg else None
    g = build_observable(cfg["g"]) if "g" in cfg else None
    return AverageSpec(
        system=system,
        f=f,
        g=g,
        params=dict(cfg["params"]),
        schedule=_schedule(cfg),
        sample_count=int(cfg["sample_count"]),
        seed=int(cfg["seed"]),
        threads=threads,
        bits=bits,
    )


def equidistribution_report(alpha, c, N, bins=64, k=None, s=None, bits=DEFAULT_BITS):
    """Histogram diagnostics for the fractional parts of alpha n^c.

    Star discrepancy is estimated at the bin edges, so it carries an
    O(1/bins) resolution floor.  With k (and s) given, also reports
    the hit frequency of the union [0,1/k] u [1-s-1/k, 1-s+1/k] u
    [1-1/k, 1) against its measure.  A sequence stuck in a single bin
    is flagged degenerate (alpha=1, c=1 is the canonical case).
    """
    N, bins = int(N), int(bins)
    if N < 1 or bins < 2:
        raise ConfigError("need N >= 1 and bins >= 2")
    af = float(parse_real(alpha, bits))
    cf = float(parse_real(c, bits))
    if not 0 < cf < 2:
        raise ConfigError("exponent c must lie in (0, 2)")
    ns = np.arange(1, N + 1, dtype=np.float64)
    v = af * ns**cf
    fr = v - np.floor(v)
    fr = np.where(fr >= 1.0, 0.0, fr)
    hist = np.histogram(fr, bins=bins, range=(0.0, 1.0))[0]
    cum = np.cumsum(hist) / N
    edges = np.arange(1, bins + 1) / bins
    star = float(np.max(np.abs(cum - edges)))
    report = {
        "N": N,
        "bins": bins,
        "star_discrepancy": star,
        "degenerate": bool(int((hist > 0).sum()) == 1),
        "hist": hist.tolist(),
    }
    if k is not None:
        if s is None:
            raise ConfigError("interval check needs both k and s")
        k, s = int(k), float(s)
        if k < 3 or not 0.0 <= s < 1.0:
            raise ConfigError("need k >= 3 and s in [0, 1)")
        pieces = [(0.0, 1.0 / k), (1 - s - 1.0 / k, 1 - s + 1.0 / k), (1 - 1.0 / k, 1.0)]
        pieces = [(max(a, 0.0), min(b, 1.0)) for a, b in pieces if b > 0.0 and a < 1.0]
        pieces.sort()
        merged = []
        for a, b in pieces:
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        hit = np.zeros(N, dtype=bool)
        for a, b in merged:
            hit |= (fr >= a) & (fr < b)
        report["ik_k"] = k
        report["ik_s"] = s
        report["ik_hit_rate"] = float(hit.sum()) / N
        report["ik_expected"] = math.fsum(b - a for a, b in merged)
    return report


def _series_rows(series, ms=0):
    rows = []
    for i, N in enumerate(series.checkpoints):
        v = series.values[i]
        rows.append(
            (
                int(N),
                float(v.real),
                float(v.imag),
                float(series.dispersion[i]),
                int(series.flag_counts[i]),
                ms,
            )
        )
    return rows


def _resolve_L(prm, bits):
    if "L" in prm:
        return parse_real(prm["L"], bits)
    if "k" in prm:
        gamma = prm.get("gamma")
        if gamma is None:
            gamma = parse_real(prm["alpha"], bits) / parse_real(prm["beta"], bits)
        else:
            gamma = parse_real(gamma, bits)
        return default_step_scale(int(prm["k"]), gamma, parse_real(prm["beta"], bits))
    raise ConfigError("params need L or a scale factor k")


def _vdc_rows(cfg, ms):
    prm = cfg["params"]
    count = int(prm.get("count", 200))
    smax = int(prm.get("smax", 32))
    hmax = int(prm.get("hmax", 8))
    if count < 0 or smax < 1 or hmax < 1:
        raise ConfigError("vdc_suite needs count >= 0, smax >= 1, hmax >= 1")
    lhs, rhs = vdc_check({y: 1.0 for y in range(1, 11)}, list(range(1, 6)))
    rows = [(0, float(lhs), float(rhs), 0.0, 0, ms)]
    rng = np.random.default_rng(int(cfg["seed"]))
    for i in range(1, count + 1):
        ssz = int(rng.integers(1, smax + 1))
        support = rng.choice(np.arange(-64, 65), size=ssz, replace=False)
        re = rng.uniform(-1, 1, ssz)
        im = rng.uniform(-1, 1, ssz)
        g = {}
        for y, a, b in zip(support, re, im):
            z = complex(a, b)
            g[int(y)] = z / max(1.0, abs(z))
        hsz = int(rng.integers(1, hmax + 1))
        H = [int(h) for h in rng.choice(np.arange(-16, 17), size=hsz, replace=False)]
        lhs, rhs = vdc_check(g, H)
        rows.append((i, float(lhs), float(rhs), 0.0, 0, ms))
    return rows


def run_experiment(cfg, out_dir, threads=None, timing=False):
    """Execute one resolved config; write CSV + sidecar into out_dir.

    Returns a dict with the rows and the output paths.  The caller
    maps exceptions to exit codes.
    """
    cfg = resolve_config(cfg)
    if threads is not None:
        cfg["threads"] = int(threads)
    eff_threads = int(cfg["threads"])
    bits = int(cfg["precision_bits"])
    exp = cfg["experiment"]
    extras = {}
    t0 = time.monotonic()

    if exp in ("tb_direct", "linear_baseline", "tc_multi", "sup_probe"):
        spec = _make_spec(cfg, eff_threads)
        if exp == "tb_direct":
            series = avg_nc_double(spec)
        elif exp == "linear_baseline":
            series = avg_linear_double(spec)
        elif exp == "tc_multi":
            series = avg_multi_TC(
                spec, allow_independent=bool(cfg["params"].get("allow_independent"))
            )
        else:
            probe = sup_average_probe(spec)
            series = probe.series
            extras["sup_per_point"] = [float(v) for v in probe.per_point]
            extras["sup_l2"] = float(probe.l2)
        rows = _series_rows(series)
        extras["series_meta"] = series.meta
    elif exp == "bae_family":
        prm = cfg["params"]
        spec = _make_spec(cfg, eff_threads)
        series = avg_BAE_family(
            spec,
            _resolve_L(prm, bits),
            prm["variant"],
            prm.get("case", "ir"),
            prm.get("p"),
            prm.get("q"),
        )
        rows = _series_rows(series)
        extras["series_meta"] = series.meta
    elif exp == "w_decay":
        prm = cfg["params"]
        kp = kernel_params(prm.get("c", "51/50"), bits)
        gamma = parse_real(prm["gamma"], bits)
        L = _resolve_L(prm, bits)
        rows = []
        steps = []
        for N in _schedule(cfg):
            conv = best_approx(gamma, N)
            wspec = AverageSpec(
                system=build_system(cfg["system"], bits),
                f=build_observable(cfg["f"]),
                g=build_observable(cfg["g"]),
                params=dict(prm),
                schedule=(int(N),),
                sample_count=int(cfg["sample_count"]),
                seed=int(cfg["seed"]),
                threads=eff_threads,
                bits=bits,
            )
            res = avg_W(wspec, kp, conv, L)
            disp = float(max(abs(abs(w) - res.l1) for w in res.per_point))
            rows.append((int(N), float(res.l1), 0.0, disp, res.meta["flag_count"], 0))
            steps.append(
                {"N": int(N), "P_N": int(conv.p), "Q_N": int(conv.q), "M": res.meta["M"]}
            )
        extras["w_meta"] = {"L": float(L), "steps": steps}
        extras["columns"] = "value_re holds the sample L1 of |W|; value_im is 0"
    elif exp == "limit_compare":
        prm = cfg["params"]
        spec = _make_spec(cfg, eff_threads)
        series = avg_nc_double(spec)
        system = spec.system
        points = system.sample_points(spec.sample_count, spec.seed)
        grid_G = int(prm.get("grid_G", 512))
        inner_N = int(prm.get("inner_N", 100000))
        diag = {}
        vals = []
        for x in points:
            if "p" in prm or "q" in prm:
                vals.append(
                    limit_rational(
                        system, spec.f, spec.g, prm["p"], prm["q"], x,
                        inner_N=inner_N, grid_G=grid_G, bits=bits, diag=diag,
                    )
                )
            else:
                vals.append(
                    limit_irrational(
                        system, spec.f, spec.g, prm["gamma"], x,
                        inner_N=inner_N, grid_G=grid_G, bits=bits, diag=diag,
                    )
                )
        rhs = complex(
            math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals)
        ) / len(vals)
        report = compare_limits(
            series, rhs, diag.get("quadrature_points", grid_G), diag.get("inner_N", 0)
        )
        rows = _series_rows(series)
        extras["series_meta"] = series.meta
        extras["limit_report"] = {
            "lhs_re": report.lhs_value.real,
            "lhs_im": report.lhs_value.imag,
            "rhs_re": report.rhs_value.real,
            "rhs_im": report.rhs_value.imag,
            "abs_diff": report.abs_diff,
            "quadrature_points": report.quadrature_points,
            "inner_N": report.inner_N,
            "per_point_abs_diff": [
                abs(series.per_point[i, -1] - vals[i]) for i in range(len(vals))
            ],
            "diag": diag,
        }
    elif exp == "equidistribution":
        prm = cfg["params"]
        rows = []
        reports = []
        for N in _schedule(cfg):
            rep = equidistribution_report(
                prm["alpha"], prm.get("c", 1), N, prm.get("bins", 64),
                prm.get("k"), prm.get("s"), bits,
            )
            rate = rep.get("ik_hit_rate", 0.0)
            gap = abs(rate - rep["ik_expected"]) if "ik_hit_rate" in rep else 0.0
            rows.append(
                (int(N), rep["star_discrepancy"], rate, gap,
                 1 if rep["degenerate"] else 0, 0)
            )
            reports.append(rep)
        extras["equidistribution"] = reports
        extras["columns"] = (
            "value_re is star discrepancy, value_im the interval hit rate, "
            "flags marks a degenerate sequence"
        )
    elif exp == "vdc_suite":
        rows = _vdc_rows(cfg, 0)
        extras["columns"] = (
            "value_re is the squared-sum side, value_im the differenced bound; "
            "row 0 is the fixed worked example"
        )
    else:
        raise ConfigError(f"unhandled experiment {exp!r}")

    elapsed_ms = int((time.monotonic() - t0) * 1000)
    if timing:
        rows = [r[:5] + (elapsed_ms,) for r in rows]
    for r in rows:
        if not all(math.isfinite(v) for v in r[1:4]):
            raise ArithmeticError(f"non-finite value in row N={r[0]}")

    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(out_dir, cfg["name"])
    csv_path = base + ".csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for N, vr, vi, disp, flags, ms in rows:
            fh.write(f"{N},{vr!r},{vi!r},{disp!r},{flags},{ms}\n")
    sidecar = dict(cfg)
    sidecar["_meta"] = {
        "schedule": [int(n) for n in _schedule(cfg)] if exp != "vdc_suite" else [],
        "versions": {
            "ergolab": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "gmpy2": gmpy2.version(),
        },
        "elapsed_ms": elapsed_ms,
        **extras,
    }
    json_path = base + ".json"
    with open(json_path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return {"rows": rows, "csv": csv_path, "sidecar": json_path, "config": cfg}


def apply_set(cfg, assignment):
    """Apply one KEY=VALUE override; dotted keys descend into objects."""
    if "=" not in assignment:
        raise ConfigError(f"--set needs KEY=VALUE, got {assignment!r}")
    key, _, text = assignment.partition("=")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    node = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot descend into {part!r} in {key!r}")
    node[parts[-1]] = value


def check_expectations(name, rows, table):
    """Compare final rows against the named expectation entries.

    Each entry: {"row": index, "field": column or "abs", "expect":
    number or [re, im], "tol": bound}.  Returns (all_ok, lines).
    """
    if name not in table:
        raise ConfigError(f"no expectations recorded for {name!r}")
    cols = {"N": 0, "value_re": 1, "value_im": 2, "dispersion": 3, "flags": 4}
    ok = True
    lines = []
    for chk in table[name]:
        idx = int(chk.get("row", -1))
        row = rows[idx]
        field = chk["field"]
        tol = float(chk["tol"])
        if field == "abs":
            want = _cnum(chk["expect"], "expect")
            got = complex(row[1], row[2])
            delta = abs(got - want)
        else:
            if field not in cols:
                raise ConfigError(f"unknown assert field {field!r}")
            want = float(chk["expect"])
            got = float(row[cols[field]])
            delta = abs(got - want)
        good = delta <= tol
        ok &= good
        lines.append(
            f"{'PASS' if good else 'FAIL'} {name}[{idx}].{field}: "
            f"|{got} - {want}| = {delta:.3g} (tol {tol:g})"
        )
    return ok, lines


def _load_config(token):
    if token.startswith("preset:"):
        return preset_config(token[len("preset:"):])
    with open(token) as fh:
        return json.load(fh)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="ergolab")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one experiment config")
    runp.add_argument("config", help="path to a config JSON, or preset:<name>")
    runp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    runp.add_argument("--assert", dest="assert_file", metavar="EXPECTATIONS_JSON")
    runp.add_argument("--threads", type=int, default=None)
    runp.add_argument("--out", default="results")
    runp.add_argument("--timing", action="store_true")
    lsp = sub.add_parser("presets", help="list built-in configs")
    lsp.add_argument("--emit", metavar="NAME", help="print one config as JSON")
    args = parser.parse_args(argv)

    if args.command == "presets":
        try:
            if args.emit:
                print(json.dumps(preset_config(args.emit), indent=2, sort_keys=True))
            else:
                for name in preset_names():
                    print(f"{name:26s} {preset_description(name)}")
            return 0
        except KeyError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2

    threads = args.threads
    if threads is None and os.environ.get("ERGOLAB_THREADS"):
        threads = int(os.environ["ERGOLAB_THREADS"])
    try:
        cfg = _load_config(args.config)
        for assignment in args.set:
            apply_set(cfg, assignment)
        result = run_experiment(cfg, args.out, threads, args.timing)
    except (ConfigError, KeyError, TypeError, json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3

    last = result["rows"][-1]
    print(
        f"{result['config']['name']}: {len(result['rows'])} rows, "
        f"final N={last[0]} value=({last[1]:.6g}, {last[2]:.6g}) -> {result['csv']}"
    )
    if args.assert_file:
        try:
            with open(args.assert_file) as fh:
                table = json.load(fh)
            ok, lines = check_expectations(
                result["config"]["name"], result["rows"], table
            )
        except (ConfigError, KeyError, TypeError, json.JSONDecodeError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        for line in lines:
            print(line)
        if not ok:
            return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
