"""Built-in experiment configurations.

Each preset is a complete run config: `ergolab run preset:<name>`
executes it directly, and `ergolab presets --emit <name>` prints the
JSON for editing.  The fixed finite-cycle tables below are arbitrary
1-bounded complex values, frozen so preset outputs are reproducible.
"""

from __future__ import annotations

import copy

_CYCLE12_F = [
    [-0.5520683525822269, -0.07884513793476454],
    [-0.5613913475696866, 0.34636743010722265],
    [-0.30078175457678824, -0.2671462182206242],
    [0.15535671907469895, 0.11463534064358316],
    [-0.8497469153234883, 0.5271908382153625],
    [-0.09980299337302427, 0.09994979930900619],
    [0.46381415565329975, 0.3549465612007175],
    [0.36151104286499475, 0.029407454668436864],
    [-0.683851877622822, 0.0017442775081169181],
    [0.3633481534065336, 0.8727372804547042],
    [0.019818076974912464, 0.3205305032855851],
    [0.5127414299669459, 0.35838446626540904],
]

_CYCLE12_G = [
    [0.5180888547154557, -0.44316506178975895],
    [-0.6487912302168531, -0.2459676984810613],
    [0.2682010153030295, -0.09802515398507701],
    [0.6728087362824837, -0.2887036197762882],
    [0.03646310884445476, -0.2181857172567442],
    [-0.5068812011832683, 0.31542303191721766],
    [-0.09216649186931078, -0.6878720089496801],
    [0.2899807711884362, -0.3127668618019822],
    [-0.42305586592566263, 0.3817547275665448],
    [0.7535068689027559, 0.657440034160048],
    [-0.15272206665387988, 0.26539709120807564],
    [-0.7317854467004038, 0.21019072165783428],
]

_ROTATION = {"kind": "circle_rotation", "theta": "sqrt(2)-1"}
_CHAR_PAIR = {
    "f": {"kind": "character", "freq": 1},
    "g": {"kind": "character", "freq": -1},
}

PRESETS = {
    "trivial_ones": {
        "description": "constant observables; every checkpoint is exactly 1",
        "config": {
            "experiment": "tb_direct",
            "system": _ROTATION,
            "f": {"kind": "constant", "value": 1.0},
            "g": {"kind": "constant", "value": 1.0},
            "params": {"alpha": 2, "beta": 1, "c": "51/50"},
            "n_max": 4096,
            "sample_count": 2,
        },
    },
    "tb_rotation_char": {
        "description": "rotation characters along floor(2 n^1.02), floor(n^1.02)",
        "config": {
            "experiment": "tb_direct",
            "system": _ROTATION,
            **_CHAR_PAIR,
            "params": {"alpha": 2, "beta": 1, "c": "51/50"},
            "n_max": 1000000,
        },
    },
    "tb_rotation_ratio": {
        "description": "same ratio as tb_rotation_char via alpha=4, beta=2",
        "config": {
            "experiment": "tb_direct",
            "system": _ROTATION,
            **_CHAR_PAIR,
            "params": {"alpha": 4, "beta": 2, "c": "51/50"},
            "n_max": 1000000,
        },
    },
    "tb_finite_cycle": {
        "description": "cycle of 12 states with fixed full tables, ratio 3/2",
        "config": {
            "experiment": "tb_direct",
            "system": {"kind": "finite_cycle", "modulus": 12},
            "f": {"kind": "finite_table", "values": _CYCLE12_F},
            "g": {"kind": "finite_table", "values": _CYCLE12_G},
            "params": {"alpha": 3, "beta": 2, "c": "51/50"},
            "n_max": 1000000,
            "sample_count": 4,
        },
    },
    "tb_bernoulli_zero": {
        "description": "mean-zero digit observables on the 2-shift; limit is 0",
        "config": {
            "experiment": "tb_direct",
            "system": {"kind": "bernoulli_shift", "alphabet_size": 2},
            "f": {"kind": "bernoulli_mean_zero", "alphabet_size": 2},
            "g": {"kind": "bernoulli_mean_zero", "alphabet_size": 2},
            "params": {"alpha": 2, "beta": 1, "c": "51/50"},
            "n_max": 1000000,
        },
    },
    "tb_skew": {
        "description": "skew product over the rotation, vertical character",
        "config": {
            "experiment": "tb_direct",
            "system": {"kind": "skew_product", "theta": "sqrt(2)-1"},
            "f": {"kind": "character", "freq": [0, 1]},
            "g": {"kind": "character", "freq": [0, -1]},
            "params": {"alpha": 2, "beta": 1, "c": "51/50"},
            "n_max": 131072,
            "sample_count": 4,
        },
    },
    "nc_reflect": {
        "description": "reflected pair alpha=1, beta=-1 along n^1.02",
        "config": {
            "experiment": "tb_direct",
            "system": _ROTATION,
            **_CHAR_PAIR,
            "params": {"alpha": 1, "beta": -1, "c": "51/50"},
            "n_max": 1000000,
        },
    },
    "linear_reflect": {
        "description": "linear baseline for the reflected pair (a=1, b=-1)",
        "config": {
            "experiment": "linear_baseline",
            "system": _ROTATION,
            **_CHAR_PAIR,
            "params": {"a": 1, "b": -1, "d": 0},
            "n_max": 1000000,
        },
    },
    "bae_rotation_ir_B": {
        "description": "indicator-weighted flow average, irrational ratio",
        "config": {
            "experiment": "bae_family",
            "system": _ROTATION,
            **_CHAR_PAIR,
            "params": {
                "alpha": 2,
                "beta": 1,
                "c": "51/50",
                "L": 50,
                "variant": "B",
                "case": "ir",
            },
            "n_max": 100000,
            "sample_count": 4,
        },
    },
    "bae_rotation_ir_A": {
        "description": "uniformly weighted flow average, irrational ratio",
        "config": {
            "experiment": "bae_family",
            "system": _ROTATION,
            **_CHAR_PAIR,
            "params": {
                "alpha": 2,
                "beta": 1,
                "c": "51/50",
                "L": 50,
                "variant": "A",
                "case": "ir",
            },
            "n_max": 100000,
            "sample_count": 4,
        },
    },
    "bae_rotation_ir_E": {
        "description": "sawtooth-increment weighted flow average",
        "config": {
            "experiment": "bae_family",
            "system": _ROTATION,
            **_CHAR_PAIR,
            "params": {
                "alpha": 2,
                "beta": 1,
                "c": "51/50",
                "L": 50,
                "variant": "E",
                "case": "ir",
            },
            "n_max": 100000,
            "sample_count": 4,
        },
    },
    "bae_rotation_ra": {
        "description": "indicator-weighted flow average at rational ratio 2/1",
        "config": {
            "experiment": "bae_family",
            "system": _ROTATION,
            **_CHAR_PAIR,
            "params": {
                "alpha": 2,
                "beta": 1,
                "c": "51/50",
                "L": 50,
                "variant": "B",
                "case": "ra",
                "p": 2,
                "q": 1,
            },
            "n_max": 100000,
            "sample_count": 4,
        },
    },
    "w_decay": {
        "description": "kernel-weighted average L1 across a dyadic range of N",
        "config": {
            "experiment": "w_decay",
            "system": _ROTATION,
            **_CHAR_PAIR,
            "params": {"beta": 1, "gamma": "sqrt(2)", "c": "51/50", "k": 10},
            "schedule": [2 ** j for j in range(10, 21)],
            "sample_count": 4,
        },
    },
    "limit_compare_rational": {
        "description": "cycle-of-12 direct average against the ratio-3/2 formula",
        "config": {
            "experiment": "limit_compare",
            "system": {"kind": "finite_cycle", "modulus": 12},
            "f": {"kind": "finite_table", "values": _CYCLE12_F},
            "g": {"kind": "finite_table", "values": _CYCLE12_G},
            "params": {
                "alpha": 3,
                "beta": 2,
                "c": "51/50",
                "p": 3,
                "q": 2,
                "grid_G": 512,
            },
            "n_max": 1000000,
            "sample_count": 4,
        },
    },
    "limit_compare_irrational": {
        "description": "rotation direct average against the ratio-2 integral formula",
        "config": {
            "experiment": "limit_compare",
            "system": _ROTATION,
            **_CHAR_PAIR,
            "params": {
                "alpha": 2,
                "beta": 1,
                "c": "51/50",
                "gamma": 2,
                "inner_N": 100000,
                "grid_G": 512,
            },
            "n_max": 1000000,
        },
    },
    "equidistribution_nc": {
        "description": "fractional parts of n^1.02: discrepancy per N",
        "config": {
            "experiment": "equidistribution",
            "params": {"alpha": 1, "c": "51/50", "bins": 100},
            "schedule": [10000, 100000, 1000000],
        },
    },
    "equidistribution_linear": {
        "description": "fractional parts of sqrt(2) n: discrepancy per N",
        "config": {
            "experiment": "equidistribution",
            "params": {"alpha": "sqrt(2)", "c": 1, "bins": 100},
            "schedule": [10000, 100000, 1000000],
        },
    },
    "vdc_suite": {
        "description": "differencing inequality on random windows plus worked case",
        "config": {
            "experiment": "vdc_suite",
            "params": {"count": 200, "smax": 32, "hmax": 8},
            "seed": 2024,
        },
    },
    "sup_probe": {
        "description": "running sup of single averages along floor(sqrt(2) n^1.02)",
        "config": {
            "experiment": "sup_probe",
            "system": _ROTATION,
            "f": {"kind": "character", "freq": 1},
            "params": {"b": ["sqrt(2)"], "c": "51/50"},
            "n_max": 100000,
            "sample_count": 4,
        },
    },
    "tc_torus_pair": {
        "description": "two commuting torus translations, parallel exponent vectors",
        "config": {
            "experiment": "tc_multi",
            "systems": [
                {"kind": "torus_translation", "thetas": ["sqrt(2)-1", 0]},
                {"kind": "torus_translation", "thetas": [0, "sqrt(3)-1"]},
            ],
            "f": {"kind": "character", "freq": [1, -1]},
            "g": {"kind": "character", "freq": [-1, 1]},
            "params": {"b": [1, 1], "d": [2, 2], "c": "51/50"},
            "n_max": 100000,
            "sample_count": 4,
        },
    },
}


def preset_names():
    return sorted(PRESETS)


def preset_config(name):
    """A deep copy of the named preset's config, name field included."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}")
    cfg = copy.deepcopy(PRESETS[name]["config"])
    cfg.setdefault("name", name)
    return cfg


def preset_description(name):
    return PRESETS[name]["description"]
