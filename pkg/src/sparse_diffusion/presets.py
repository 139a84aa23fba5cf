"""Built-in scenario defaults; a user config is deep-merged on top of these.

The tracking presets use regressor powers in [0.1, 0.3] and noise powers in
[0.001, 0.01]. With ``mu = 0.1`` and ``M = 50`` this keeps the stand-alone
(non-cooperative) LMS baselines mean-square stable, which requires
``mu * sigma_u^2 * (M + 2) < 2`` for Gaussian regressors.
"""

from __future__ import annotations

import copy

import numpy as np

_NETWORK = {
    "dimension": 50,
    "topology": {"kind": "random_geometric", "num_nodes": 20, "radius": 0.33, "exchange_data": False},
    "profiles": {"step_size": 0.1, "regressor_range": [0.1, 0.3], "noise_range": [0.001, 0.01]},
}

_FIXED_SIX = [
    {"label": "ATC", "regularizer": "none"},
    {"label": "ZA-ATC", "regularizer": "za", "gamma": 1.0e-3},
    {"label": "RZA-ATC", "regularizer": "rza", "epsilon": 0.1, "gamma": 0.25e-3},
    {"label": "LMS", "cooperation": "non_cooperative", "regularizer": "none"},
    {"label": "ZA-LMS", "cooperation": "non_cooperative", "regularizer": "za", "gamma": 1.0e-3},
    {"label": "RZA-LMS", "cooperation": "non_cooperative", "regularizer": "rza", "epsilon": 0.1, "gamma": 0.25e-3},
]

_ADAPTIVE_THREE = [
    {"label": "ATC", "regularizer": "none"},
    {"label": "ZA-ATC", "regularizer": "za", "adaptive": {"eta": None, "scope": "local"}},
    {"label": "RZA-ATC", "regularizer": "rza", "epsilon": 0.1, "adaptive": {"eta": None, "scope": "local"}},
]

PRESETS = {
    "tracking_example1": {
        **_NETWORK,
        "seed": 2013, "runs": 100, "horizon": 3000, "window": 100,
        "truth": {"phases": [[0, 1], [1000, 25], [2000, 50]], "value": 1.0, "nested": True},
        "algorithms": _FIXED_SIX,
    },
    "tracking_example2": {
        **_NETWORK,
        "seed": 2013, "runs": 100, "horizon": 3000, "window": 100,
        "truth": {"phases": [[0, 1], [1000, 5], [2000, 50]], "value": 1.0, "nested": True},
        "algorithms": _ADAPTIVE_THREE,
    },
    "gamma_sweep": {
        **_NETWORK,
        "seed": 2013, "runs": 30, "horizon": 2000, "window": 100,
        "truth": {"phases": [[0, 1]], "value": 1.0},
        "algorithms": [{"label": "ATC", "regularizer": "none"}],
        "sweep": {
            "sparsity_levels": [1, 5, 25, 50],
            "gammas_za": np.geomspace(1e-4, 1e-2, 9).round(8).tolist(),
            "gammas_rza": np.geomspace(1e-5, 1e-2, 10).round(9).tolist(),
            "epsilon": 0.1,
        },
    },
    "eta_sensitivity": {
        **_NETWORK,
        "seed": 2013, "runs": 30, "horizon": 2000, "window": 100,
        "truth": {"phases": [[0, 5]], "value": 1.0},
        "algorithms": _ADAPTIVE_THREE,
        "eta_sensitivity": {"factors": np.geomspace(0.25, 4.0, 9).round(6).tolist()},
    },
    "theory_vs_sim": {
        "seed": 2013, "runs": 500, "horizon": 1000, "window": 200, "dimension": 8,
        "topology": {"kind": "random_geometric", "num_nodes": 5, "radius": 0.6, "exchange_data": False},
        "profiles": {"step_size": 0.05, "regressor_range": [0.5, 2.0], "noise_range": [0.05, 0.25]},
        "truth": {"phases": [[0, 1]], "value": 1.0},
        "algorithms": [{"label": "ATC", "regularizer": "none"}],
    },
    "custom": {
        "seed": 0, "runs": 10, "horizon": 1000, "window": 100, "dimension": 8,
        "topology": {"kind": "random_geometric", "num_nodes": 5, "radius": 0.6, "exchange_data": False},
        "profiles": {"step_size": 0.05, "regressor_range": [0.5, 2.0], "noise_range": [0.05, 0.25]},
        "truth": {"phases": [[0, 1]], "value": 1.0},
        "algorithms": [{"label": "ATC", "regularizer": "none"}],
    },
}

SCENARIOS = tuple(PRESETS)

# lists and these sub-tables replace the preset wholesale instead of merging
_REPLACE_KEYS = {"algorithms", "truth"}


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key not in _REPLACE_KEYS:
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def resolve(raw: dict) -> dict:
    """Preset for ``raw['scenario']`` (default ``custom``) with ``raw`` merged on top."""
    scenario = raw.get("scenario", "custom")
    if scenario not in PRESETS:
        raise KeyError(scenario)
    merged = deep_merge(PRESETS[scenario], raw)
    merged["scenario"] = scenario
    return merged
