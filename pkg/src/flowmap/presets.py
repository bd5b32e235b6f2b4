"""Benchmark parameter tables and scale presets.

``PAPER_BENCHMARKS`` transcribes the published parameter list of each
benchmark case.  The ``desk`` preset shrinks the trajectory count, epoch
count, and ensemble size so a full run takes minutes instead of hours;
everything else (time step, domain, window sizes, architecture, learning
rate) is unchanged.
"""

from __future__ import annotations

import math

__all__ = ["PAPER_BENCHMARKS", "BENCHMARK_CASES", "PRESETS", "build_config_dict"]

_PI = math.pi

# Published parameters per benchmark case.  Domains are (lower, upper)
# bounds on the full state; observe lists the observed component indices.
PAPER_BENCHMARKS: dict[str, dict] = {
    "5.1.1": {
        "system": "decay-linear",
        "observe": [0, 1],
        "dt": 0.01,
        "domain": ([0.0, 0.0], [2.0, 2.0]),
        "n_traj": 10_000,
        "length": 200,
        "n_burst": 5,
        "n_memory": 0,
        "n_multistep": 10,
        "hidden": [10, 10, 10],
        "learning_rate": 1e-4,
        "epochs": 10_000,
        "n_model": 10,
        "param_ranges": {},
        "horizon": 500,
    },
    "5.1.2": {
        "system": "decay-linear",
        "observe": [0],
        "dt": 0.01,
        "domain": ([0.0, 0.0], [2.0, 2.0]),
        "n_traj": 10_000,
        "length": 200,
        "n_burst": 5,
        "n_memory": 10,
        "n_multistep": 10,
        "hidden": [10, 10, 10],
        "learning_rate": 1e-4,
        "epochs": 10_000,
        "n_model": 10,
        "param_ranges": {},
        "horizon": 500,
    },
    "5.2.1": {
        "system": "osc-linear",
        "observe": [0, 1],
        "dt": 0.01,
        "domain": ([0.0, 0.0], [2.0, 2.0]),
        "n_traj": 10_000,
        "length": 200,
        "n_burst": 5,
        "n_memory": 0,
        "n_multistep": 10,
        "hidden": [10, 10, 10],
        "learning_rate": 1e-4,
        "epochs": 10_000,
        "n_model": 10,
        "param_ranges": {},
        "horizon": 500,
    },
    "5.2.2": {
        "system": "osc-linear",
        "observe": [0],
        "dt": 0.01,
        "domain": ([0.0, 0.0], [2.0, 2.0]),
        "n_traj": 10_000,
        "length": 200,
        "n_burst": 5,
        "n_memory": 10,
        "n_multistep": 10,
        "hidden": [10, 10, 10],
        "learning_rate": 1e-4,
        "epochs": 10_000,
        "n_model": 10,
        "param_ranges": {},
        "horizon": 500,
    },
    "5.3.1": {
        "system": "pendulum",
        "observe": [0, 1],
        "dt": 0.01,
        "domain": ([-_PI / 2, -_PI], [_PI / 2, _PI]),
        "n_traj": 10_000,
        "length": 1000,
        "n_burst": 5,
        "n_memory": 0,
        "n_multistep": 10,
        "hidden": [10, 10, 10],
        "learning_rate": 1e-4,
        "epochs": 10_000,
        "n_model": 10,
        "param_ranges": {},
        "horizon": 1000,
    },
    "5.3.2": {
        "system": "pendulum",
        "observe": [0, 1],
        "dt": 0.01,
        "domain": ([-_PI / 2, -_PI], [_PI / 2, _PI]),
        "n_traj": 10_000,
        "length": 1000,
        "n_burst": 5,
        "n_memory": 10,
        "n_multistep": 10,
        "hidden": [10, 10, 10],
        "learning_rate": 1e-4,
        "epochs": 10_000,
        "n_model": 10,
        "param_ranges": {"alpha": (0.0, 0.2)},
        "horizon": 1000,
    },
    "5.3.3": {
        "system": "pendulum",
        "observe": [0],
        "dt": 0.01,
        "domain": ([-_PI / 2, -_PI], [_PI / 2, _PI]),
        "n_traj": 10_000,
        "length": 1000,
        "n_burst": 5,
        "n_memory": 10,
        "n_multistep": 10,
        "hidden": [10, 10, 10],
        "learning_rate": 1e-4,
        "epochs": 10_000,
        "n_model": 10,
        "param_ranges": {"alpha": (0.0, 0.2)},
        "horizon": 1000,
    },
    "5.4.1": {
        "system": "lorenz63",
        "observe": [0, 1, 2],
        "dt": 0.01,
        "domain": ([-_PI / 2] * 3, [_PI / 2] * 3),
        "n_traj": 10_000,
        "length": 10_000,
        "n_burst": 5,
        "n_memory": 0,
        "n_multistep": 10,
        "hidden": [30, 30, 30],
        "learning_rate": 1e-4,
        "epochs": 10_000,
        "n_model": 10,
        "param_ranges": {},
        "horizon": 1000,
    },
    "5.4.2": {
        "system": "lorenz63",
        "observe": [0, 1],
        "dt": 0.01,
        "domain": ([-_PI / 2] * 3, [_PI / 2] * 3),
        "n_traj": 10_000,
        "length": 10_000,
        "n_burst": 5,
        "n_memory": 10,
        "n_multistep": 10,
        "hidden": [30, 30, 30],
        "learning_rate": 1e-4,
        "epochs": 10_000,
        "n_model": 10,
        "param_ranges": {},
        "horizon": 1000,
    },
    "5.4.3": {
        "system": "lorenz63",
        "observe": [0],
        "dt": 0.01,
        "domain": ([-_PI / 2] * 3, [_PI / 2] * 3),
        "n_traj": 10_000,
        "length": 10_000,
        "n_burst": 5,
        "n_memory": 10,
        "n_multistep": 10,
        "hidden": [30, 30, 30],
        "learning_rate": 1e-4,
        "epochs": 10_000,
        "n_model": 10,
        "param_ranges": {},
        "horizon": 1000,
    },
    "5.5.1": {
        "system": "large-linear",
        "observe": list(range(10)),
        "dt": 0.02,
        "domain": ([-2.0] * 20, [2.0] * 20),
        "n_traj": 10_000,
        "length": 100,
        "n_burst": 5,
        "n_memory": 30,
        "n_multistep": 10,
        "hidden": [100, 100, 100],
        "learning_rate": 1e-4,
        "epochs": 10_000,
        "n_model": 10,
        "param_ranges": {},
        "horizon": 500,
    },
}

BENCHMARK_CASES = tuple(sorted(PAPER_BENCHMARKS))

PRESETS = ("paper", "desk")

#: Test-set size: 10^2 fresh initial conditions per benchmark.
TEST_SIZE = 100

# Deliberately disjoint seed blocks for data generation, training, and
# held-out test initial conditions.
_SEED_BLOCKS = {"data": 1000, "train": 2000, "test": 3000}

_DESK_OVERRIDES = {"n_traj": 1000, "epochs": 2000, "n_model": 3}


def build_config_dict(case: str, preset: str) -> dict:
    """Assemble a full configuration dictionary for one benchmark case."""
    if case not in PAPER_BENCHMARKS:
        raise ValueError(f"unknown benchmark case {case!r}; expected one of {BENCHMARK_CASES}")
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; expected one of {PRESETS}")
    p = dict(PAPER_BENCHMARKS[case])
    if preset == "desk":
        p.update(_DESK_OVERRIDES)
    index = BENCHMARK_CASES.index(case)
    lower, upper = p["domain"]
    return {
        "format_version": 1,
        "name": f"{case}-{preset}",
        "system": {"id": p["system"], "overrides": {}},
        "data": {
            "dt": p["dt"],
            "domain": {"lower": list(lower), "upper": list(upper)},
            "n_traj": p["n_traj"],
            "length": p["length"],
            "n_burst": p["n_burst"],
            "observe": list(p["observe"]),
            "param_ranges": {k: list(v) for k, v in p["param_ranges"].items()},
            "seed": _SEED_BLOCKS["data"] + index,
        },
        "model": {
            "n_memory": p["n_memory"],
            "n_multistep": p["n_multistep"],
            "hidden": list(p["hidden"]),
            "residual": True,
        },
        "training": {
            "learning_rate": p["learning_rate"],
            "epochs": p["epochs"],
            "batch_size": 1000,
            "n_model": p["n_model"],
            "seed": _SEED_BLOCKS["train"] + index,
        },
        "evaluation": {
            "test_size": TEST_SIZE,
            "horizon": p["horizon"],
            "seed": _SEED_BLOCKS["test"] + index,
            "relative_error": False,
        },
    }
