"""Benchmark configuration: dataclasses, JSON round-trip, validation.

Configs are JSON files with nested sections (system, data, model, training,
evaluation).  Validation errors name the offending field by its dotted path.
Serialization is canonical (sorted keys) so parse -> serialize -> parse is
the identity and a config digest is stable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .data import Domain, ObservableMap, RawDataConfig, SamplingPlan
from .dynamics import BENCHMARK_IDS

__all__ = [
    "ConfigError",
    "BenchmarkConfig",
    "parse_config",
    "serialize_config",
    "config_digest",
    "load_config",
    "save_config",
]

FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Configuration problem, with the field path in the message."""


@dataclass
class SystemSection:
    id: str
    overrides: dict = field(default_factory=dict)


@dataclass
class DataSection:
    dt: float
    domain_lower: list[float]
    domain_upper: list[float]
    n_traj: int
    length: int
    n_burst: int
    observe: list[int]
    seed: int
    param_ranges: dict[str, tuple[float, float]] = field(default_factory=dict)


@dataclass
class ModelSection:
    n_memory: int
    n_multistep: int
    hidden: list[int]
    residual: bool = True


@dataclass
class TrainingSection:
    learning_rate: float
    epochs: int
    batch_size: int
    n_model: int
    seed: int


@dataclass
class EvaluationSection:
    test_size: int
    horizon: int
    seed: int
    relative_error: bool = False


@dataclass
class BenchmarkConfig:
    name: str
    system: SystemSection
    data: DataSection
    model: ModelSection
    training: TrainingSection
    evaluation: EvaluationSection

    def domain(self) -> Domain:
        return Domain(tuple(self.data.domain_lower), tuple(self.data.domain_upper))

    def observable_map(self) -> ObservableMap:
        return ObservableMap(tuple(self.data.observe))

    def raw_data_config(self) -> RawDataConfig:
        return RawDataConfig(
            n_traj=self.data.n_traj,
            length=self.data.length,
            dt=self.data.dt,
            domain=self.domain(),
            seed=self.data.seed,
            param_ranges={k: tuple(v) for k, v in self.data.param_ranges.items()},
        )

    def sampling_plan(self) -> SamplingPlan:
        return SamplingPlan(
            n_memory=self.model.n_memory,
            n_multistep=self.model.n_multistep,
            n_burst=self.data.n_burst,
            seed=self.data.seed,
        )


def _need(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigError(f"missing field {path}.{key}")
    return mapping[key]


def _as_int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path} must be >= {minimum}, got {value}")
    return value


def _as_float(value, path: str, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number, got {value!r}")
    value = float(value)
    if positive and not value > 0:
        raise ConfigError(f"{path} must be positive, got {value}")
    return value


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path} must be a boolean, got {value!r}")
    return value


def _as_number_list(value, path: str) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path} must be a non-empty list of numbers")
    return [_as_float(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _as_int_list(value, path: str, minimum: int | None = None) -> list[int]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path} must be a non-empty list of integers")
    return [_as_int(v, f"{path}[{i}]", minimum) for i, v in enumerate(value)]


def parse_config(text: str) -> BenchmarkConfig:
    """Parse and validate a JSON configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    version = _as_int(_need(doc, "format_version", "$"), "format_version", 1)
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported config format_version {version}")
    name = _need(doc, "name", "$")
    if not isinstance(name, str) or not name:
        raise ConfigError("name must be a non-empty string")

    sys_doc = _need(doc, "system", "$")
    system_id = _need(sys_doc, "id", "system")
    if system_id not in BENCHMARK_IDS:
        raise ConfigError(f"system.id must be one of {BENCHMARK_IDS}, got {system_id!r}")
    overrides = sys_doc.get("overrides", {})
    if not isinstance(overrides, dict):
        raise ConfigError("system.overrides must be an object")
    system = SystemSection(system_id, overrides)

    d = _need(doc, "data", "$")
    domain_doc = _need(d, "domain", "data")
    lower = _as_number_list(_need(domain_doc, "lower", "data.domain"), "data.domain.lower")
    upper = _as_number_list(_need(domain_doc, "upper", "data.domain"), "data.domain.upper")
    if len(lower) != len(upper):
        raise ConfigError("data.domain lower and upper must have equal length")
    for i, (lo, hi) in enumerate(zip(lower, upper)):
        if not hi > lo:
            raise ConfigError(f"data.domain.upper[{i}] must exceed data.domain.lower[{i}]")
    ranges_doc = d.get("param_ranges", {})
    if not isinstance(ranges_doc, dict):
        raise ConfigError("data.param_ranges must be an object")
    param_ranges = {}
    for key, bounds in sorted(ranges_doc.items()):
        vals = _as_number_list(bounds, f"data.param_ranges.{key}")
        if len(vals) != 2 or not vals[1] > vals[0]:
            raise ConfigError(f"data.param_ranges.{key} must be [low, high] with high > low")
        param_ranges[key] = (vals[0], vals[1])
    data = DataSection(
        dt=_as_float(_need(d, "dt", "data"), "data.dt", positive=True),
        domain_lower=lower,
        domain_upper=upper,
        n_traj=_as_int(_need(d, "n_traj", "data"), "data.n_traj", 1),
        length=_as_int(_need(d, "length", "data"), "data.length", 1),
        n_burst=_as_int(_need(d, "n_burst", "data"), "data.n_burst", 1),
        observe=_as_int_list(_need(d, "observe", "data"), "data.observe", 0),
        seed=_as_int(_need(d, "seed", "data"), "data.seed", 0),
        param_ranges=param_ranges,
    )
    if any(b <= a for a, b in zip(data.observe, data.observe[1:])):
        raise ConfigError("data.observe must be strictly increasing")
    if data.observe[-1] >= len(lower):
        raise ConfigError(
            f"data.observe[{len(data.observe) - 1}] = {data.observe[-1]} is out of range "
            f"for state dimension {len(lower)}"
        )

    m = _need(doc, "model", "$")
    model = ModelSection(
        n_memory=_as_int(_need(m, "n_memory", "model"), "model.n_memory", 0),
        n_multistep=_as_int(_need(m, "n_multistep", "model"), "model.n_multistep", 0),
        hidden=_as_int_list(_need(m, "hidden", "model"), "model.hidden", 1),
        residual=_as_bool(m.get("residual", True), "model.residual"),
    )

    t = _need(doc, "training", "$")
    training = TrainingSection(
        learning_rate=_as_float(_need(t, "learning_rate", "training"), "training.learning_rate", positive=True),
        epochs=_as_int(_need(t, "epochs", "training"), "training.epochs", 1),
        batch_size=_as_int(_need(t, "batch_size", "training"), "training.batch_size", 0),
        n_model=_as_int(_need(t, "n_model", "training"), "training.n_model", 1),
        seed=_as_int(_need(t, "seed", "training"), "training.seed", 0),
    )

    e = _need(doc, "evaluation", "$")
    evaluation = EvaluationSection(
        test_size=_as_int(_need(e, "test_size", "evaluation"), "evaluation.test_size", 1),
        horizon=_as_int(_need(e, "horizon", "evaluation"), "evaluation.horizon", 0),
        seed=_as_int(_need(e, "seed", "evaluation"), "evaluation.seed", 0),
        relative_error=_as_bool(e.get("relative_error", False), "evaluation.relative_error"),
    )

    cfg = BenchmarkConfig(name, system, data, model, training, evaluation)
    # Cross-field consistency mirrored from the underlying modules.
    window = cfg.model.n_memory + cfg.model.n_multistep + 2
    if cfg.data.length + 1 < window:
        raise ConfigError(
            f"data.length={cfg.data.length} is too short for windows of "
            f"{window} entries (model.n_memory + model.n_multistep + 2)"
        )
    if cfg.evaluation.horizon < cfg.model.n_memory:
        raise ConfigError(
            f"evaluation.horizon={cfg.evaluation.horizon} is shorter than the "
            f"warm-up of model.n_memory={cfg.model.n_memory} steps"
        )
    return cfg


def config_to_dict(cfg: BenchmarkConfig) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "name": cfg.name,
        "system": {"id": cfg.system.id, "overrides": cfg.system.overrides},
        "data": {
            "dt": cfg.data.dt,
            "domain": {"lower": cfg.data.domain_lower, "upper": cfg.data.domain_upper},
            "n_traj": cfg.data.n_traj,
            "length": cfg.data.length,
            "n_burst": cfg.data.n_burst,
            "observe": cfg.data.observe,
            "param_ranges": {k: list(v) for k, v in sorted(cfg.data.param_ranges.items())},
            "seed": cfg.data.seed,
        },
        "model": {
            "n_memory": cfg.model.n_memory,
            "n_multistep": cfg.model.n_multistep,
            "hidden": cfg.model.hidden,
            "residual": cfg.model.residual,
        },
        "training": {
            "learning_rate": cfg.training.learning_rate,
            "epochs": cfg.training.epochs,
            "batch_size": cfg.training.batch_size,
            "n_model": cfg.training.n_model,
            "seed": cfg.training.seed,
        },
        "evaluation": {
            "test_size": cfg.evaluation.test_size,
            "horizon": cfg.evaluation.horizon,
            "seed": cfg.evaluation.seed,
            "relative_error": cfg.evaluation.relative_error,
        },
    }


def serialize_config(cfg: BenchmarkConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def config_digest(cfg: BenchmarkConfig) -> str:
    """Stable content digest of a configuration."""
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def load_config(path) -> BenchmarkConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


def save_config(cfg: BenchmarkConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize_config(cfg))
