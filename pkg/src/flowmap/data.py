"""Trajectory data pipeline: sampling, observation, windowing, persistence.

The pipeline runs initial-condition sampling -> raw trajectory generation ->
observable projection -> burst subsampling into fixed-length training
windows.  Every stage is deterministic given its seed; per-trajectory RNG
streams are derived from (seed, trajectory index) so the result does not
depend on processing order.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _binio
from .dynamics import DEFAULT_SUBSTEPS, SystemSpec, integrate_batch, make_benchmark, propagate_linear

__all__ = [
    "Domain",
    "ObservableMap",
    "RawDataConfig",
    "SamplingPlan",
    "RawDataset",
    "TrainingSet",
    "DatasetFormatError",
    "sample_initial_conditions",
    "generate_raw_dataset",
    "observe",
    "required_window_length",
    "subsample_bursts",
    "save_dataset",
    "load_dataset",
    "export_csv",
]

#: Guidance band for the ratio of raw-trajectory length to window length.
GAMMA_GUIDANCE = (2.0, 10.0)


class DatasetFormatError(ValueError):
    """Raised when a dataset file is malformed or inconsistent."""


@dataclass(frozen=True)
class Domain:
    """Axis-aligned hypercube from which initial conditions are drawn."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if len(self.lower) != len(self.upper):
            raise ValueError("lower and upper bounds must have equal length")
        if len(self.lower) == 0:
            raise ValueError("domain must have at least one dimension")
        for i, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if not hi > lo:
                raise ValueError(f"degenerate domain: upper[{i}]={hi} must exceed lower[{i}]={lo}")

    @property
    def dim(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class ObservableMap:
    """Selection of observed state components (strictly increasing indices)."""

    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if not self.indices:
            raise ValueError("observable map must select at least one component")
        if any(i < 0 for i in self.indices):
            raise ValueError(f"observable indices must be non-negative, got {self.indices}")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError(f"observable indices must be strictly increasing, got {self.indices}")

    @classmethod
    def identity(cls, n: int) -> "ObservableMap":
        return cls(tuple(range(n)))

    @property
    def d(self) -> int:
        return len(self.indices)


@dataclass
class RawDataConfig:
    """How to produce the raw trajectory collection.

    ``param_ranges`` optionally maps a system parameter name to (low, high);
    a fresh value is drawn per trajectory, which is how the randomized
    pendulum benchmark varies its damping.
    """

    n_traj: int
    length: int
    dt: float
    domain: Domain
    seed: int
    param_ranges: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError(f"n_traj must be >= 1, got {self.n_traj}")
        if self.length < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")


@dataclass
class SamplingPlan:
    """Burst-subsampling parameters for building the training set."""

    n_memory: int
    n_multistep: int
    n_burst: int
    seed: int

    def __post_init__(self):
        if self.n_memory < 0:
            raise ValueError(f"n_memory must be >= 0, got {self.n_memory}")
        if self.n_multistep < 0:
            raise ValueError(f"n_multistep must be >= 0, got {self.n_multistep}")
        if self.n_burst < 1:
            raise ValueError(f"n_burst must be >= 1, got {self.n_burst}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    @property
    def n_data(self) -> int:
        return required_window_length(self.n_memory, self.n_multistep)


@dataclass
class RawDataset:
    """Trajectories of observed states at a uniform step; no time stamps."""

    trajectories: list[np.ndarray]
    dt: float
    discarded: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        dims = {t.shape[1] for t in self.trajectories}
        if len(dims) > 1:
            raise ValueError(f"trajectories disagree on dimension: {sorted(dims)}")

    @property
    def dim(self) -> int:
        if not self.trajectories:
            raise ValueError("empty dataset has no dimension")
        return self.trajectories[0].shape[1]

    def __len__(self) -> int:
        return len(self.trajectories)


@dataclass
class TrainingSet:
    """N windows of n_data consecutive observed states each."""

    windows: np.ndarray          # (N, n_data, d)
    dt: float
    n_memory: int
    n_multistep: int
    skipped_short: int = 0

    def __post_init__(self):
        self.windows = np.asarray(self.windows, dtype=float)
        if self.windows.ndim != 3:
            raise ValueError(f"windows must be 3-D (N, n_data, d), got ndim={self.windows.ndim}")
        expect = required_window_length(self.n_memory, self.n_multistep)
        if self.windows.shape[1] != expect:
            raise ValueError(
                f"window length {self.windows.shape[1]} does not match "
                f"n_memory={self.n_memory}, n_multistep={self.n_multistep} (need {expect})"
            )
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def n_windows(self) -> int:
        return self.windows.shape[0]

    @property
    def d(self) -> int:
        return self.windows.shape[2]


def sample_initial_conditions(domain: Domain, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` points uniformly from the domain; shape (count, dim)."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    lower = np.asarray(domain.lower)
    upper = np.asarray(domain.upper)
    return rng.uniform(lower, upper, size=(count, domain.dim))


def _system_with_sampled_params(
    system: SystemSpec, ranges: dict[str, tuple[float, float]], n_traj: int, rng: np.random.Generator
) -> SystemSpec:
    if system.exact:
        raise ValueError("per-trajectory parameter ranges are only supported for nonlinear systems")
    overrides = {}
    for name in sorted(ranges):
        lo, hi = ranges[name]
        overrides[name] = rng.uniform(float(lo), float(hi), size=n_traj)
    return make_benchmark(system.id, overrides)


def generate_raw_dataset(system: SystemSpec, cfg: RawDataConfig) -> RawDataset:
    """Generate the raw dataset: ``n_traj`` trajectories of ``length + 1`` states.

    Linear systems are propagated exactly via the matrix exponential;
    everything else uses batched RK4 with ``DEFAULT_SUBSTEPS`` internal steps
    per recorded step.  Trajectories that blow up are discarded and counted.
    """
    if cfg.domain.dim != system.n:
        raise ValueError(
            f"domain dimension {cfg.domain.dim} does not match system dimension {system.n}"
        )
    ic_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0)))
    ics = sample_initial_conditions(cfg.domain, cfg.n_traj, ic_rng)
    if cfg.param_ranges:
        param_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 1)))
        system = _system_with_sampled_params(system, cfg.param_ranges, cfg.n_traj, param_rng)
    if system.exact:
        states = propagate_linear(system, ics, cfg.dt, cfg.length)
    else:
        states = integrate_batch(system, ics, cfg.dt, cfg.length, DEFAULT_SUBSTEPS)
    finite = np.isfinite(states).all(axis=(1, 2))
    discarded = int((~finite).sum())
    if discarded == cfg.n_traj:
        raise RuntimeError("all trajectories blew up during generation")
    trajectories = [states[i] for i in range(cfg.n_traj) if finite[i]]
    return RawDataset(trajectories, cfg.dt, discarded)


def observe(raw: RawDataset, omap: ObservableMap) -> RawDataset:
    """Project every state onto the selected components."""
    dim = raw.dim
    if omap.indices[-1] >= dim:
        raise ValueError(f"observable index {omap.indices[-1]} out of range for dimension {dim}")
    if omap.indices == tuple(range(dim)):
        return RawDataset(list(raw.trajectories), raw.dt, raw.discarded)
    idx = list(omap.indices)
    return RawDataset([t[:, idx] for t in raw.trajectories], raw.dt, raw.discarded)


def required_window_length(n_memory: int, n_multistep: int) -> int:
    """Entries needed per training window: warm-up + targets = n_M + K + 2."""
    if n_memory < 0 or n_multistep < 0:
        raise ValueError("n_memory and n_multistep must be >= 0")
    return n_memory + n_multistep + 2


def subsample_bursts(raw: RawDataset, plan: SamplingPlan) -> TrainingSet:
    """Extract ``n_burst`` windows of ``n_data`` consecutive entries per trajectory.

    Start offsets are drawn uniformly with replacement from the valid range,
    one RNG stream per trajectory.  Trajectories with fewer than ``n_data``
    entries are skipped and counted.
    """
    if not raw.trajectories:
        raise ValueError("raw dataset is empty")
    n_data = plan.n_data
    windows = []
    skipped = 0
    min_entries = min(len(t) for t in raw.trajectories)
    gamma = (min_entries - 1) / n_data
    if gamma < GAMMA_GUIDANCE[0]:
        warnings.warn(
            f"trajectory length over window length is {gamma:.2f}, below the "
            f"guidance minimum {GAMMA_GUIDANCE[0]}; windows barely fit",
            stacklevel=2,
        )
    elif gamma > GAMMA_GUIDANCE[1]:
        warnings.warn(
            f"trajectory length over window length is {gamma:.2f}, above the "
            f"guidance maximum {GAMMA_GUIDANCE[1]}; bursts sample a long trajectory sparsely",
            stacklevel=2,
        )
    for i, traj in enumerate(raw.trajectories):
        entries = len(traj)
        if entries < n_data:
            skipped += 1
            continue
        rng = np.random.default_rng(np.random.SeedSequence((plan.seed, i)))
        starts = rng.integers(0, entries - n_data + 1, size=plan.n_burst)
        for s in starts:
            windows.append(traj[s : s + n_data])
    if not windows:
        raise ValueError(f"all {len(raw.trajectories)} trajectories are shorter than {n_data} entries")
    return TrainingSet(
        np.stack(windows), raw.dt, plan.n_memory, plan.n_multistep, skipped_short=skipped
    )


_MAGIC = b"FMDS"
_VERSION = 1
_KIND_RAW = 0
_KIND_TRAINING = 1


def save_dataset(dataset: RawDataset | TrainingSet, path) -> None:
    """Write a dataset to the self-describing binary format (bit-exact)."""
    with open(path, "wb") as f:
        f.write(_MAGIC)
        if isinstance(dataset, TrainingSet):
            f.write(struct.pack("<IB", _VERSION, _KIND_TRAINING))
            f.write(
                struct.pack(
                    "<QIIdII",
                    dataset.n_windows,
                    dataset.windows.shape[1],
                    dataset.d,
                    dataset.dt,
                    dataset.n_memory,
                    dataset.n_multistep,
                )
            )
            f.write(struct.pack("<I", dataset.skipped_short))
            f.write(np.ascontiguousarray(dataset.windows).tobytes())
        elif isinstance(dataset, RawDataset):
            f.write(struct.pack("<IB", _VERSION, _KIND_RAW))
            dim = dataset.trajectories[0].shape[1] if dataset.trajectories else 0
            f.write(struct.pack("<IIdI", len(dataset.trajectories), dim, dataset.dt, dataset.discarded))
            for t in dataset.trajectories:
                f.write(struct.pack("<Q", len(t)))
            for t in dataset.trajectories:
                f.write(np.ascontiguousarray(t).tobytes())
        else:
            raise TypeError(f"cannot save object of type {type(dataset).__name__}")


def load_dataset(path) -> RawDataset | TrainingSet:
    with open(path, "rb") as f:
        magic = _binio.read_exact(f, 4, "dataset magic", DatasetFormatError)
        if magic != _MAGIC:
            raise DatasetFormatError(f"bad dataset magic {magic!r}, expected {_MAGIC!r}")
        version, kind = struct.unpack("<IB", _binio.read_exact(f, 5, "dataset header", DatasetFormatError))
        if version != _VERSION:
            raise DatasetFormatError(f"unsupported dataset format version {version}")
        if kind == _KIND_TRAINING:
            n, n_data, d, dt, n_memory, n_multistep = struct.unpack(
                "<QIIdII", _binio.read_exact(f, 32, "training header", DatasetFormatError)
            )
            (skipped,) = struct.unpack("<I", _binio.read_exact(f, 4, "skipped count", DatasetFormatError))
            if d < 1:
                raise DatasetFormatError(f"dimension field d={d} is invalid")
            if n_data != required_window_length(n_memory, n_multistep):
                raise DatasetFormatError(
                    f"window length {n_data} inconsistent with n_memory={n_memory}, "
                    f"n_multistep={n_multistep}"
                )
            payload = _binio.read_floats(f, n * n_data * d, "window payload", DatasetFormatError)
            _expect_eof(f)
            return TrainingSet(payload.reshape(n, n_data, d), dt, n_memory, n_multistep, skipped)
        if kind == _KIND_RAW:
            n_traj, dim, dt, discarded = struct.unpack(
                "<IIdI", _binio.read_exact(f, 20, "raw header", DatasetFormatError)
            )
            lengths = [
                struct.unpack("<Q", _binio.read_exact(f, 8, f"trajectory {i} length", DatasetFormatError))[0]
                for i in range(n_traj)
            ]
            trajectories = [
                _binio.read_floats(f, ln * dim, f"trajectory {i} payload", DatasetFormatError).reshape(ln, dim)
                for i, ln in enumerate(lengths)
            ]
            _expect_eof(f)
            return RawDataset(trajectories, dt, discarded)
        raise DatasetFormatError(f"unknown dataset kind {kind}")


def _expect_eof(f) -> None:
    if f.read(1):
        raise DatasetFormatError("payload length disagrees with recorded counts (trailing bytes)")


def export_csv(dataset: RawDataset | TrainingSet, path) -> None:
    """Write states as CSV rows, one row per state; blank lines separate
    windows (or trajectories)."""
    if isinstance(dataset, TrainingSet):
        groups = [dataset.windows[i] for i in range(dataset.n_windows)]
    elif isinstance(dataset, RawDataset):
        groups = dataset.trajectories
    else:
        raise TypeError(f"cannot export object of type {type(dataset).__name__}")
    with open(path, "w", encoding="utf-8") as f:
        for gi, group in enumerate(groups):
            if gi:
                f.write("\n")
            for row in group:
                f.write(",".join(repr(float(v)) for v in row))
                f.write("\n")
