"""Prediction-error metrics and training-quality checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory
from .fml import LossHistory

__all__ = [
    "ErrorSeries",
    "l2_error_series",
    "average_error",
    "loss_decay_ok",
    "LOSS_DECAY_THRESHOLD",
]

#: Required training-loss decay: at least two orders of magnitude.
LOSS_DECAY_THRESHOLD = 1e-2


@dataclass
class ErrorSeries:
    """Per-step Euclidean prediction error at spacing ``dt``."""

    dt: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError(f"values must be 1-D, got ndim={self.values.ndim}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if (self.values < 0).any():
            raise ValueError("error values must be non-negative")

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.values))

    def __len__(self) -> int:
        return len(self.values)


def l2_error_series(pred: Trajectory, ref: Trajectory, relative: bool = False) -> ErrorSeries:
    """Euclidean norm of (pred - ref) at every step.

    With ``relative=True`` each value is divided by the reference norm at
    that step (guarded against division by zero).
    """
    if len(pred) != len(ref):
        raise ValueError(f"trajectory lengths differ: {len(pred)} vs {len(ref)}")
    if pred.dim != ref.dim:
        raise ValueError(f"trajectory dimensions differ: {pred.dim} vs {ref.dim}")
    if pred.dt != ref.dt:
        raise ValueError(f"trajectory steps differ: {pred.dt} vs {ref.dt}")
    values = np.linalg.norm(pred.states - ref.states, axis=1)
    if relative:
        denom = np.maximum(np.linalg.norm(ref.states, axis=1), 1e-300)
        values = values / denom
    return ErrorSeries(pred.dt, values)


def average_error(series: list[ErrorSeries]) -> ErrorSeries:
    """Pointwise arithmetic mean of equally long error series."""
    if not series:
        raise ValueError("need at least one error series")
    length = len(series[0])
    dt = series[0].dt
    for i, s in enumerate(series[1:], start=1):
        if len(s) != length:
            raise ValueError(f"series {i} has length {len(s)}, expected {length}")
        if s.dt != dt:
            raise ValueError(f"series {i} has dt={s.dt}, expected {dt}")
    stacked = np.stack([s.values for s in series])
    return ErrorSeries(dt, stacked.mean(axis=0))


def loss_decay_ok(history: LossHistory) -> tuple[bool, float]:
    """Whether the recorded loss decayed at least two orders of magnitude.

    Returns the flag and the ratio min(loss) / loss[0].
    """
    first = history.losses[0]
    ratio = min(history.losses) / first if first > 0 else 1.0
    return ratio <= LOSS_DECAY_THRESHOLD, float(ratio)
