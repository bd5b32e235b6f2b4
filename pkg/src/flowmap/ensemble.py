"""Ensembles of independently trained flow-map models.

Members share data, architecture, and training configuration, differing only
in the seeds that drive initialization and minibatch shuffling.  Prediction
is step-wise: every member advances one step from the shared window, the
member predictions are averaged, and the average is fed back to all members
for the next step.  This is not the same as averaging independent rollouts.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import net
from .data import TrainingSet
from .fml import FmlModel, LossHistory, TrainingConfig, TrainingError, _as_window_batch, _step_batch, train

__all__ = [
    "EnsembleModel",
    "derive_member_seed",
    "train_ensemble",
    "ensemble_predict",
]


@dataclass
class EnsembleModel:
    """Trained members plus the seeds they were derived from."""

    members: list[FmlModel]
    member_seeds: list[int]

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        if len(self.member_seeds) != len(self.members):
            raise ValueError("one seed per member required")
        head = self.members[0]
        for i, m in enumerate(self.members[1:], start=1):
            if (m.d, m.n_memory, m.dt, m.residual) != (head.d, head.n_memory, head.dt, head.residual):
                raise ValueError(f"member {i} is structurally different from member 0")
            if m.net.layer_sizes != head.net.layer_sizes:
                raise ValueError(f"member {i} has different layer sizes than member 0")

    @property
    def n_model(self) -> int:
        return len(self.members)


def derive_member_seed(base_seed: int, index: int) -> int:
    """Deterministic, collision-resistant member seed (splitmix64 expansion)."""
    mask = (1 << 64) - 1
    z = (base_seed + (index + 1) * 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return (z ^ (z >> 31)) & mask


def _train_member(args) -> tuple[FmlModel, LossHistory]:
    template, training_set, cfg, seed = args
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    member = replace(template, net=net.init_mlp(template.net.layer_sizes, rng))
    return train(member, training_set, replace(cfg, seed=seed))


def train_ensemble(
    template: FmlModel,
    training_set: TrainingSet,
    cfg: TrainingConfig,
    n_model: int,
    base_seed: int,
    workers: int = 1,
) -> tuple[EnsembleModel, list[LossHistory]]:
    """Train ``n_model`` members on identical data and configuration.

    Member ``i`` reinitializes the template's network from the seed derived
    from ``(base_seed, i)`` and shuffles minibatches with the same seed.
    With ``workers > 1`` members train on a process pool; results are
    independent of the worker count.
    """
    if n_model < 1:
        raise ValueError(f"n_model must be >= 1, got {n_model}")
    if base_seed < 0:
        raise ValueError(f"base_seed must be non-negative, got {base_seed}")
    seeds = [derive_member_seed(base_seed, i) for i in range(n_model)]
    tasks = [(template, training_set, cfg, seed) for seed in seeds]
    results: list[tuple[FmlModel, LossHistory] | None] = [None] * n_model
    if workers > 1 and n_model > 1:
        with ProcessPoolExecutor(max_workers=min(workers, n_model)) as pool:
            futures = {pool.submit(_train_member, task): i for i, task in enumerate(tasks)}
            for fut, i in futures.items():
                try:
                    results[i] = fut.result()
                except TrainingError as exc:
                    raise TrainingError(f"member {i} failed: {exc}") from exc
    else:
        for i, task in enumerate(tasks):
            try:
                results[i] = _train_member(task)
            except TrainingError as exc:
                raise TrainingError(f"member {i} failed: {exc}") from exc
    members = [r[0] for r in results]
    histories = [r[1] for r in results]
    return EnsembleModel(members, seeds), histories


def _fixed_order_mean(values: np.ndarray) -> np.ndarray:
    """Mean over axis 0 with a reduction order that is invariant to member
    permutation and exact when all members agree.

    Per component, member values are sorted, the smallest is used as a
    baseline, and the remaining deviations are summed in sorted order.
    """
    k = values.shape[0]
    if k == 1:
        return values[0].copy()
    ordered = np.sort(values, axis=0)
    base = ordered[0]
    return base + np.add.reduce(ordered - base, axis=0) / k


def ensemble_predict(ens: EnsembleModel, init_window: np.ndarray, steps: int) -> np.ndarray:
    """Step-wise ensemble-averaged prediction from a shared warm-up window.

    Every member predicts one step from the shared current window; the mean
    becomes the next shared state.  Returns the warm-up states followed by
    the ``steps`` averaged predictions, batched if ``init_window`` is.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    head = ens.members[0]
    windows, single = _as_window_batch(head, init_window)
    b = windows.shape[0]
    w = head.window_size
    out = np.empty((b, w + steps, head.d))
    out[:, :w] = windows
    member_preds = np.empty((ens.n_model, b, head.d))
    for s in range(steps):
        window = out[:, s : s + w]
        for mi, member in enumerate(ens.members):
            pred, _ = _step_batch(member, window)
            if not np.isfinite(pred).all():
                raise FloatingPointError(
                    f"member {mi} produced a non-finite prediction at step {s}"
                )
            member_preds[mi] = pred
        out[:, w + s] = _fixed_order_mean(member_preds)
    return out[0] if single else out
