"""Flow-map models with memory, rollout prediction, and multi-step training.

A model advances the observed state by one time step from a window of the
``n_memory + 1`` most recent states.  In residual mode the network predicts
the state increment; in direct mode it predicts the next state outright.
Training minimizes the mean squared rollout error over ``n_multistep + 1``
consecutive predictions per window, with gradients propagated through the
predictions that are fed back as inputs to later steps.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import _binio, net
from .data import TrainingSet
from .net import MlpParams

__all__ = [
    "FmlModel",
    "TrainingConfig",
    "LossHistory",
    "TrainingError",
    "MemorySweepReport",
    "model_step",
    "rollout",
    "multistep_loss",
    "multistep_loss_grad",
    "train",
    "memory_sweep",
    "save_fml_model",
    "load_fml_model",
]


class TrainingError(RuntimeError):
    """Raised when training encounters a non-finite loss or gradient."""


@dataclass
class FmlModel:
    """A one-step predictor for d observed components with n_memory past states."""

    d: int
    n_memory: int
    dt: float
    net: MlpParams
    residual: bool = True

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"observable dimension must be >= 1, got {self.d}")
        if self.n_memory < 0:
            raise ValueError(f"n_memory must be >= 0, got {self.n_memory}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        expect_in = self.d * (self.n_memory + 1)
        if self.net.n_inputs != expect_in:
            raise ValueError(
                f"network input size {self.net.n_inputs} does not match "
                f"d*(n_memory+1) = {expect_in}"
            )
        if self.net.n_outputs != self.d:
            raise ValueError(f"network output size {self.net.n_outputs} does not match d={self.d}")

    @property
    def memory_length(self) -> float:
        """Physical memory span covered by the input window."""
        return self.n_memory * self.dt

    @property
    def window_size(self) -> int:
        return self.n_memory + 1


@dataclass
class TrainingConfig:
    n_multistep: int
    epochs: int
    learning_rate: float = 1e-4
    batch_size: int = 1000  # 0 means full batch
    seed: int = 0

    def __post_init__(self):
        if self.n_multistep < 0:
            raise ValueError(f"n_multistep must be >= 0, got {self.n_multistep}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 0:
            raise ValueError(f"batch_size must be >= 0, got {self.batch_size}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")


@dataclass
class LossHistory:
    """Per-epoch mean training loss and the index of the best epoch."""

    losses: list[float]
    best_epoch: int

    def __post_init__(self):
        if not self.losses:
            raise ValueError("loss history must not be empty")
        if not 0 <= self.best_epoch < len(self.losses):
            raise ValueError(f"best_epoch {self.best_epoch} out of range")


def _as_window_batch(model: FmlModel, window: np.ndarray) -> tuple[np.ndarray, bool]:
    window = np.asarray(window, dtype=float)
    single = window.ndim == 2
    if single:
        window = window[None]
    if window.ndim != 3 or window.shape[1] != model.window_size or window.shape[2] != model.d:
        raise ValueError(
            f"window must have shape (B, {model.window_size}, {model.d}) or "
            f"({model.window_size}, {model.d}), got {np.asarray(window).shape}"
        )
    return window, single


def _step_batch(model: FmlModel, windows: np.ndarray) -> tuple[np.ndarray, net.ForwardCache]:
    # Flattening is oldest-to-newest: row j of the window is the state j
    # steps before the prediction target.
    b = windows.shape[0]
    out, cache = net.forward(model.net, windows.reshape(b, -1))
    pred = windows[:, -1, :] + out if model.residual else out
    return pred, cache


def model_step(model: FmlModel, window: np.ndarray) -> np.ndarray:
    """Predict the next state from the ``n_memory + 1`` most recent states.

    ``window`` is ordered oldest first; a batch of windows (B, n_memory+1, d)
    yields a batch of predictions.
    """
    windows, single = _as_window_batch(model, window)
    pred, _ = _step_batch(model, windows)
    return pred[0] if single else pred


def rollout(model: FmlModel, init_window: np.ndarray, steps: int) -> np.ndarray:
    """Iterate the model ``steps`` times from a warm-up window.

    Returns the warm-up states followed by the predictions, shape
    (n_memory + 1 + steps, d), batched if ``init_window`` is batched.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    windows, single = _as_window_batch(model, init_window)
    b = windows.shape[0]
    w = model.window_size
    out = np.empty((b, w + steps, model.d))
    out[:, :w] = windows
    for s in range(steps):
        pred, _ = _step_batch(model, out[:, s : s + w])
        if not np.isfinite(pred).all():
            raise FloatingPointError(f"rollout produced a non-finite prediction at step {s}")
        out[:, w + s] = pred
    return out[0] if single else out


def _check_windows(model: FmlModel, windows: np.ndarray) -> tuple[np.ndarray, int]:
    windows = np.asarray(windows, dtype=float)
    if windows.ndim != 3:
        raise ValueError(f"windows must be 3-D (N, n_data, d), got ndim={windows.ndim}")
    if windows.shape[0] < 1:
        raise ValueError("need at least one window")
    if windows.shape[2] != model.d:
        raise ValueError(f"windows have dimension {windows.shape[2]}, model expects {model.d}")
    k = windows.shape[1] - model.n_memory - 2
    if k < 0:
        raise ValueError(
            f"window length {windows.shape[1]} is too short for n_memory={model.n_memory}"
        )
    return windows, k


def _rollout_with_caches(model: FmlModel, windows: np.ndarray, k: int):
    n, n_data, d = windows.shape
    m = model.n_memory
    seq = np.empty_like(windows)
    seq[:, : m + 1] = windows[:, : m + 1]
    caches = []
    for step in range(k + 1):
        pred, cache = _step_batch(model, seq[:, step : step + m + 1])
        seq[:, m + 1 + step] = pred
        caches.append(cache)
    return seq, caches


def multistep_loss(model: FmlModel, windows: np.ndarray) -> float:
    """Mean squared rollout error, Eq.-style normalization 1/(N*(K+1)).

    Each window seeds the model with its first ``n_memory + 1`` entries; the
    remaining ``K + 1`` entries are the targets of consecutive predictions.
    """
    windows, k = _check_windows(model, windows)
    m = model.n_memory
    seq, _ = _rollout_with_caches(model, windows, k)
    diff = seq[:, m + 1 :] - windows[:, m + 1 :]
    return float(np.sum(diff * diff) / (windows.shape[0] * (k + 1)))


def multistep_loss_grad(
    model: FmlModel, windows: np.ndarray
) -> tuple[float, tuple[list[np.ndarray], list[np.ndarray]]]:
    """Loss and its exact gradient with respect to all network parameters.

    Gradients flow through every network application in the rollout, both
    via the parameters used at each step and via the predicted states fed
    back as inputs to later steps.
    """
    windows, k = _check_windows(model, windows)
    n, n_data, d = windows.shape
    m = model.n_memory
    seq, caches = _rollout_with_caches(model, windows, k)
    diff = seq[:, m + 1 :] - windows[:, m + 1 :]
    loss = float(np.sum(diff * diff) / (n * (k + 1)))

    grad_w = [np.zeros_like(w) for w in model.net.weights]
    grad_b = [np.zeros_like(b) for b in model.net.biases]
    g_seq = np.zeros_like(seq)
    g_seq[:, m + 1 :] = (2.0 / (n * (k + 1))) * diff
    for step in range(k, -1, -1):
        g_pred = g_seq[:, m + 1 + step]
        (gw, gb), g_input = net.backward(model.net, caches[step], g_pred)
        for i in range(len(grad_w)):
            grad_w[i] += gw[i]
            grad_b[i] += gb[i]
        g_seq[:, step : step + m + 1] += g_input.reshape(n, m + 1, d)
        if model.residual:
            g_seq[:, step + m] += g_pred
    if not all(np.isfinite(g).all() for g in [*grad_w, *grad_b]):
        raise FloatingPointError("multi-step loss gradient is non-finite")
    return loss, (grad_w, grad_b)


def train(
    model: FmlModel, training_set: TrainingSet, cfg: TrainingConfig
) -> tuple[FmlModel, LossHistory]:
    """Run Adam on the multi-step loss and return the best-loss parameters.

    One epoch is a full pass over all (optionally shuffled) minibatches; the
    recorded loss is the epoch mean.  No validation split is made: the best
    model is the one with the lowest recorded training loss.
    """
    if training_set.n_memory != model.n_memory:
        raise ValueError(
            f"training set has n_memory={training_set.n_memory}, model has {model.n_memory}"
        )
    if training_set.n_multistep != cfg.n_multistep:
        raise ValueError(
            f"training set has n_multistep={training_set.n_multistep}, "
            f"config has {cfg.n_multistep}"
        )
    if training_set.d != model.d:
        raise ValueError(f"training set dimension {training_set.d} != model dimension {model.d}")
    if training_set.dt != model.dt:
        raise ValueError(f"training set dt={training_set.dt} != model dt={model.dt}")
    if training_set.n_windows < 1:
        raise ValueError("training set is empty")

    windows = training_set.windows
    n = windows.shape[0]
    batch = n if cfg.batch_size == 0 else min(cfg.batch_size, n)
    work = replace(model, net=net.clone_params(model.net))
    state = net.AdamState.for_params(work.net, learning_rate=cfg.learning_rate)
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 1)))

    losses: list[float] = []
    best_loss = np.inf
    best_epoch = -1
    best_params = net.clone_params(work.net)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if batch < n else np.arange(n)
        loss_sum = 0.0
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            try:
                loss, grads = multistep_loss_grad(work, windows[idx])
                net.adam_step(state, work.net, grads)
            except FloatingPointError as exc:
                raise TrainingError(f"training diverged at epoch {epoch}: {exc}") from exc
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}")
            loss_sum += loss * len(idx)
        epoch_loss = loss_sum / n
        losses.append(epoch_loss)
        if epoch_loss < best_loss:
            best_loss = epoch_loss
            best_epoch = epoch
            best_params = net.clone_params(work.net)
    return replace(model, net=best_params), LossHistory(losses, best_epoch)


@dataclass
class MemorySweepReport:
    """Error versus memory step, and the smallest converged memory step."""

    candidates: list[int]
    errors: list[float]
    selected: int
    tol_factor: float
    models: list[FmlModel] = field(default_factory=list, repr=False)


def memory_sweep(
    make_training_set,
    candidates: list[int],
    make_model,
    cfg: TrainingConfig,
    evaluate_error,
    tol_factor: float = 1.25,
) -> MemorySweepReport:
    """Train one model per candidate memory step and pick the smallest
    whose held-out error is within ``tol_factor`` of the next candidate's.

    ``make_training_set(n_memory)`` and ``make_model(n_memory)`` must use
    fixed seeds so candidates differ only in the memory step;
    ``evaluate_error(model)`` returns the average prediction error on a
    held-out set of initial conditions.
    """
    if not candidates:
        raise ValueError("need at least one candidate memory step")
    if any(b <= a for a, b in zip(candidates, candidates[1:])):
        raise ValueError(f"candidates must be strictly increasing, got {candidates}")
    if candidates[0] < 0:
        raise ValueError("memory steps must be >= 0")
    errors = []
    models = []
    for n_memory in candidates:
        trained, _ = train(make_model(n_memory), make_training_set(n_memory), cfg)
        models.append(trained)
        errors.append(float(evaluate_error(trained)))
    selected = candidates[-1]
    for i in range(len(candidates) - 1):
        if errors[i] <= tol_factor * errors[i + 1]:
            selected = candidates[i]
            break
    return MemorySweepReport(list(candidates), errors, selected, tol_factor, models)


_MAGIC = b"FMLM"
_VERSION = 1


def save_fml_model(model: FmlModel, path, config_digest: str = "") -> None:
    """Write model metadata plus the network checkpoint to one file."""
    digest = config_digest.encode()
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<IIIdBH", _VERSION, model.d, model.n_memory, model.dt,
                            1 if model.residual else 0, len(digest)))
        f.write(digest)
        net.write_model(model.net, f)


def load_fml_model(path) -> tuple[FmlModel, str]:
    """Read a model file; returns the model and its stored config digest."""
    with open(path, "rb") as f:
        magic = _binio.read_exact(f, 4, "model magic", net.ModelFormatError)
        if magic != _MAGIC:
            raise net.ModelFormatError(f"bad model magic {magic!r}, expected {_MAGIC!r}")
        version, d, n_memory, dt, residual, digest_len = struct.unpack(
            "<IIIdBH", _binio.read_exact(f, 23, "model header", net.ModelFormatError)
        )
        if version != _VERSION:
            raise net.ModelFormatError(f"unsupported model format version {version}")
        digest = _binio.read_exact(f, digest_len, "config digest", net.ModelFormatError).decode()
        params = net.read_model(f)
    return FmlModel(d, n_memory, dt, params, residual=bool(residual)), digest
