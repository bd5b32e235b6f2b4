"""Fully connected feedforward network with hand-written reverse-mode gradients.

Hidden layers use tanh, the output layer is affine.  ``backward`` returns
gradients with respect to both the parameters and the input, which is what
lets the rollout training loss propagate error through repeated network
application.  Everything is float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import _binio

__all__ = [
    "MlpParams",
    "ForwardCache",
    "AdamState",
    "ModelFormatError",
    "init_mlp",
    "forward",
    "backward",
    "adam_step",
    "parameter_count",
    "clone_params",
    "save_model",
    "load_model",
]

_ACTIVATIONS = ("tanh",)


class ModelFormatError(ValueError):
    """Raised when a checkpoint file is malformed or inconsistent."""


@dataclass
class MlpParams:
    """Weights and biases of a feedforward network.

    ``weights[i]`` has shape (fan_in, fan_out) so a batch of rows is pushed
    through as ``x @ W + b``.
    """

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "tanh"

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unsupported activation {self.activation!r}")
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least input and output layer sizes")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expect = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if w.shape != expect:
                raise ValueError(f"weight {i} has shape {w.shape}, expected {expect}")
            if b.shape != (self.layer_sizes[i + 1],):
                raise ValueError(f"bias {i} has shape {b.shape}, expected ({self.layer_sizes[i+1]},)")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]


@dataclass
class ForwardCache:
    """Per-layer inputs retained by ``forward`` for the backward pass."""

    layer_inputs: list[np.ndarray]
    squeezed: bool


def init_mlp(layer_sizes: list[int], rng: np.random.Generator) -> MlpParams:
    """Initialize weights uniformly in +-1/sqrt(fan_in); biases start at zero."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ValueError(f"need >= 2 layer sizes, got {sizes}")
    if any(s < 1 for s in sizes):
        raise ValueError(f"layer sizes must be >= 1, got {sizes}")
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        scale = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-scale, scale, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(sizes, weights, biases)


def parameter_count(params: MlpParams) -> int:
    return sum(w.size + b.size for w, b in zip(params.weights, params.biases))


def clone_params(params: MlpParams) -> MlpParams:
    return MlpParams(
        list(params.layer_sizes),
        [w.copy() for w in params.weights],
        [b.copy() for b in params.biases],
        params.activation,
    )


def forward(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the network on a single input (n_in,) or a batch (B, n_in).

    Returns the output and a cache for ``backward``.  ``params`` is not
    modified.
    """
    x = np.asarray(x, dtype=float)
    squeezed = x.ndim == 1
    if squeezed:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.n_inputs:
        raise ValueError(f"input has shape {x.shape}, expected (B, {params.n_inputs})")
    layer_inputs = [x]
    n_layers = len(params.weights)
    for i in range(n_layers - 1):
        x = np.tanh(x @ params.weights[i] + params.biases[i])
        layer_inputs.append(x)
    out = x @ params.weights[-1] + params.biases[-1]
    if not np.isfinite(out).all():
        raise FloatingPointError("network produced non-finite output")
    cache = ForwardCache(layer_inputs, squeezed)
    return (out[0] if squeezed else out), cache


def backward(
    params: MlpParams, cache: ForwardCache, grad_out: np.ndarray
) -> tuple[tuple[list[np.ndarray], list[np.ndarray]], np.ndarray]:
    """Reverse-mode gradients of sum(output * grad_out).

    Returns ``((grad_weights, grad_biases), grad_input)``.  For a batched
    cache, parameter gradients are summed over the batch and ``grad_input``
    is per sample.
    """
    grad_out = np.asarray(grad_out, dtype=float)
    if cache.squeezed:
        grad_out = grad_out[None, :]
    acts = cache.layer_inputs
    if len(acts) != len(params.weights):
        raise ValueError(
            f"cache holds {len(acts)} layer inputs, expected {len(params.weights)}; "
            "was it produced by forward() on these params?"
        )
    if grad_out.shape != (acts[0].shape[0], params.n_outputs):
        raise ValueError(
            f"grad_out has shape {grad_out.shape}, expected ({acts[0].shape[0]}, {params.n_outputs})"
        )
    grad_w = [None] * len(params.weights)
    grad_b = [None] * len(params.weights)
    delta = grad_out
    for i in range(len(params.weights) - 1, -1, -1):
        if acts[i].shape[1] != params.weights[i].shape[0]:
            raise ValueError(f"cache/parameter shape mismatch at layer {i}")
        grad_w[i] = acts[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        delta = delta @ params.weights[i].T
        if i > 0:
            delta = delta * (1.0 - acts[i] ** 2)  # tanh'
    grad_input = delta[0] if cache.squeezed else delta
    return (grad_w, grad_b), grad_input


@dataclass
class AdamState:
    """Adam moment accumulators shaped like the parameters they update."""

    m_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_weights: list[np.ndarray]
    v_biases: list[np.ndarray]
    step: int = 0
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: MlpParams, learning_rate: float = 1e-4, **kw) -> "AdamState":
        return cls(
            [np.zeros_like(w) for w in params.weights],
            [np.zeros_like(b) for b in params.biases],
            [np.zeros_like(w) for w in params.weights],
            [np.zeros_like(b) for b in params.biases],
            learning_rate=learning_rate,
            **kw,
        )


def adam_step(
    state: AdamState,
    params: MlpParams,
    grads: tuple[list[np.ndarray], list[np.ndarray]],
) -> tuple[MlpParams, AdamState]:
    """One Adam update with bias correction; mutates params and state in place."""
    grad_w, grad_b = grads
    for g in [*grad_w, *grad_b]:
        if not np.isfinite(g).all():
            raise FloatingPointError("non-finite gradient passed to adam_step")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1**state.step
    corr2 = 1.0 - b2**state.step
    scale = state.learning_rate / corr1
    for target, g, m, v in (
        (params.weights, grad_w, state.m_weights, state.v_weights),
        (params.biases, grad_b, state.m_biases, state.v_biases),
    ):
        for i in range(len(target)):
            m[i] *= b1
            m[i] += (1.0 - b1) * g[i]
            v[i] *= b2
            v[i] += (1.0 - b2) * g[i] ** 2
            target[i] -= scale * m[i] / (np.sqrt(v[i] / corr2) + state.eps)
    return params, state


_MAGIC = b"FMNN"
_VERSION = 1


def save_model(params: MlpParams, path) -> None:
    """Write a self-describing binary checkpoint (bit-exact round trip)."""
    with open(path, "wb") as f:
        write_model(params, f)


def load_model(path) -> MlpParams:
    with open(path, "rb") as f:
        return read_model(f)


def read_model(f) -> MlpParams:
    """Read a checkpoint from an open binary stream (see ``save_model``)."""
    magic = _binio.read_exact(f, 4, "model magic", ModelFormatError)
    if magic != _MAGIC:
        raise ModelFormatError(f"bad model magic {magic!r}, expected {_MAGIC!r}")
    version, act_len = struct.unpack("<IB", _binio.read_exact(f, 5, "model header", ModelFormatError))
    if version != _VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    activation = _binio.read_exact(f, act_len, "activation tag", ModelFormatError).decode()
    if activation not in _ACTIVATIONS:
        raise ModelFormatError(f"unknown activation tag {activation!r}")
    (n_sizes,) = struct.unpack("<I", _binio.read_exact(f, 4, "layer count", ModelFormatError))
    if n_sizes < 2:
        raise ModelFormatError(f"layer count {n_sizes} is too small")
    sizes = list(
        struct.unpack(f"<{n_sizes}I", _binio.read_exact(f, 4 * n_sizes, "layer sizes", ModelFormatError))
    )
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = _binio.read_floats(f, fan_in * fan_out, "weight payload", ModelFormatError)
        b = _binio.read_floats(f, fan_out, "bias payload", ModelFormatError)
        weights.append(w.reshape(fan_in, fan_out))
        biases.append(b)
    extra = f.read(1)
    if extra:
        raise ModelFormatError("recorded layer sizes disagree with payload length (trailing bytes)")
    return MlpParams(sizes, weights, biases, activation)


def write_model(params: MlpParams, f) -> None:
    """Write a checkpoint to an open binary stream (see ``save_model``)."""
    act = params.activation.encode()
    f.write(_MAGIC)
    f.write(struct.pack("<IB", _VERSION, len(act)))
    f.write(act)
    f.write(struct.pack("<I", len(params.layer_sizes)))
    f.write(struct.pack(f"<{len(params.layer_sizes)}I", *params.layer_sizes))
    for w, b in zip(params.weights, params.biases):
        f.write(np.ascontiguousarray(w).tobytes())
        f.write(np.ascontiguousarray(b).tobytes())
