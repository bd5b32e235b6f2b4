"""Benchmark dynamical systems and ground-truth trajectory generation.

Five benchmark systems are provided: two small linear systems (one
monotonically decaying, one oscillatory), a damped pendulum, the Lorenz '63
system, and a 20-dimensional linear system assembled from fixed coupling
blocks.  Linear systems carry their matrix and support exact solutions via
the matrix exponential; everything else is integrated with classical RK4.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "BENCHMARK_IDS",
    "BlowUpError",
    "SystemSpec",
    "Trajectory",
    "make_benchmark",
    "eval_rhs",
    "rk4_step",
    "integrate",
    "integrate_batch",
    "propagate_linear",
    "reference_trajectory",
    "expm",
    "exact_linear_solution",
]

BENCHMARK_IDS = ("decay-linear", "osc-linear", "pendulum", "lorenz63", "large-linear")

#: Internal RK4 substeps per recorded step used for ground-truth generation
#: of nonlinear systems.
DEFAULT_SUBSTEPS = 10


class BlowUpError(RuntimeError):
    """Raised when integration produces a non-finite state."""


@dataclass
class SystemSpec:
    """A dynamical system dy/dt = f(y) with known right-hand side.

    ``params`` holds the named parameters of the benchmark; for linear
    systems it includes the matrix ``A`` and ``exact`` is set.  ``rhs``
    is vectorized over leading axes: it maps arrays of shape (..., n)
    to arrays of the same shape.
    """

    id: str
    n: int
    params: dict
    rhs: Callable[[np.ndarray], np.ndarray]
    exact: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"state dimension must be >= 1, got {self.n}")
        if self.exact:
            a = np.asarray(self.params.get("A"))
            if a.shape != (self.n, self.n):
                raise ValueError(
                    f"exact system requires an {self.n}x{self.n} matrix A, got shape {a.shape}"
                )


@dataclass
class Trajectory:
    """States sampled at a uniform time step.

    ``states`` has shape (length, dim); absolute times are deliberately
    not stored, only the spacing ``dt``.
    """

    states: np.ndarray
    dt: float

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2:
            raise ValueError(f"states must be 2-D (length, dim), got ndim={self.states.ndim}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]


def _linear_rhs(a: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    at = np.ascontiguousarray(a.T)

    def rhs(state: np.ndarray) -> np.ndarray:
        return np.asarray(state) @ at

    return rhs


def _pendulum_rhs(alpha, beta) -> Callable[[np.ndarray], np.ndarray]:
    def rhs(state: np.ndarray) -> np.ndarray:
        state = np.asarray(state)
        y1 = state[..., 0]
        y2 = state[..., 1]
        return np.stack([y2, -alpha * y2 - beta * np.sin(y1)], axis=-1)

    return rhs


def _lorenz_rhs(sigma, rho, beta) -> Callable[[np.ndarray], np.ndarray]:
    def rhs(state: np.ndarray) -> np.ndarray:
        state = np.asarray(state)
        x = state[..., 0]
        y = state[..., 1]
        z = state[..., 2]
        return np.stack([sigma * (y - x), x * (rho - z) - y, x * y - beta * z], axis=-1)

    return rhs


def _osc_linear_matrix(alpha: float) -> np.ndarray:
    return np.array([[-1.0 / alpha, 1.0], [-1.0, -1.0 / alpha]])


# Fixed 10x10 coupling blocks of the 20-dimensional linear benchmark,
# scaled by 1e-3 at assembly time.
_SIGMA_11 = [
    [-6.09, 5.79, -0.945, -12.1, 9.38, -12.4, 4.92, 3.71, 1.17, 4.73],
    [-9.57, -8.88, -12.1, -12.9, 5.11, 26.5, -7.33, -8.01, -21.6, -10.2],
    [-0.733, 6.2, 10.7, -6.06, -7.07, -1.7, -16.4, 6.69, -1.59, 7.69],
    [7.83, 12.5, 5.77, -14.9, -17.8, -1.01, -4.05, -15.0, -6.61, -4.94],
    [8.1, 4.13, 4.21, 23.3, -4.63, 1.77, -14.9, 17.9, -17.1, -8.19],
    [-7.68, 6.98, 27.6, 19.0, 20.9, 12.2, 15.6, -11.2, -3.56, -2.47],
    [-14.9, -5.73, -19.7, -8.77, -9.17, -2.95, -9.48, -2.95, 5.43, 15.4],
    [-1.84, 2.05, -1.98, 3.83, -4.06, 7.72, 4.04, -13.7, 20.3, 0.509],
    [12.1, 19.7, -14.3, 12.6, -4.67, 9.72, 5.87, 0.664, -10.8, -18.2],
    [3.07, 3.65, 3.88, 7.44, 12.7, 13.5, -6.66, -23.9, -11.7, 16.6],
]

_SIGMA_12 = [
    [11.7, -12.3, -8.87, -6.86, -9.6, 11.0, 25.6, -0.155, 17.8, -10.9],
    [12.9, 3.28, 2.84, 3.35, 16.6, 5.96, 6.99, -20.2, 8.37, -8.87],
    [-0.154, -16.5, 12.1, 0.381, 11.2, -2.59, 12.8, 3.32, -10.9, -3.81],
    [6.49, 15.8, -0.273, 9.05, -3.15, 0.976, -7.35, 0.889, 6.41, 15.6],
    [4.86, -1.52, 0.118, 17.8, -5.08, -4.96, -2.89, 3.0, 22.4, 16.4],
    [7.83, -9.66, -2.09, 5.97, 3.97, 19.2, 4.03, -15.3, -8.5, -15.8],
    [-4.61, -4.98, 17.0, -14.0, -17.5, 0.104, -27.5, 10.9, -17.9, -5.9],
    [3.88, 14.0, -2.63, -7.27, -21.0, -0.403, -2.18, -22.0, 2.01, -2.45],
    [14.4, -4.65, -8.67, -23.2, -2.73, 9.58, -13.9, 0.415, 10.3, 17.5],
    [-16.8, 8.18, -12.3, 14.2, -18.4, -10.2, -11.4, -1.99, -2.65, -2.34],
]

_SIGMA_21 = [
    [-3.51, -4.91, -4.51, -15.8, -12.0, -5.72, -9.52, -14.3, 0.745, -11.8],
    [1.8, 2.07, 8.78, 5.3, -5.25, 5.7, 0.0957, 9.77, 2.17, 12.8],
    [-9.87, 5.19, 0.884, 2.59, -7.95, 5.56, 6.41, 16.4, 15.6, 14.3],
    [10.4, 7.14, 15.5, -6.6, 5.33, -3.37, 2.8, -9.61, 8.0, -16.8],
    [15.5, 19.6, -1.1, 0.6, 8.38, 7.62, 3.43, 1.28, 10.3, -4.76],
    [0.119, -9.43, -6.6, -9.99, -10.5, 17.8, 13.5, -6.63, -0.566, -1.81],
    [-6.77, -1.42, 7.46, 3.32, 11.7, 1.3, -6.21, 6.9, 3.89, 18.9],
    [2.93, 15.1, -4.65, 11.1, 9.13, -9.58, -7.04, 6.88, -4.07, 10.2],
    [-6.02, 14.0, -5.91, -4.92, 0.851, 0.652, -2.57, 0.835, -5.14, 10.6],
    [1.41, 5.8, -2.31, 6.17, 13.3, 3.57, 15.9, -0.753, -0.818, -10.3],
]

_SIGMA_22 = [
    [1500.0, 124.0, 814.0, -104.0, -179.0, -223.0, -731.0, -189.0, -400.0, 242.0],
    [124.0, 836.0, 679.0, 277.0, 197.0, -515.0, -52.1, -273.0, 101.0, 301.0],
    [814.0, 679.0, 1500.0, 651.0, 755.0, -605.0, -379.0, -546.0, -225.0, 223.0],
    [-104.0, 277.0, 651.0, 1960.0, 720.0, -782.0, -299.0, -775.0, -180.0, 506.0],
    [-179.0, 197.0, 755.0, 720.0, 2290.0, -973.0, 518.0, -19.1, -604.0, -369.0],
    [-223.0, -515.0, -605.0, -782.0, -973.0, 1290.0, -400.0, 412.0, 314.0, -420.0],
    [-731.0, -52.1, -379.0, -299.0, 518.0, -400.0, 1960.0, 68.3, 455.0, -316.0],
    [-189.0, -273.0, -546.0, -775.0, -19.1, 412.0, 68.3, 576.0, -53.6, -332.0],
    [-400.0, 101.0, -225.0, -180.0, -604.0, 314.0, 455.0, -53.6, 1030.0, 265.0],
    [242.0, 301.0, 223.0, 506.0, -369.0, -420.0, -316.0, -332.0, 265.0, 1090.0],
]


def sigma_block(name: str) -> np.ndarray:
    """Return one of the 1e-3-scaled coupling blocks ('11', '12', '21', '22')."""
    table = {"11": _SIGMA_11, "12": _SIGMA_12, "21": _SIGMA_21, "22": _SIGMA_22}[name]
    block = 1e-3 * np.array(table)
    assert block.shape == (10, 10), f"coupling block {name} has shape {block.shape}"
    return block


def _large_linear_matrix() -> np.ndarray:
    s11 = sigma_block("11")
    s12 = sigma_block("12")
    s21 = sigma_block("21")
    s22 = sigma_block("22")
    eye = np.eye(10)
    return np.block([[s11, eye + s12], [-(eye + s21), -s22]])


# Per-benchmark parameter names that may be overridden.
_OVERRIDABLE = {
    "decay-linear": {"A"},
    "osc-linear": {"alpha"},
    "pendulum": {"alpha", "beta"},
    "lorenz63": {"sigma", "rho", "beta"},
    "large-linear": {"A"},
}


def make_benchmark(system_id: str, overrides: dict | None = None) -> SystemSpec:
    """Build one of the five benchmark systems with its default parameters.

    ``overrides`` may replace only parameters the system defines (see
    :data:`BENCHMARK_IDS` for the identifiers).  Pendulum parameters may be
    arrays, in which case they broadcast against a batch of states; this is
    how per-trajectory parameter randomization is realized.
    """
    if system_id not in BENCHMARK_IDS:
        raise ValueError(f"unknown benchmark id {system_id!r}; expected one of {BENCHMARK_IDS}")
    overrides = dict(overrides or {})
    unknown = set(overrides) - _OVERRIDABLE[system_id]
    if unknown:
        raise ValueError(
            f"benchmark {system_id!r} has no parameter(s) {sorted(unknown)}; "
            f"overridable: {sorted(_OVERRIDABLE[system_id])}"
        )

    if system_id == "decay-linear":
        a = np.asarray(overrides.get("A", [[1.0, -4.0], [4.0, -7.0]]), dtype=float)
        _check_square(a)
        return SystemSpec(system_id, a.shape[0], {"A": a}, _linear_rhs(a), exact=True)

    if system_id == "osc-linear":
        alpha = float(overrides.get("alpha", 64.0))
        a = _osc_linear_matrix(alpha)
        return SystemSpec(system_id, 2, {"alpha": alpha, "A": a}, _linear_rhs(a), exact=True)

    if system_id == "pendulum":
        alpha = overrides.get("alpha", 0.1)
        beta = overrides.get("beta", 9.80665)
        params = {"alpha": alpha, "beta": beta}
        return SystemSpec(system_id, 2, params, _pendulum_rhs(alpha, beta))

    if system_id == "lorenz63":
        sigma = float(overrides.get("sigma", 10.0))
        rho = float(overrides.get("rho", 28.0))
        beta = float(overrides.get("beta", 8.0 / 3.0))
        params = {"sigma": sigma, "rho": rho, "beta": beta}
        return SystemSpec(system_id, 3, params, _lorenz_rhs(sigma, rho, beta))

    # large-linear
    a = np.asarray(overrides.get("A", _large_linear_matrix()), dtype=float)
    _check_square(a)
    return SystemSpec(system_id, a.shape[0], {"A": a}, _linear_rhs(a), exact=True)


def _check_square(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix A must be square, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix A contains non-finite entries")


def eval_rhs(system: SystemSpec, state: np.ndarray) -> np.ndarray:
    """Evaluate the right-hand side f(state); vectorized over leading axes."""
    state = np.asarray(state, dtype=float)
    if state.shape[-1] != system.n:
        raise ValueError(f"state has dimension {state.shape[-1]}, system expects {system.n}")
    return system.rhs(state)


def _rk4_increment(rhs, state: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(state)
    k2 = rhs(state + 0.5 * h * k1)
    k3 = rhs(state + 0.5 * h * k2)
    k4 = rhs(state + h * k3)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step(system: SystemSpec, state: np.ndarray, h: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of size ``h``."""
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    state = np.asarray(state, dtype=float)
    if state.shape[-1] != system.n:
        raise ValueError(f"state has dimension {state.shape[-1]}, system expects {system.n}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = _rk4_increment(system.rhs, state, h)
    if not np.isfinite(out).all():
        raise BlowUpError(f"non-finite state after RK4 step from {state!r} with h={h}")
    return out


def integrate(
    system: SystemSpec,
    y0: np.ndarray,
    dt: float,
    steps: int,
    substeps: int = DEFAULT_SUBSTEPS,
) -> Trajectory:
    """Integrate from ``y0`` and record ``steps + 1`` states at spacing ``dt``.

    Each recorded step is covered by ``substeps`` internal RK4 steps.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    y0 = np.asarray(y0, dtype=float)
    states = integrate_batch(system, y0[None, :], dt, steps, substeps)
    if not np.isfinite(states).all():
        bad = int(np.flatnonzero(~np.isfinite(states[0]).all(axis=-1))[0])
        raise BlowUpError(f"integration blew up at recorded step {bad}")
    return Trajectory(states[0], dt)


def integrate_batch(
    system: SystemSpec,
    y0s: np.ndarray,
    dt: float,
    steps: int,
    substeps: int = DEFAULT_SUBSTEPS,
) -> np.ndarray:
    """RK4-integrate a batch of initial conditions; returns (m, steps+1, n).

    Non-finite values are propagated rather than raised so that callers can
    discard blown-up trajectories individually.
    """
    y0s = np.asarray(y0s, dtype=float)
    if y0s.ndim != 2 or y0s.shape[1] != system.n:
        raise ValueError(f"y0s must have shape (m, {system.n}), got {y0s.shape}")
    h = dt / substeps
    out = np.empty((y0s.shape[0], steps + 1, system.n))
    out[:, 0] = y0s
    current = y0s
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            for _ in range(substeps):
                current = _rk4_increment(system.rhs, current, h)
            out[:, k + 1] = current
    return out


def propagate_linear(system: SystemSpec, y0s: np.ndarray, dt: float, steps: int) -> np.ndarray:
    """Advance a linear system by repeated multiplication with expm(dt*A).

    ``y0s`` may be a single state (n,) or a batch (m, n); the result gains
    a time axis of length ``steps + 1`` before the state axis.
    """
    if not system.exact:
        raise ValueError(f"system {system.id!r} is not linear; no exact propagator")
    y0s = np.asarray(y0s, dtype=float)
    single = y0s.ndim == 1
    if single:
        y0s = y0s[None, :]
    m = expm(dt * np.asarray(system.params["A"], dtype=float))
    mt = np.ascontiguousarray(m.T)
    out = np.empty((y0s.shape[0], steps + 1, system.n))
    out[:, 0] = y0s
    current = y0s
    for k in range(steps):
        current = current @ mt
        out[:, k + 1] = current
    return out[0] if single else out


def reference_trajectory(
    system: SystemSpec,
    y0: np.ndarray,
    dt: float,
    steps: int,
    substeps: int = DEFAULT_SUBSTEPS,
) -> Trajectory:
    """Ground-truth trajectory: exact propagation for linear systems, RK4 otherwise.

    This is the same process used to generate training data, so prediction
    errors measured against it reflect only model-vs-data mismatch.
    """
    if system.exact:
        return Trajectory(propagate_linear(system, np.asarray(y0, dtype=float), dt, steps), dt)
    return integrate(system, y0, dt, steps, substeps)


# Coefficients of the degree-13 Pade approximant to exp(x) and the largest
# scaled norm for which it stays at machine accuracy.
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a degree-13 Pade core."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expm expects a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("expm input contains non-finite entries")
    n = a.shape[0]
    norm = np.linalg.norm(a, 1)
    squarings = 0
    if norm > _THETA13:
        squarings = int(np.ceil(np.log2(norm / _THETA13)))
        a = a / (2.0**squarings)
    b = _PADE13
    eye = np.eye(n)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye
    r = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    return r


def exact_linear_solution(system: SystemSpec, y0: np.ndarray, t: float) -> np.ndarray:
    """Exact solution expm(t*A) @ y0 of a linear benchmark at time ``t >= 0``."""
    if not system.exact:
        raise ValueError(f"system {system.id!r} has no exact solution")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (system.n,):
        raise ValueError(f"y0 must have shape ({system.n},), got {y0.shape}")
    return expm(t * np.asarray(system.params["A"], dtype=float)) @ y0
