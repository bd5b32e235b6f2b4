"""Small helpers shared by the binary dataset and checkpoint formats."""

from __future__ import annotations

import numpy as np


def read_exact(f, n: int, what: str, error_cls: type[Exception]) -> bytes:
    """Read exactly ``n`` bytes or raise ``error_cls`` naming the missing field."""
    data = f.read(n)
    if len(data) != n:
        raise error_cls(f"truncated file while reading {what} (wanted {n} bytes, got {len(data)})")
    return data


def read_floats(f, count: int, what: str, error_cls: type[Exception]) -> np.ndarray:
    """Read ``count`` little-endian float64 values as a 1-D array."""
    raw = read_exact(f, 8 * count, what, error_cls)
    return np.frombuffer(raw, dtype="<f8").astype(float, copy=True).reshape(count)
