"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ContractError


def check_vector(value, size: int | None = None, name: str = "vector") -> np.ndarray:
    """Return ``value`` as a finite 1-D float array, optionally of fixed length."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"{name} must have length {size}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries: {arr.tolist()}")
    return arr


def parse_vector(text: str, size: int | None = None, name: str = "vector") -> np.ndarray:
    """Parse ``"1,2.5,-3"`` into a float array."""
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValueError(f"cannot parse {name} {text!r}: {exc}") from None
    return check_vector(values, size, name)


class Axis(NamedTuple):
    """One axis of a rectangular grid: ``n`` uniformly spaced nodes on ``[lo, hi]``."""

    lo: float
    hi: float
    n: int

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1) if self.n > 1 else 0.0

    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    def to_dict(self) -> dict:
        return {"min": self.lo, "max": self.hi, "n": self.n}


def check_axis(lo, hi, n) -> Axis:
    lo, hi, n = float(lo), float(hi), int(n)
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError(f"grid bounds must be finite, got [{lo}, {hi}]")
    if n < 1:
        raise ValueError(f"grid axis needs at least one node, got n={n}")
    if n > 1 and not hi > lo:
        raise ValueError(f"grid axis needs max > min, got [{lo}, {hi}]")
    return Axis(lo, hi, n)


def parse_grid(grid, name: str = "grid") -> tuple[Axis, ...]:
    """Parse ``"min:max:n[,min:max:n...]"`` or a list of axis dicts/tuples."""
    if isinstance(grid, str):
        axes = []
        for chunk in grid.split(","):
            parts = chunk.split(":")
            if len(parts) != 3:
                raise ValueError(f"{name} axis {chunk!r} is not of the form min:max:n")
            try:
                axes.append(check_axis(float(parts[0]), float(parts[1]), int(parts[2])))
            except ValueError as exc:
                raise ValueError(f"bad {name} axis {chunk!r}: {exc}") from None
        return tuple(axes)
    axes = []
    for item in grid:
        if isinstance(item, Axis):
            axes.append(item)
        elif isinstance(item, dict):
            axes.append(check_axis(item["min"], item["max"], item["n"]))
        else:
            axes.append(check_axis(*item))
    return tuple(axes)


def format_grid(axes) -> str:
    return ",".join(f"{a.lo!r}:{a.hi!r}:{a.n}" for a in axes)


def grid_points(axes) -> np.ndarray:
    """Grid nodes as an array of shape ``(n_1, ..., n_d, d)`` in lexicographic order."""
    mesh = np.meshgrid(*[a.nodes() for a in axes], indexing="ij")
    return np.stack(mesh, axis=-1)


def check_positive(value, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ContractError(f"{name} must be positive, got {value}")
    return value
