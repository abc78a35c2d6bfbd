"""Central finite differences shared by every module.

All derivative checks go through :func:`stencil` so that residuals computed
in different modules, one point at a time or in batches, are discretized
identically.
"""

from __future__ import annotations

import numpy as np


def axis_steps(x: np.ndarray, h: float, scaled: bool = True) -> np.ndarray:
    """Per-axis steps ``h * (1 + |x_i|)`` (or plain ``h``)."""
    if scaled:
        return h * (1.0 + np.abs(x))
    return np.full(x.shape, float(h))


def stencil(xs, h: float, scaled: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference nodes around each row of ``xs`` (shape ``(N, d)``).

    Returns ``nodes`` of shape ``(N, d, 2, d)`` (``[:, i, 0]`` is ``x + h_i e_i``,
    ``[:, i, 1]`` is ``x - h_i e_i``) and the realized spacings ``(N, d)``.
    Using the realized spacing keeps rounding in ``x +/- h`` out of the quotient.
    """
    xs = np.asarray(xs, dtype=float)
    n, d = xs.shape
    steps = axis_steps(xs, h, scaled)
    eye = np.eye(d)
    plus = xs[:, None, :] + steps[:, :, None] * eye[None]
    minus = xs[:, None, :] - steps[:, :, None] * eye[None]
    nodes = np.stack([plus, minus], axis=2)
    spacing = np.einsum("nii->ni", plus) - np.einsum("nii->ni", minus)
    return nodes, spacing


def batch_central_jacobian(fn_batch, xs, h: float, scaled: bool = True) -> np.ndarray:
    """Jacobians at every row of ``xs``; shape ``(N, m, d)``.

    ``fn_batch`` maps nodes of shape ``(N, d, 2, d)`` to values ``(N, d, 2, m)``.
    """
    nodes, spacing = stencil(xs, h, scaled)
    vals = np.asarray(fn_batch(nodes), dtype=float)
    diff = (vals[:, :, 0] - vals[:, :, 1]) / spacing[:, :, None]  # (N, d, m)
    return np.swapaxes(diff, 1, 2)


def central_jacobian(fn, x, h: float, scaled: bool = True) -> np.ndarray:
    """Jacobian ``d fn / d x`` with shape ``(len(fn(x)), len(x))``.

    Column ``i`` is ``(fn(x + h_i e_i) - fn(x - h_i e_i)) / (2 h_i)``.
    """
    x = np.asarray(x, dtype=float)
    nodes, spacing = stencil(x[None], h, scaled)
    cols = [
        (np.asarray(fn(nodes[0, i, 0]), dtype=float) - np.asarray(fn(nodes[0, i, 1]), dtype=float)) / spacing[0, i]
        for i in range(x.shape[0])
    ]
    return np.stack(cols, axis=-1)


def default_state_step(u) -> float:
    """Default Jacobian step for fields on hodograph space: ``1e-5 (1 + |u|_inf)``."""
    return 1e-5 * (1.0 + float(np.max(np.abs(u))))
