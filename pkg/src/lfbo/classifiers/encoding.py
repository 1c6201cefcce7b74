"""Input encoding shared by the neural network models.

Continuous dimensions are rescaled to [0, 1] using the search-space
bounds; categorical dimensions become one-hot blocks.  Tree models skip
this and consume raw points (integer codes included) directly.
"""

from __future__ import annotations

import numpy as np

from ..core import SearchSpace

__all__ = ["encoded_width", "encode_inputs"]


def encoded_width(space: SearchSpace) -> int:
    """Number of columns produced by :func:`encode_inputs`."""
    counts = space.category_counts
    return sum(counts.values()) + (space.dims - len(counts))


def encode_inputs(space: SearchSpace, points: np.ndarray) -> np.ndarray:
    """Encode an ``(n, dims)`` batch of raw points for a neural network."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != space.dims:
        raise ValueError(f"expected {space.dims} columns, got {points.shape[1]}")
    counts = space.category_counts
    cols: list[np.ndarray] = []
    bounds = iter(space.bounds)
    for i in range(space.dims):
        if i in counts:
            onehot = np.zeros((points.shape[0], counts[i]))
            onehot[np.arange(points.shape[0]), points[:, i].astype(int)] = 1.0
            cols.append(onehot)
        else:
            lo, hi = next(bounds)
            cols.append(((points[:, i] - lo) / (hi - lo))[:, None])
    return np.concatenate(cols, axis=1)
