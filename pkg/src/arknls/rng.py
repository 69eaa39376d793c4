"""Deterministic random streams shared by initialization and data synthesis.

The generator is PCG64 (numpy's default 64-bit generator), seeded directly,
so a seed pins the exact bit stream.  Matrices are filled in column-major
order and Gaussians come from an explicit Box-Muller transform rather than
numpy's ziggurat, keeping every drawn value a pure function of the seed and
the documented draw order.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng", "uniform_matrix", "gaussian_matrix"]


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream for the given seed."""
    return np.random.Generator(np.random.PCG64(seed))


def uniform_matrix(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """uniform(0, 1) matrix whose entries are drawn column by column."""
    return rng.random(rows * cols).reshape((rows, cols), order="F")


def _box_muller(rng: np.random.Generator, count: int) -> np.ndarray:
    # One uniform pair (a, b) yields the consecutive pair
    # (sqrt(-2 ln a) cos(2 pi b), sqrt(-2 ln a) sin(2 pi b)).
    # a is mapped into (0, 1] so the log never sees zero.
    pairs = (count + 1) // 2
    a = 1.0 - rng.random(pairs)
    b = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log(a))
    angle = 2.0 * np.pi * b
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count]


def gaussian_matrix(
    rng: np.random.Generator, rows: int, cols: int, std: float
) -> np.ndarray:
    """Zero-mean Gaussian matrix filled column by column."""
    return std * _box_muller(rng, rows * cols).reshape((rows, cols), order="F")
