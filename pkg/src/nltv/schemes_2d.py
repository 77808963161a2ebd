"""Closed-form evaluation of the nonlocal TV functional for 2D images.

A piecewise-constant image on the n x n grid of the unit square evaluates to
a weighted sum of absolute differences over edge-adjacent (lateral) and
corner-adjacent (diagonal) cell pairs. The weights depend on the kernel:

* disc kernel:   lateral 4/(3 pi n),   diagonal 1/(3 pi n)
* square kernel: lateral (3 ln(sqrt2+1) - 3 ln(sqrt2-1) - 2(sqrt2-1))/(12 n),
                 diagonal (sqrt2 - 1)/(3 n)

Axis convention: ``coeffs[i, j]`` is the value on the cell with x-interval
((i-1)/n, i/n) and y-interval ((j-1)/n, j/n), zero-based in the array. The
stencil is symmetric under swapping the axes, so transposing the coefficient
matrix never changes the value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import KernelKind

# ordered-pair geometric integrals for the disc kernel, cells at unit scale;
# the assembled weights below are (2 n^2 / pi) times these
_LATERAL_J = 2.0 / 3.0
_DIAGONAL_J = 1.0 / 6.0

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Image2D:
    """Cell values on the n x n grid of the unit square."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"image must be a square matrix, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("image must have at least one cell")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image values must be finite")
        object.__setattr__(self, "coeffs", arr)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]


@dataclass(frozen=True)
class StencilWeights:
    """Lateral/diagonal pair weights of the 2D scheme at grid size n."""

    lateral: float
    diagonal: float
    kernel_kind: KernelKind
    n: int

    def __post_init__(self):
        if not self.lateral > self.diagonal > 0.0:
            raise ValueError(
                f"weights must satisfy lateral > diagonal > 0, got "
                f"lateral={self.lateral!r} diagonal={self.diagonal!r}")


def lateral_overlap_integral(n: int) -> float:
    """Geometric quadruple integral of 1/|x - y| over a laterally adjacent
    cell pair restricted to the disc of radius 1/n (one orientation)."""
    if n < 1:
        raise ValueError("grid size must be at least 1")
    return _LATERAL_J / float(n) ** 3


def diagonal_overlap_integral(n: int) -> float:
    """Same as :func:`lateral_overlap_integral` for a diagonally adjacent
    pair."""
    if n < 1:
        raise ValueError("grid size must be at least 1")
    return _DIAGONAL_J / float(n) ** 3


def stencil_weights(kind: KernelKind, n: int) -> StencilWeights:
    """Closed-form pair weights for the disc or square kernel matched to an
    n x n grid."""
    if n < 2:
        raise ValueError("the 2D scheme needs a grid of size at least 2")
    if kind is KernelKind.DISC2D:
        lateral = 4.0 / (3.0 * math.pi * n)
        diagonal = 1.0 / (3.0 * math.pi * n)
    elif kind is KernelKind.SQUARE2D:
        lateral = (3.0 * math.log(_SQRT2 + 1.0) - 3.0 * math.log(_SQRT2 - 1.0)
                   - 2.0 * (_SQRT2 - 1.0)) / (12.0 * n)
        diagonal = (_SQRT2 - 1.0) / (3.0 * n)
    else:
        raise ValueError(f"2D stencil weights require a 2D kernel, got {kind!r}")
    return StencilWeights(lateral=lateral, diagonal=diagonal, kernel_kind=kind, n=n)


def image_pair_sums(f: Image2D) -> tuple:
    """(lateral, diagonal) sums of absolute differences over adjacent pairs.

    Pairs outside the grid contribute nothing; there is no wrap-around or
    reflection at the boundary.
    """
    a = f.coeffs
    lateral = float(np.abs(a[:, 1:] - a[:, :-1]).sum()
                    + np.abs(a[1:, :] - a[:-1, :]).sum())
    diagonal = float(np.abs(a[1:, 1:] - a[:-1, :-1]).sum()
                     + np.abs(a[:-1, 1:] - a[1:, :-1]).sum())
    return lateral, diagonal


def eval_image(f: Image2D, kind: KernelKind) -> float:
    """Nonlocal TV of a piecewise-constant image under the matched disc or
    square kernel."""
    if f.n < 2:
        raise ValueError("the 2D scheme needs a grid of size at least 2")
    w = stencil_weights(kind, f.n)
    lateral, diagonal = image_pair_sums(f)
    return w.lateral * lateral + w.diagonal * diagonal
