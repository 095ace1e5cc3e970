"""Complementary checkerboard masks over an N-by-N grid of image cells.

The image is divided into N x N rectangular cells with cell boundaries at
``round(k * dim / N)`` (ties rounding up), so ragged remainders are absorbed
evenly instead of piling up in the last row/column.  Cell (row, col) belongs
to the first mask when ``(row + col)`` is even, to the second otherwise; the
two masks are exact complements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import BinaryMask, round_half_up


@dataclass(frozen=True)
class GridSpec:
    """Grid geometry for one image: ``n_grids`` cells per side."""

    n_grids: int
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        if not 1 <= self.n_grids <= min(self.width, self.height):
            raise ValueError(
                f"n_grids must lie in [1, min(width, height)] = [1, {min(self.width, self.height)}], "
                f"got {self.n_grids}"
            )


def _cell_index(n: int, length: int) -> np.ndarray:
    """For each pixel coordinate, the index of the grid cell containing it."""
    edges = round_half_up(np.arange(n + 1, dtype=np.float64) * (length / n))
    return np.repeat(np.arange(n, dtype=np.int64), np.diff(edges))


def checkerboard_masks(spec: GridSpec) -> tuple[BinaryMask, BinaryMask]:
    """Build the pair of complementary checkerboard masks for ``spec``.

    Returns ``(even_mask, odd_mask)`` where the even mask covers cells whose
    row + column parity is even.  Every pixel is covered by exactly one of
    the two masks.
    """
    rows = _cell_index(spec.n_grids, spec.height)
    cols = _cell_index(spec.n_grids, spec.width)
    parity = (rows[:, None] + cols[None, :]) & 1
    even = (parity == 0).astype(np.uint8)
    return BinaryMask(even), BinaryMask(1 - even)
