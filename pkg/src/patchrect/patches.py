"""Apply patch images onto victim boxes and synthesize noise test patches."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .evaluation import BBox
from .raster import Image, resize, round_half_up


@dataclass(frozen=True)
class PatchPlacement:
    """How a patch sits on its victim box.

    ``scale_ratio`` is the patch height as a fraction of the victim box
    diagonal; the patch is centered on the box center, shifted by ``offset``
    pixels (dx, dy).
    """

    scale_ratio: float
    offset: tuple[int, int] = (0, 0)

    def __post_init__(self) -> None:
        if not 0.0 < self.scale_ratio <= 1.0:
            raise ValueError(f"scale_ratio must lie in (0, 1], got {self.scale_ratio}")


def patch_size_for(patch: Image, target: BBox, placement: PatchPlacement) -> tuple[int, int]:
    """Pasted (width, height) for a placement: height = ratio * box diagonal.

    The patch aspect ratio is preserved; both sides are rounded half up and
    floored at one pixel.
    """
    diagonal = math.hypot(target.w, target.h)
    if diagonal == 0:
        raise ValueError("target box is degenerate (zero diagonal)")
    height = int(round_half_up(placement.scale_ratio * diagonal))
    if height < 1:
        warnings.warn(
            f"patch would round below one pixel (ratio {placement.scale_ratio} on "
            f"diagonal {diagonal:.2f}); clamping to 1x1",
            stacklevel=2,
        )
        height = 1
    width = max(1, int(round_half_up(height * patch.width / patch.height)))
    return width, height


def paste_geometry(patch: Image, target: BBox, placement: PatchPlacement) -> tuple[int, int, int, int]:
    """(left, top, width, height) of the pasted patch, before border clipping."""
    pw, ph = patch_size_for(patch, target, placement)
    cx = target.x + target.w / 2.0 + placement.offset[0]
    cy = target.y + target.h / 2.0 + placement.offset[1]
    left = int(round_half_up(cx - pw / 2.0))
    top = int(round_half_up(cy - ph / 2.0))
    return left, top, pw, ph


def apply_patch(image: Image, patch: Image, target: BBox, placement: PatchPlacement) -> Image:
    """Paste a scaled patch over the target box center; overwrite, no blend.

    The patch is bilinearly scaled to the placement size, centered on the
    box center plus offset, and clipped at the image border.  Pixels outside
    the pasted rectangle are returned bit-identical.
    """
    left, top, pw, ph = paste_geometry(patch, target, placement)
    scaled = resize(patch, pw, ph)

    x0 = max(left, 0)
    y0 = max(top, 0)
    x1 = min(left + pw, image.width)
    y1 = min(top + ph, image.height)
    if x0 >= x1 or y0 >= y1:
        warnings.warn("patch placement falls entirely outside the image", stacklevel=2)
        return image
    out = image.pixels.copy()
    out[y0:y1, x0:x1, :] = scaled.pixels[y0 - top : y1 - top, x0 - left : x1 - left, :]
    return Image(out)


def synth_noise_patch(side: int, seed: int) -> Image:
    """Square of seeded uniform RGB noise; same (side, seed) is bit-identical."""
    if side < 1:
        raise ValueError(f"side must be >= 1, got {side}")
    rng = np.random.default_rng(seed)
    return Image(rng.random((side, side, 3)))
