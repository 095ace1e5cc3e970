"""Raster data model: RGB images, binary masks, distance maps, PNG I/O.

All pixel math in this package runs on float64 arrays normalized to [0, 1];
quantization to 8-bit happens only at file and wire boundaries.  Values are
stored row-major as (height, width, channel) arrays, and every container is
immutable after construction so instances can be shared freely across
threads.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as _PILImage
from PIL import UnidentifiedImageError


class PngError(Exception):
    """Base class for PNG decoding problems."""


class PngDecodeError(PngError):
    """The bytes are not a decodable PNG."""


class PngColorTypeError(PngError):
    """The PNG uses a color type outside RGB/RGBA."""


def round_half_up(x):
    """Round to the nearest integer with ties going up (0.5 -> 1)."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


@dataclass(frozen=True, eq=False)
class Image:
    """Immutable RGB raster: (height, width, 3) float64 with values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected a (height, width, 3) array, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must contain at least one pixel")
        if not np.isfinite(px).all():
            raise ValueError("pixel values must be finite")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def full(cls, width: int, height: int, value) -> "Image":
        """Constant image; ``value`` is a scalar or an RGB triple."""
        rgb = np.broadcast_to(np.asarray(value, dtype=np.float64), (3,))
        return cls(np.tile(rgb, (height, width, 1)))


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Immutable per-pixel 0/1 mask: (height, width) uint8."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        b = np.asarray(self.bits)
        if b.ndim != 2:
            raise ValueError(f"expected a (height, width) array, got shape {b.shape}")
        if b.shape[0] < 1 or b.shape[1] < 1:
            raise ValueError("mask must contain at least one pixel")
        if not np.isin(b, (0, 1)).all():
            raise ValueError("mask entries must be 0 or 1")
        b = b.astype(np.uint8)
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @classmethod
    def full(cls, width: int, height: int, value: int) -> "BinaryMask":
        return cls(np.full((height, width), value, dtype=np.uint8))


@dataclass(frozen=True, eq=False)
class DistanceMap:
    """Immutable per-pixel nonnegative distances: (height, width) float64."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"expected a (height, width) array, got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("distance map must contain at least one pixel")
        if not np.isfinite(v).all():
            raise ValueError("distances must be finite")
        if v.min() < 0.0:
            raise ValueError("distances must be nonnegative")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def _quantize(pixels: np.ndarray) -> np.ndarray:
    # Round half up so 0.5 maps to 128; inputs are in [0, 1] by construction.
    return np.floor(pixels * 255.0 + 0.5).astype(np.uint8)


def decode_png(data: bytes) -> Image:
    """Decode PNG bytes into an :class:`Image`.

    Accepts RGB and RGBA PNGs (an alpha channel is discarded with a warning);
    other color types raise :class:`PngColorTypeError` and non-PNG or broken
    data raises :class:`PngDecodeError`.
    """
    try:
        with _PILImage.open(io.BytesIO(data)) as im:
            if im.format != "PNG":
                raise PngDecodeError(f"expected PNG data, got {im.format or 'unrecognized data'}")
            if im.mode not in ("RGB", "RGBA"):
                raise PngColorTypeError(
                    f"unsupported PNG color type {im.mode!r}; expected RGB or RGBA"
                )
            arr = np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise PngDecodeError(f"not a decodable image: {exc}") from exc
    except (OSError, SyntaxError) as exc:
        raise PngDecodeError(f"broken PNG stream: {exc}") from exc
    if arr.shape[2] == 4:
        warnings.warn("alpha channel discarded on PNG load", stacklevel=2)
        arr = arr[:, :, :3]
    return Image(arr.astype(np.float64) / 255.0)


def encode_png(image: Image) -> bytes:
    """Encode an :class:`Image` as 8-bit RGB PNG bytes."""
    buf = io.BytesIO()
    _PILImage.fromarray(_quantize(image.pixels), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def load_png(path) -> Image:
    """Load a PNG file; missing files raise FileNotFoundError."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such image file: {p}")
    return decode_png(p.read_bytes())


def save_png(image: Image, path) -> None:
    """Write an image as 8-bit RGB PNG (values rounded half up to 0..255)."""
    Path(path).write_bytes(encode_png(image))


def mask_to_png_bytes(mask: BinaryMask) -> bytes:
    """Encode a mask as 8-bit grayscale PNG with 1 -> 255 and 0 -> 0."""
    buf = io.BytesIO()
    _PILImage.fromarray(mask.bits * np.uint8(255), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def mask_from_png_bytes(data: bytes) -> BinaryMask:
    """Decode a grayscale PNG into a mask; values >= 128 count as 1."""
    try:
        with _PILImage.open(io.BytesIO(data)) as im:
            if im.format != "PNG":
                raise PngDecodeError(f"expected PNG data, got {im.format or 'unrecognized data'}")
            if im.mode not in ("L", "1"):
                raise PngColorTypeError(
                    f"unsupported mask color type {im.mode!r}; expected 8-bit grayscale"
                )
            arr = np.asarray(im.convert("L"))
    except UnidentifiedImageError as exc:
        raise PngDecodeError(f"not a decodable image: {exc}") from exc
    except (OSError, SyntaxError) as exc:
        raise PngDecodeError(f"broken PNG stream: {exc}") from exc
    return BinaryMask((arr >= 128).astype(np.uint8))


def save_mask_png(mask: BinaryMask, path) -> None:
    Path(path).write_bytes(mask_to_png_bytes(mask))


def load_mask_png(path) -> BinaryMask:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such mask file: {p}")
    return mask_from_png_bytes(p.read_bytes())


def _lerp_axis(arr: np.ndarray, new_len: int, axis: int) -> np.ndarray:
    """Linear resample along one axis using half-pixel-center sample points."""
    old_len = arr.shape[axis]
    if new_len == old_len:
        return arr
    # Destination pixel centers mapped into source coordinates; samples
    # beyond the border clamp to the edge pixel.
    pos = (np.arange(new_len, dtype=np.float64) + 0.5) * (old_len / new_len) - 0.5
    base = np.floor(pos)
    frac = pos - base
    lo = np.clip(base, 0, old_len - 1).astype(np.intp)
    hi = np.clip(base + 1, 0, old_len - 1).astype(np.intp)
    a = np.take(arr, lo, axis=axis)
    b = np.take(arr, hi, axis=axis)
    shape = [1] * arr.ndim
    shape[axis] = new_len
    f = frac.reshape(shape)
    # a + f*(b - a) rather than (1-f)*a + f*b: reproduces constants exactly.
    return a + f * (b - a)


def resize(image: Image, width: int, height: int) -> Image:
    """Bilinear resize with half-pixel-center alignment and edge clamping.

    Resizing to the current size returns the image unchanged, bit for bit.
    """
    if width < 1 or height < 1:
        raise ValueError(f"target size must be positive, got {width}x{height}")
    if width == image.width and height == image.height:
        return image
    out = _lerp_axis(image.pixels, height, axis=0)
    out = _lerp_axis(out, width, axis=1)
    return Image(np.clip(out, 0.0, 1.0))


def resize_mask_nearest(mask: BinaryMask, width: int, height: int) -> BinaryMask:
    """Nearest-neighbor mask resize on the same half-pixel-center grid."""
    if width < 1 or height < 1:
        raise ValueError(f"target size must be positive, got {width}x{height}")
    if width == mask.width and height == mask.height:
        return mask
    rows = np.clip(round_half_up((np.arange(height) + 0.5) * (mask.height / height) - 0.5),
                   0, mask.height - 1)
    cols = np.clip(round_half_up((np.arange(width) + 0.5) * (mask.width / width) - 0.5),
                   0, mask.width - 1)
    return BinaryMask(mask.bits[np.ix_(rows, cols)])


def compose(a: Image, b: Image, mask: BinaryMask) -> Image:
    """Per-pixel select: ``a`` where the mask is 1, ``b`` where it is 0.

    Selected pixels are copied bit-exactly; no resampling or blending.
    """
    if (a.width, a.height) != (b.width, b.height) or (a.width, a.height) != (mask.width, mask.height):
        raise ValueError(
            f"size mismatch: a is {a.width}x{a.height}, b is {b.width}x{b.height}, "
            f"mask is {mask.width}x{mask.height}"
        )
    return Image(np.where(mask.bits[:, :, None] != 0, a.pixels, b.pixels))
