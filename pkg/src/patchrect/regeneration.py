"""Inpainting backends and the two-pass whole-image regeneration orchestrator.

A backend fills the masked region of an image; the orchestrator runs one
backend twice on complementary checkerboard masks and stitches the two
outputs so that every pixel of the result was regenerated by exactly one
pass.  Backend outputs are only ever read through their own mask, so a
backend that corrupts unmasked pixels cannot leak them into the result.
"""

from __future__ import annotations

import abc
import base64
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import requests
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu

from . import config as _config
from .checkerboard import GridSpec, checkerboard_masks
from .raster import BinaryMask, Image, compose, decode_png, encode_png, mask_to_png_bytes


class BackendError(Exception):
    """An inpainting backend failed to produce a usable result."""


class BackendUnavailableError(BackendError):
    """The backend cannot be reached at all (connection refused, timeout)."""


@dataclass(frozen=True)
class BackendInfo:
    """Capability descriptor every backend advertises."""

    name: str
    deterministic: bool
    supports_seed: bool
    concurrent_safe: bool = True


@dataclass(frozen=True, eq=False)
class InpaintRequest:
    """One inpainting call: fill the masked pixels of ``image``."""

    image: Image
    mask: BinaryMask
    steps: int = 5
    seed: int | None = None

    def __post_init__(self) -> None:
        if (self.image.width, self.image.height) != (self.mask.width, self.mask.height):
            raise ValueError(
                f"mask size {self.mask.width}x{self.mask.height} does not match "
                f"image size {self.image.width}x{self.image.height}"
            )
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")


class InpainterBackend(abc.ABC):
    """Interface every inpainting backend implements."""

    @property
    @abc.abstractmethod
    def info(self) -> BackendInfo:
        """Capability descriptor for this backend."""

    @abc.abstractmethod
    def inpaint(self, request: InpaintRequest) -> Image:
        """Return an image of the same size with the masked region filled."""


def inpaint(backend: InpainterBackend, request: InpaintRequest) -> Image:
    """Run one backend call and verify the output dimensions."""
    out = backend.inpaint(request)
    if (out.width, out.height) != (request.image.width, request.image.height):
        raise BackendError(
            f"backend {backend.info.name!r} returned {out.width}x{out.height} "
            f"for a {request.image.width}x{request.image.height} request"
        )
    return out


class IdentityBackend(InpainterBackend):
    """Test stub: returns the input image unchanged."""

    @property
    def info(self) -> BackendInfo:
        return BackendInfo("identity-stub", deterministic=True, supports_seed=False)

    def inpaint(self, request: InpaintRequest) -> Image:
        return request.image


class ConstantFillBackend(InpainterBackend):
    """Test stub: fills the masked region with a constant value."""

    def __init__(self, value: float = 0.5) -> None:
        if not 0.0 <= value <= 1.0:
            raise ValueError("fill value must lie in [0, 1]")
        self._value = float(value)

    @property
    def info(self) -> BackendInfo:
        return BackendInfo(f"constant-stub({self._value})", deterministic=True, supports_seed=False)

    def inpaint(self, request: InpaintRequest) -> Image:
        fill = Image.full(request.image.width, request.image.height, self._value)
        return compose(fill, request.image, request.mask)


def harmonic_inpaint(request: InpaintRequest) -> Image:
    """Fill the masked region with the discrete harmonic extension of its rim.

    Every masked pixel is set so that it equals the mean of its in-bounds
    4-neighbors, with the unmasked pixels acting as fixed boundary values.
    The resulting sparse linear system is solved directly, which is
    deterministic and obeys the discrete maximum principle: each connected
    masked region stays within the [min, max] of the unmasked pixels
    bordering it.  A fully masked image has no boundary and is filled with
    the mid-gray constant 0.5.  Unmasked pixels are returned bit-identical.
    """
    mask = request.mask.bits.astype(bool)
    if not mask.any():
        return request.image
    if mask.all():
        return Image.full(request.image.width, request.image.height, 0.5)

    pixels = request.image.pixels
    h, w = mask.shape
    index = np.full((h, w), -1, dtype=np.int64)
    ys, xs = np.nonzero(mask)
    n = ys.size
    index[ys, xs] = np.arange(n)

    degree = np.zeros(n, dtype=np.float64)
    rhs = np.zeros((n, 3), dtype=np.float64)
    off_rows: list[np.ndarray] = []
    off_cols: list[np.ndarray] = []
    for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        ny, nx = ys + dy, xs + dx
        inside = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        degree += inside
        iy, ix = ny[inside], nx[inside]
        src = np.nonzero(inside)[0]
        neighbor_masked = mask[iy, ix]
        off_rows.append(src[neighbor_masked])
        off_cols.append(index[iy[neighbor_masked], ix[neighbor_masked]])
        boundary = ~neighbor_masked
        # src indices are unique within one direction, so += cannot collide.
        rhs[src[boundary]] += pixels[iy[boundary], ix[boundary], :]

    rows = np.concatenate([np.arange(n)] + off_rows)
    cols = np.concatenate([np.arange(n)] + off_cols)
    vals = np.concatenate([degree] + [-np.ones(r.size) for r in off_rows])
    matrix = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsc()
    solver = splu(matrix)
    filled = np.column_stack([solver.solve(rhs[:, c]) for c in range(3)])

    out = pixels.copy()
    out[ys, xs, :] = np.clip(filled, 0.0, 1.0)
    return Image(out)


class HarmonicBackend(InpainterBackend):
    """Built-in backend: harmonic (Laplace) interpolation of the masked region."""

    @property
    def info(self) -> BackendInfo:
        return BackendInfo("native-harmonic", deterministic=True, supports_seed=False)

    def inpaint(self, request: InpaintRequest) -> Image:
        return harmonic_inpaint(request)


class RemoteBackend(InpainterBackend):
    """Client for an HTTP inpainting service speaking the JSON wire protocol.

    The request carries base64 PNG payloads (mask value 255 = regenerate);
    the response returns the full regenerated image the same way.  Connection
    problems raise :class:`BackendUnavailableError` naming the URL; any other
    HTTP failure raises :class:`BackendError`.
    """

    def __init__(
        self,
        url: str,
        timeout: float = 60.0,
        mode: str = "diffusion",
        session: requests.Session | None = None,
    ) -> None:
        if mode not in _config.REMOTE_MODES:
            raise ValueError(f"mode must be one of {_config.REMOTE_MODES}, got {mode!r}")
        self._url = url.rstrip("/")
        self._timeout = timeout
        self._mode = mode
        self._session = session or requests.Session()
        self._health: dict | None = None

    def _fetch_health(self) -> dict:
        if self._health is None:
            try:
                resp = self._session.get(f"{self._url}/health", timeout=self._timeout)
                self._health = resp.json() if resp.ok else {}
            except (requests.RequestException, ValueError):
                self._health = {}
        return self._health

    @property
    def info(self) -> BackendInfo:
        health = self._fetch_health()
        deterministic = bool(health.get("deterministic", self._mode != "diffusion"))
        return BackendInfo(
            name=f"remote({self._url}, mode={self._mode})",
            deterministic=deterministic,
            supports_seed=bool(health.get("supports_seed", True)),
            concurrent_safe=bool(health.get("concurrent_safe", True)),
        )

    def inpaint(self, request: InpaintRequest) -> Image:
        payload = {
            "image_png_b64": base64.b64encode(encode_png(request.image)).decode("ascii"),
            "mask_png_b64": base64.b64encode(mask_to_png_bytes(request.mask)).decode("ascii"),
            "steps": request.steps,
            "seed": request.seed,
            "mode": self._mode,
        }
        try:
            resp = self._session.post(f"{self._url}/inpaint", json=payload, timeout=self._timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise BackendUnavailableError(
                f"inpainting service unreachable at {self._url}: {exc}"
            ) from exc
        except requests.RequestException as exc:
            raise BackendError(f"request to {self._url} failed: {exc}") from exc
        if resp.status_code != 200:
            detail = resp.text[:500]
            raise BackendError(
                f"inpainting service at {self._url} returned HTTP {resp.status_code}: {detail}"
            )
        try:
            body = resp.json()
            image_b64 = body["image_png_b64"]
        except (ValueError, KeyError) as exc:
            raise BackendError(f"malformed response from {self._url}: {exc}") from exc
        try:
            return decode_png(base64.b64decode(image_b64))
        except Exception as exc:
            raise BackendError(f"undecodable image payload from {self._url}: {exc}") from exc


def backend_from_config(cfg: _config.DefenseConfig) -> InpainterBackend:
    """Instantiate the backend selected by a :class:`DefenseConfig`."""
    if cfg.backend == _config.BACKEND_NATIVE:
        return HarmonicBackend()
    if cfg.backend == _config.BACKEND_IDENTITY:
        return IdentityBackend()
    if cfg.backend == _config.BACKEND_CONSTANT:
        return ConstantFillBackend(cfg.constant_value)
    if cfg.backend == _config.BACKEND_REMOTE:
        return RemoteBackend(cfg.backend_url, timeout=cfg.backend_timeout, mode=cfg.remote_mode)
    raise ValueError(f"unknown backend {cfg.backend!r}")


def regenerate_full(image: Image, cfg: _config.DefenseConfig, backend: InpainterBackend) -> Image:
    """Regenerate every pixel of ``image`` via two complementary inpainting passes.

    The checkerboard pair for ``cfg.n_grids`` is built, the backend is called
    exactly once per mask (concurrently when it declares itself concurrency
    safe), and the outputs are stitched mask-wise: each pixel of the result
    comes from the pass that regenerated it.  With a base seed, the passes
    use ``seed`` and ``seed + 1``.  Any backend failure aborts the whole
    operation; no partial result is returned.
    """
    spec = GridSpec(cfg.n_grids, image.width, image.height)
    even_mask, odd_mask = checkerboard_masks(spec)
    seeds = (None, None) if cfg.seed is None else (cfg.seed, cfg.seed + 1)
    requests_pair = [
        InpaintRequest(image, mask, steps=cfg.steps, seed=seed)
        for mask, seed in zip((even_mask, odd_mask), seeds)
    ]
    if backend.info.concurrent_safe:
        with ThreadPoolExecutor(max_workers=2) as pool:
            futures = [pool.submit(inpaint, backend, req) for req in requests_pair]
            outputs = [f.result() for f in futures]
    else:
        outputs = [inpaint(backend, req) for req in requests_pair]
    return compose(outputs[0], outputs[1], even_mask)
