"""FastAPI application speaking the base64-PNG inpainting wire protocol.

Endpoints:

- ``POST /inpaint``: regenerate the masked region (mask value 255) of the
  request image, with the engine chosen per request: ``diffusion`` (the
  wrapped pretrained model), ``stub-blur`` (masked pixels replaced by a
  fixed-kernel heavy blur of the whole image), or ``stub-identity`` (echo).
- ``GET /health``: capability descriptor for clients, carrying the same
  fields a client-side backend descriptor uses (name, deterministic,
  supports_seed, concurrent_safe) plus service status.

Error mapping: 400 for malformed payloads (bad base64, undecodable PNG,
dimension mismatch, steps < 1), 422 for an unsupported mode (request-model
validation), 503 when diffusion is requested but the model is not loaded.
"""

from __future__ import annotations

import base64
import binascii
import io
import os
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel

from .engines import DiffusionEngine, stub_blur, stub_identity

MODES = ("diffusion", "stub-blur", "stub-identity")
Mode = Literal["diffusion", "stub-blur", "stub-identity"]

DEFAULT_STEPS = 5


class InpaintWireRequest(BaseModel):
    image_png_b64: str
    mask_png_b64: str
    steps: int = DEFAULT_STEPS
    seed: int | None = None
    mode: Mode = "diffusion"


class ModelInfo(BaseModel):
    mode: Mode
    steps_used: int
    seed_used: int | None


class InpaintWireResponse(BaseModel):
    image_png_b64: str
    model_info: ModelInfo


class HealthResponse(BaseModel):
    status: str
    mode: Mode
    model_loaded: bool
    name: str
    deterministic: bool
    supports_seed: bool
    concurrent_safe: bool


def _decode_png(field: str, payload: str) -> Image.Image:
    try:
        raw = base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise HTTPException(status_code=400, detail=f"{field} is not valid base64: {exc}") from exc
    try:
        image = Image.open(io.BytesIO(raw))
        image.load()
    except UnidentifiedImageError as exc:
        raise HTTPException(status_code=400, detail=f"{field} is not a decodable image") from exc
    if image.format != "PNG":
        raise HTTPException(status_code=400, detail=f"{field} must be a PNG, got {image.format}")
    return image


def _encode_png(image: Image.Image) -> str:
    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    return base64.b64encode(buffer.getvalue()).decode("ascii")


def create_app(default_mode: str | None = None, model_path: str | None = None) -> FastAPI:
    """Build the service; configuration falls back to the environment.

    ``default_mode`` (env ``INPAINT_SERVICE_MODE``) is what /health advertises;
    every /inpaint request still names its own mode.  ``model_path`` (env
    ``INPAINT_MODEL_PATH``) locates the diffusion weights; without it the
    service runs stub-only and diffusion requests get 503.
    """
    mode = default_mode or os.environ.get("INPAINT_SERVICE_MODE", "diffusion")
    if mode not in MODES:
        raise ValueError(f"service mode must be one of {MODES}, got {mode!r}")
    engine = DiffusionEngine(model_path or os.environ.get("INPAINT_MODEL_PATH"))

    app = FastAPI(
        title="inpaint-service",
        version="0.1.0",
        description="Image inpainting over JSON: base64 PNG in, base64 PNG out; "
        "a diffusion backend plus deterministic stub modes.",
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(
            status="ok",
            mode=mode,
            model_loaded=engine.loaded,
            name=f"inpaint-service({mode})",
            deterministic=mode != "diffusion",
            supports_seed=True,
            concurrent_safe=True,
        )

    @app.post("/inpaint", response_model=InpaintWireResponse)
    def inpaint(request: InpaintWireRequest) -> InpaintWireResponse:
        if request.steps < 1:
            raise HTTPException(status_code=400, detail=f"steps must be >= 1, got {request.steps}")
        image = _decode_png("image_png_b64", request.image_png_b64).convert("RGB")
        mask_image = _decode_png("mask_png_b64", request.mask_png_b64)
        if mask_image.size != image.size:
            raise HTTPException(
                status_code=400,
                detail=(
                    f"mask dimensions {mask_image.size[0]}x{mask_image.size[1]} do not match "
                    f"image dimensions {image.size[0]}x{image.size[1]}"
                ),
            )
        mask = np.asarray(mask_image.convert("L")) >= 128

        if request.mode == "diffusion":
            if not engine.try_load():
                raise HTTPException(
                    status_code=503, detail=f"diffusion model not loaded: {engine.load_error}"
                )
            result = engine.inpaint(image, mask, request.steps, request.seed)
        elif request.mode == "stub-blur":
            result = stub_blur(image, mask, request.steps, request.seed)
        else:
            result = stub_identity(image, mask, request.steps, request.seed)

        if result.size != image.size:  # enforced before reply, whatever the engine did
            raise HTTPException(status_code=500, detail="engine returned mismatched dimensions")
        return InpaintWireResponse(
            image_png_b64=_encode_png(result),
            model_info=ModelInfo(mode=request.mode, steps_used=request.steps, seed_used=request.seed),
        )

    return app
