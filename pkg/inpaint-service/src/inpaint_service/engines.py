"""Inpainting engines: two deterministic stubs and a lazily loaded diffusion model.

Engines take an RGB ``PIL.Image``, a boolean mask array (True = regenerate),
a step count, and an optional seed, and return an RGB image of the same size.
The stubs ignore steps and seed; both are bit-deterministic.
"""

from __future__ import annotations

import threading

import numpy as np
from PIL import Image, ImageFilter

# fixed kernel for the heavy-blur stub (box blur of width 2*radius+1)
BLUR_RADIUS = 15


def stub_identity(image: Image.Image, mask: np.ndarray, steps: int, seed: int | None) -> Image.Image:
    return image.copy()


def stub_blur(image: Image.Image, mask: np.ndarray, steps: int, seed: int | None) -> Image.Image:
    blurred = np.asarray(image.filter(ImageFilter.BoxBlur(BLUR_RADIUS)))
    out = np.asarray(image).copy()
    out[mask] = blurred[mask]
    return Image.fromarray(out, mode="RGB")


class DiffusionEngine:
    """Wrapper around a pretrained latent-diffusion inpainting pipeline.

    The model is loaded lazily on the first diffusion request so stub-only
    deployments never import the heavyweight dependencies.  When loading is
    impossible (missing packages, no model path, load error) the engine stays
    unloaded and remembers why; inference calls are serialized behind a lock
    since the device cannot batch independent requests.
    """

    def __init__(self, model_path: str | None) -> None:
        self._model_path = model_path
        self._pipeline = None
        self._lock = threading.Lock()
        self.load_error: str | None = None

    @property
    def loaded(self) -> bool:
        return self._pipeline is not None

    def try_load(self) -> bool:
        with self._lock:
            if self._pipeline is not None:
                return True
            if self.load_error is not None:
                return False
            try:
                import torch
                from diffusers import AutoPipelineForInpainting
            except ImportError as exc:
                self.load_error = f"diffusion dependencies unavailable: {exc}"
                return False
            if not self._model_path:
                self.load_error = "no model path configured (set INPAINT_MODEL_PATH)"
                return False
            try:
                pipeline = AutoPipelineForInpainting.from_pretrained(self._model_path)
                device = "cuda" if torch.cuda.is_available() else "cpu"
                self._pipeline = pipeline.to(device)
            except Exception as exc:  # noqa: BLE001 - any load failure keeps the service up
                self.load_error = f"model load failed: {exc}"
                return False
            return True

    def inpaint(self, image: Image.Image, mask: np.ndarray, steps: int, seed: int | None) -> Image.Image:
        if self._pipeline is None:
            raise RuntimeError("diffusion model is not loaded")
        import torch

        mask_image = Image.fromarray(mask.astype(np.uint8) * 255, mode="L")
        with self._lock:
            generator = None
            if seed is not None:
                generator = torch.Generator(device=self._pipeline.device).manual_seed(seed)
            result = self._pipeline(
                prompt="",
                image=image,
                mask_image=mask_image,
                num_inference_steps=steps,
                generator=generator,
            ).images[0]
        if result.size != image.size:
            result = result.resize(image.size)
        return result.convert("RGB")
