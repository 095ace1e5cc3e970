"""HTTP inpainting microservice with diffusion and deterministic stub modes."""

from .app import MODES, create_app
from .engines import BLUR_RADIUS, DiffusionEngine, stub_blur, stub_identity

__version__ = "0.1.0"

__all__ = [
    "BLUR_RADIUS",
    "DiffusionEngine",
    "MODES",
    "create_app",
    "stub_blur",
    "stub_identity",
]
