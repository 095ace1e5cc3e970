"""Payload helpers and the acceptance-criteria reporting hook for the service suite."""

from __future__ import annotations

import base64
import io

import numpy as np
import pytest
from PIL import Image


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): release acceptance criterion with a printed verdict"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and report.when == "call":
        name = marker.kwargs.get("name") or (marker.args[0] if marker.args else item.name)
        verdict = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        capman = item.config.pluginmanager.getplugin("capturemanager")
        if capman:
            with capman.global_and_fixture_disabled():
                print(f"[ACCEPTANCE] {name}: {verdict}")
        else:
            print(f"[ACCEPTANCE] {name}: {verdict}")


def png_b64(array: np.ndarray) -> str:
    """Encode a uint8 array (HxW or HxWx3) as a base64 PNG payload string."""
    buffer = io.BytesIO()
    Image.fromarray(array).save(buffer, format="PNG")
    return base64.b64encode(buffer.getvalue()).decode("ascii")


def from_png_b64(payload: str) -> np.ndarray:
    """Decode a base64 PNG payload string back to a uint8 RGB array."""
    image = Image.open(io.BytesIO(base64.b64decode(payload)))
    return np.asarray(image.convert("RGB"))


def random_rgb(rng: np.random.Generator, width: int, height: int) -> np.ndarray:
    return rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)


def left_half_mask(width: int, height: int) -> np.ndarray:
    mask = np.zeros((height, width), dtype=np.uint8)
    mask[:, : width // 2] = 255
    return mask


def inpaint_payload(
    image: np.ndarray,
    mask: np.ndarray,
    *,
    mode: str = "stub-identity",
    steps: int = 5,
    seed: int | None = None,
) -> dict:
    return {
        "image_png_b64": png_b64(image),
        "mask_png_b64": png_b64(mask),
        "steps": steps,
        "seed": seed,
        "mode": mode,
    }
