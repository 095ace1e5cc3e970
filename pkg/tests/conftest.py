"""Shared fixtures and the acceptance-criteria reporting hook."""

from __future__ import annotations

import numpy as np
import pytest

from patchrect import Image


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
        verdict = "PASS" if report.passed else "FAIL"
        capman = item.config.pluginmanager.getplugin("capturemanager")
        if capman:
            with capman.global_and_fixture_disabled():
                print(f"[ACCEPTANCE] {name}: {verdict}")
        else:
            print(f"[ACCEPTANCE] {name}: {verdict}")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_image(rng: np.random.Generator, width: int, height: int) -> Image:
    return Image(rng.random((height, width, 3)))


def psnr(a: Image, b: Image, region: np.ndarray | None = None) -> float:
    """Peak signal-to-noise ratio in dB over an optional boolean pixel region."""
    diff = a.pixels - b.pixels
    if region is not None:
        diff = diff[region]
    mse = float(np.mean(diff**2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * float(np.log10(1.0 / mse))
