"""Patch placement arithmetic and pasting behavior."""

from __future__ import annotations

import math

import numpy as np
import pytest

from patchrect import (
    BBox,
    DefenseConfig,
    HarmonicBackend,
    Image,
    PatchPlacement,
    apply_patch,
    defend,
    mean_pixel_distance,
    paste_geometry,
    patch_size_for,
    synth_noise_patch,
)

from conftest import make_rng, random_image


class TestPlacementValidation:
    def test_ratio_bounds(self):
        PatchPlacement(1.0)
        PatchPlacement(0.01)
        with pytest.raises(ValueError):
            PatchPlacement(0.0)
        with pytest.raises(ValueError):
            PatchPlacement(1.5)

    def test_degenerate_target_rejected(self):
        patch = synth_noise_patch(4, seed=0)
        with pytest.raises(ValueError, match="diagonal"):
            patch_size_for(patch, BBox(0, 0, 0, 0), PatchPlacement(0.2))


class TestSizing:
    def test_hand_computed_square_patch(self):
        # 30x40 box has diagonal 50; ratio 0.2 -> height 10, square patch
        # keeps width 10
        patch = synth_noise_patch(8, seed=0)
        assert patch_size_for(patch, BBox(0, 0, 30, 40), PatchPlacement(0.2)) == (10, 10)

    def test_aspect_ratio_preserved(self):
        wide = Image(np.zeros((10, 20, 3)))  # 2:1
        w, h = patch_size_for(wide, BBox(0, 0, 30, 40), PatchPlacement(0.2))
        assert (w, h) == (20, 10)

    def test_height_tracks_diagonal_within_rounding(self):
        rng = make_rng(5)
        patch = synth_noise_patch(6, seed=0)
        for _ in range(50):
            bw, bh = rng.uniform(5, 400, 2)
            ratio = float(rng.uniform(0.05, 1.0))
            _, ph = patch_size_for(patch, BBox(0, 0, bw, bh), PatchPlacement(ratio))
            assert abs(ph - ratio * math.hypot(bw, bh)) <= 0.5 + 1e-9

    def test_subpixel_height_clamps_with_warning(self):
        patch = synth_noise_patch(4, seed=0)
        with pytest.warns(UserWarning, match="one pixel"):
            w, h = patch_size_for(patch, BBox(0, 0, 3, 4), PatchPlacement(0.05))
        assert (w, h) == (1, 1)


class TestGeometry:
    def test_centering_hand_values(self):
        # box (0,0,30,40): center (15,20); 10x10 patch -> corner (10,15)
        patch = synth_noise_patch(8, seed=0)
        assert paste_geometry(patch, BBox(0, 0, 30, 40), PatchPlacement(0.2)) == (10, 15, 10, 10)

    def test_offset_shifts_corner(self):
        patch = synth_noise_patch(8, seed=0)
        left, top, _, _ = paste_geometry(
            patch, BBox(0, 0, 30, 40), PatchPlacement(0.2, offset=(3, -5))
        )
        assert (left, top) == (13, 10)

    def test_half_pixel_centers_round_up(self):
        # box (0,0,7,24): diagonal 25, ratio 0.2 -> 5x5 patch; center x is
        # 3.5 so left = round_half_up(1.0) = 1
        patch = synth_noise_patch(8, seed=0)
        left, top, pw, ph = paste_geometry(patch, BBox(0, 0, 7, 24), PatchPlacement(0.2))
        assert (pw, ph) == (5, 5)
        assert (left, top) == (1, 10)


class TestApplyPatch:
    def test_outside_pixels_bit_identical(self):
        rng = make_rng(6)
        img = random_image(rng, 64, 48)
        patch = synth_noise_patch(16, seed=3)
        target = BBox(10, 8, 30, 24)
        placement = PatchPlacement(0.4)
        left, top, pw, ph = paste_geometry(patch, target, placement)
        out = apply_patch(img, patch, target, placement)
        mask = np.ones((48, 64), dtype=bool)
        mask[top : top + ph, left : left + pw] = False
        assert np.array_equal(out.pixels[mask], img.pixels[mask])
        assert not np.array_equal(out.pixels[~mask], img.pixels[~mask])

    def test_patched_region_is_resized_patch(self):
        img = Image(np.zeros((40, 40, 3)))
        patch = synth_noise_patch(10, seed=9)
        target = BBox(5, 5, 18, 24)  # diagonal 30, ratio 0.5 -> 15x15
        placement = PatchPlacement(0.5)
        left, top, pw, ph = paste_geometry(patch, target, placement)
        out = apply_patch(img, patch, target, placement)
        from patchrect import resize

        expected = resize(patch, pw, ph)
        assert np.array_equal(
            out.pixels[top : top + ph, left : left + pw], expected.pixels
        )

    def test_clipped_at_borders(self):
        img = Image(np.full((32, 32, 3), 0.25))
        patch = Image(np.ones((8, 8, 3)))
        # center the patch on the image corner: half hangs off
        target = BBox(-10, -10, 20, 20)
        out = apply_patch(img, patch, target, PatchPlacement(0.5))
        left, top, pw, ph = paste_geometry(patch, target, PatchPlacement(0.5))
        assert left < 0 and top < 0
        visible = out.pixels[0 : top + ph, 0 : left + pw]
        assert np.all(visible == 1.0)
        assert np.all(out.pixels[top + ph :, :] == 0.25)
        assert np.all(out.pixels[:, left + pw :] == 0.25)

    def test_fully_outside_warns_and_returns_input(self):
        img = Image(np.full((16, 16, 3), 0.5))
        patch = synth_noise_patch(4, seed=0)
        target = BBox(100, 100, 10, 10)
        with pytest.warns(UserWarning, match="outside"):
            out = apply_patch(img, patch, target, PatchPlacement(0.5))
        assert out is img

    def test_input_image_unchanged(self):
        img = Image(np.full((20, 20, 3), 0.5))
        before = img.pixels.copy()
        apply_patch(img, synth_noise_patch(4, seed=1), BBox(2, 2, 10, 10), PatchPlacement(0.5))
        assert np.array_equal(img.pixels, before)


class TestSynthNoise:
    def test_deterministic_per_seed(self):
        a = synth_noise_patch(12, seed=42)
        b = synth_noise_patch(12, seed=42)
        c = synth_noise_patch(12, seed=43)
        assert np.array_equal(a.pixels, b.pixels)
        assert not np.array_equal(a.pixels, c.pixels)

    def test_shape_and_range(self):
        p = synth_noise_patch(7, seed=0)
        assert p.pixels.shape == (7, 7, 3)
        assert np.all((p.pixels >= 0) & (p.pixels <= 1))

    def test_side_validation(self):
        with pytest.raises(ValueError):
            synth_noise_patch(0, seed=0)


class TestDefenseDirection:
    def test_defense_moves_patched_region_toward_regeneration(self):
        # A noise patch should be far from its inpainted replacement, and the
        # defended output should sit much closer to the regeneration than the
        # attacked input does, inside the patch footprint.
        rng = make_rng(77)
        base = np.zeros((96, 96, 3))
        xs = np.linspace(0, 1, 96)
        base[:] = (0.3 + 0.4 * xs)[None, :, None]
        img = Image(np.clip(base, 0.0, 1.0))
        target = BBox(24, 24, 48, 48)
        patch = synth_noise_patch(24, seed=5)
        attacked = apply_patch(img, patch, target, PatchPlacement(0.4))
        left, top, pw, ph = paste_geometry(patch, target, PatchPlacement(0.4))

        cfg = DefenseConfig(n_grids=8, canonical_size=96, blur_kernel=5, seed=0)
        result = defend(attacked, cfg, HarmonicBackend())

        region = np.s_[top : top + ph, left : left + pw]
        before = mean_pixel_distance(
            Image(attacked.pixels[region]), Image(result.regen.pixels[region])
        )
        after = mean_pixel_distance(
            Image(result.output.pixels[region]), Image(result.regen.pixels[region])
        )
        assert before > 0.1
        assert after < before * 0.5
