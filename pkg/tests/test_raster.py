"""Image/mask containers, PNG round trips, resizing, and compositing."""

from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image as PILImage

from patchrect import (
    BinaryMask,
    Image,
    PngColorTypeError,
    PngDecodeError,
    compose,
    load_mask_png,
    load_png,
    resize,
    resize_mask_nearest,
    save_mask_png,
    save_png,
)
from patchrect.raster import decode_png, encode_png

from conftest import make_rng, random_image


class TestImageContainer:
    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            Image(np.zeros((4, 4)))
        with pytest.raises(ValueError):
            Image(np.zeros((4, 4, 4)))
        with pytest.raises(ValueError):
            Image(np.zeros((0, 4, 3)))

    def test_rejects_out_of_range_and_nonfinite(self):
        with pytest.raises(ValueError):
            Image(np.full((2, 2, 3), 1.5))
        with pytest.raises(ValueError):
            Image(np.full((2, 2, 3), -0.1))
        bad = np.zeros((2, 2, 3))
        bad[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            Image(bad)

    def test_immutable_and_isolated_from_source(self):
        src = np.zeros((2, 3, 3))
        img = Image(src)
        src[0, 0, 0] = 1.0
        assert img.pixels[0, 0, 0] == 0.0
        with pytest.raises(ValueError):
            img.pixels[0, 0, 0] = 0.5
        assert img.width == 3 and img.height == 2

    def test_full_accepts_scalar_and_rgb(self):
        assert (Image.full(2, 3, 0.25).pixels == 0.25).all()
        img = Image.full(2, 2, (0.1, 0.2, 0.3))
        assert np.allclose(img.pixels[0, 0], [0.1, 0.2, 0.3])

    def test_mask_rejects_non_binary(self):
        with pytest.raises(ValueError):
            BinaryMask(np.array([[0, 2]], dtype=np.uint8))


class TestPngIO:
    def test_round_trip_within_one_quantum(self, tmp_path):
        rng = make_rng(11)
        img = random_image(rng, 13, 7)
        path = tmp_path / "x.png"
        save_png(img, path)
        back = load_png(path)
        assert np.abs(back.pixels - img.pixels).max() <= 1.0 / 255.0

    def test_quantization_rounds_half_up(self, tmp_path):
        img = Image(np.full((1, 1, 3), 0.5))
        path = tmp_path / "half.png"
        save_png(img, path)
        raw = np.asarray(PILImage.open(path))
        assert (raw == 128).all()

    def test_extremes_and_channel_order(self, tmp_path):
        img = Image(np.array([[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]]))
        path = tmp_path / "rb.png"
        save_png(img, path)
        raw = np.asarray(PILImage.open(path))
        assert raw[0, 0].tolist() == [255, 0, 0]
        assert raw[0, 1].tolist() == [0, 0, 255]
        back = load_png(path)
        assert np.array_equal(back.pixels, img.pixels)

    def test_missing_file_raises_file_not_found(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_png(tmp_path / "nope.png")

    def test_undecodable_data(self, tmp_path):
        path = tmp_path / "junk.png"
        path.write_bytes(b"this is not a png at all")
        with pytest.raises(PngDecodeError):
            load_png(path)

    def test_non_png_image_rejected(self, tmp_path):
        path = tmp_path / "disguised.png"
        PILImage.new("RGB", (3, 3)).save(path, format="JPEG")
        with pytest.raises(PngDecodeError):
            load_png(path)

    def test_unsupported_color_types(self, tmp_path):
        gray = tmp_path / "gray.png"
        PILImage.new("L", (2, 2)).save(gray, format="PNG")
        with pytest.raises(PngColorTypeError):
            load_png(gray)
        pal = tmp_path / "pal.png"
        PILImage.new("P", (2, 2)).save(pal, format="PNG")
        with pytest.raises(PngColorTypeError):
            load_png(pal)

    def test_alpha_discarded_with_warning(self, tmp_path):
        path = tmp_path / "rgba.png"
        PILImage.new("RGBA", (2, 2), (10, 20, 30, 77)).save(path, format="PNG")
        with pytest.warns(UserWarning, match="alpha"):
            img = load_png(path)
        assert img.pixels.shape == (2, 2, 3)
        assert np.allclose(img.pixels[0, 0], np.array([10, 20, 30]) / 255.0)

    def test_sixteen_bit_rgb_decodes(self):
        # Hand-rolled 16-bit RGB PNG; decoders may narrow it to 8 bits, but it
        # must load and scale into [0, 1].
        import struct
        import zlib

        def chunk(tag, data):
            body = tag + data
            return (
                struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)
            )

        raw = b"\x00" + struct.pack(">HHH", 65535, 0, 0) + struct.pack(">HHH", 0, 0, 65535)
        png = (
            b"\x89PNG\r\n\x1a\n"
            + chunk(b"IHDR", struct.pack(">IIBBBBB", 2, 1, 16, 2, 0, 0, 0))
            + chunk(b"IDAT", zlib.compress(raw))
            + chunk(b"IEND", b"")
        )
        img = decode_png(png)
        assert img.width == 2 and img.height == 1
        assert img.pixels[0, 0, 0] == 1.0 and img.pixels[0, 1, 2] == 1.0

    def test_mask_png_round_trip(self, tmp_path):
        mask = BinaryMask(np.array([[1, 0], [0, 1]], dtype=np.uint8))
        path = tmp_path / "m.png"
        save_mask_png(mask, path)
        raw = np.asarray(PILImage.open(path))
        assert raw.tolist() == [[255, 0], [0, 255]]
        assert np.array_equal(load_mask_png(path).bits, mask.bits)

    def test_encode_decode_bytes_round_trip(self):
        img = Image(np.linspace(0, 1, 24).reshape(2, 4, 3))
        again = decode_png(encode_png(img))
        assert np.abs(again.pixels - img.pixels).max() <= 1.0 / 255.0


class TestResize:
    def test_same_size_is_bit_identical(self):
        img = random_image(make_rng(3), 9, 5)
        out = resize(img, 9, 5)
        assert np.array_equal(out.pixels, img.pixels)

    def test_constant_stays_constant(self):
        img = Image.full(5, 4, (0.3, 0.7, 0.1))
        for w, h in ((1, 1), (3, 9), (17, 2)):
            out = resize(img, w, h)
            assert np.array_equal(out.pixels, np.broadcast_to([0.3, 0.7, 0.1], (h, w, 3)))

    def test_two_to_four_hand_values(self):
        img = Image(np.array([[[0.0] * 3, [1.0] * 3]]))
        out = resize(img, 4, 1)
        assert np.allclose(out.pixels[0, :, 0], [0.0, 0.25, 0.75, 1.0], atol=1e-15)
        assert (np.diff(out.pixels[0, :, 0]) >= 0).all()

    def test_zero_target_dimension_rejected(self):
        img = Image.full(2, 2, 0.5)
        with pytest.raises(ValueError):
            resize(img, 0, 2)
        with pytest.raises(ValueError):
            resize(img, 2, 0)

    def test_output_range_preserved(self):
        rng = make_rng(5)
        for _ in range(10):
            img = random_image(rng, int(rng.integers(1, 30)), int(rng.integers(1, 30)))
            out = resize(img, int(rng.integers(1, 40)), int(rng.integers(1, 40)))
            assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0

    def test_mask_nearest_identity_and_upscale(self):
        mask = BinaryMask(np.array([[1, 0], [0, 1]], dtype=np.uint8))
        assert resize_mask_nearest(mask, 2, 2) is mask
        up = resize_mask_nearest(mask, 4, 4)
        assert np.array_equal(up.bits, np.kron(mask.bits, np.ones((2, 2), dtype=np.uint8)))


class TestCompose:
    def test_selects_per_pixel(self):
        a = Image.full(2, 2, 1.0)
        b = Image.full(2, 2, 0.0)
        mask = BinaryMask(np.array([[1, 0], [0, 1]], dtype=np.uint8))
        out = compose(a, b, mask)
        assert out.pixels[0, 0, 0] == 1.0 and out.pixels[0, 1, 0] == 0.0

    def test_all_ones_and_all_zeros(self):
        a = random_image(make_rng(1), 4, 3)
        b = random_image(make_rng(2), 4, 3)
        assert np.array_equal(compose(a, b, BinaryMask.full(4, 3, 1)).pixels, a.pixels)
        assert np.array_equal(compose(a, b, BinaryMask.full(4, 3, 0)).pixels, b.pixels)

    def test_dimension_mismatch(self):
        a = Image.full(2, 2, 0.5)
        b = Image.full(3, 2, 0.5)
        with pytest.raises(ValueError):
            compose(a, b, BinaryMask.full(2, 2, 1))
        with pytest.raises(ValueError):
            compose(a, a, BinaryMask.full(3, 2, 1))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_partition_conservation(self, seed):
        # compose(a, b, m) and compose(b, a, m) together use every source
        # pixel exactly once.
        rng = np.random.default_rng(seed)
        w, h = int(rng.integers(1, 12)), int(rng.integers(1, 12))
        a, b = Image(rng.random((h, w, 3))), Image(rng.random((h, w, 3)))
        m = BinaryMask((rng.random((h, w)) < 0.5).astype(np.uint8))
        x = compose(a, b, m)
        y = compose(b, a, m)
        assert np.array_equal(x.pixels + y.pixels, a.pixels + b.pixels)
        sel = m.bits.astype(bool)
        assert np.array_equal(x.pixels[sel], a.pixels[sel])
        assert np.array_equal(x.pixels[~sel], b.pixels[~sel])
