"""Latent decoding: conv arithmetic, argmax mapping, weights container I/O."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from kitchenforge.generator import (
    GeneratorWeights,
    LATENT_DIM,
    Layer,
    OUTPUT_CHANNELS,
    OUTPUT_SIZE,
    conv_transpose_2d,
    decode,
    direct_decode,
    forward,
    load_weights,
    logits_to_grid,
    save_weights,
)
from kitchenforge.grid import TOKENS, check_solvability


def naive_conv_transpose(x, weight, stride, padding):
    """Quadruple-loop reference: place each input pixel's weighted kernel
    into the (strided) output canvas, then trim the padding ring."""
    in_ch, hh, ww = x.shape
    _, out_ch, k, _ = weight.shape
    full = np.zeros((out_ch, (hh - 1) * stride + k, (ww - 1) * stride + k))
    for ic in range(in_ch):
        for oc in range(out_ch):
            for iy in range(hh):
                for ix in range(ww):
                    for ky in range(k):
                        for kx in range(k):
                            full[oc, iy * stride + ky, ix * stride + kx] += (
                                x[ic, iy, ix] * weight[ic, oc, ky, kx]
                            )
    if padding:
        full = full[:, padding:-padding, padding:-padding]
    return full


def tiny_weights(rng) -> GeneratorWeights:
    """A small but real two-layer generator reaching the 8x16x16 output."""
    dense = Layer(
        kind="dense",
        tensors={
            "weight": rng.standard_normal((4 * 8 * 8, LATENT_DIM)) * 0.1,
            "bias": rng.standard_normal(4 * 8 * 8) * 0.1,
        },
        activation="relu",
        reshape=(4, 8, 8),
    )
    conv = Layer(
        kind="conv_transpose",
        tensors={
            "weight": rng.standard_normal((4, OUTPUT_CHANNELS, 4, 4)) * 0.1,
            "scale": rng.standard_normal(OUTPUT_CHANNELS) * 0.1 + 1.0,
            "shift": rng.standard_normal(OUTPUT_CHANNELS) * 0.1,
        },
        stride=2,
        padding=1,
    )
    return GeneratorWeights((dense, conv))


class TestConvTranspose:
    @given(
        arrays(np.float64, (2, 3, 3), elements=st.floats(-2, 2)),
        arrays(np.float64, (2, 3, 4, 4), elements=st.floats(-2, 2)),
        st.integers(1, 3),
        st.integers(0, 1),
    )
    @settings(max_examples=25, deadline=None)
    def test_matches_naive_reference(self, x, weight, stride, padding):
        got = conv_transpose_2d(x, weight, stride, padding)
        want = naive_conv_transpose(x, weight, stride, padding)
        assert got.shape == want.shape
        np.testing.assert_allclose(got, want, atol=1e-10)

    def test_output_spatial_size(self):
        x = np.zeros((1, 8, 8))
        w = np.zeros((1, 3, 4, 4))
        out = conv_transpose_2d(x, w, stride=2, padding=1)
        assert out.shape == (3, 16, 16)  # (8-1)*2 - 2 + 4

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ValueError):
            conv_transpose_2d(np.zeros((2, 4, 4)), np.zeros((3, 1, 3, 3)), 1, 0)


class TestLogitsToGrid:
    def test_argmax_selects_token(self):
        logits = np.zeros((OUTPUT_CHANNELS, 3, 3))
        logits[TOKENS.index("p"), 1, 2] = 5.0
        grid = logits_to_grid(logits, width=3, height=3)
        assert grid.get(2, 1) == "p"
        assert grid.get(0, 0) == TOKENS[0]  # tie -> lowest channel index

    def test_crop_is_top_left(self):
        logits = np.zeros((OUTPUT_CHANNELS, 4, 4))
        logits[TOKENS.index("s"), 3, 3] = 5.0  # outside the 2x2 crop
        grid = logits_to_grid(logits, width=2, height=2)
        assert all(t == TOKENS[0] for t in grid.tiles)

    def test_undersized_logits_rejected(self):
        with pytest.raises(ValueError):
            logits_to_grid(np.zeros((OUTPUT_CHANNELS, 4, 4)), width=5, height=4)


class TestDirectDecode:
    def test_deterministic(self):
        z = np.linspace(-1, 1, LATENT_DIM)
        assert direct_decode(z) == direct_decode(z)

    def test_local_continuity(self):
        z = np.linspace(-1, 1, LATENT_DIM)
        near = z + 1e-9
        assert direct_decode(near) == direct_decode(z)

    def test_raw_outputs_mostly_unsolvable(self):
        rng = np.random.default_rng(0)
        solvable = sum(
            check_solvability(direct_decode(rng.standard_normal(LATENT_DIM))).is_solvable
            for _ in range(50)
        )
        assert solvable <= 2

    def test_latent_dim_enforced(self):
        with pytest.raises(ValueError):
            direct_decode(np.zeros(LATENT_DIM + 1))


class TestWeightsContainer:
    def test_round_trip_preserves_forward(self, tmp_path):
        rng = np.random.default_rng(7)
        weights = tiny_weights(rng)
        path = tmp_path / "g.kfwt"
        save_weights(weights, path)
        loaded = load_weights(path)
        z = rng.standard_normal(LATENT_DIM)
        # float32 serialization rounds the parameters; re-save to compare
        # like with like.
        path2 = tmp_path / "g2.kfwt"
        save_weights(loaded, path2)
        reloaded = load_weights(path2)
        np.testing.assert_array_equal(forward(z, loaded), forward(z, reloaded))
        assert decode(z, loaded) == decode(z, reloaded)
        out = forward(z, loaded)
        assert out.shape == (OUTPUT_CHANNELS, OUTPUT_SIZE, OUTPUT_SIZE)

    def test_checksum_corruption_detected(self, tmp_path):
        rng = np.random.default_rng(3)
        path = tmp_path / "g.kfwt"
        save_weights(tiny_weights(rng), path)
        raw = bytearray(path.read_bytes())
        raw[-1] ^= 0xFF  # flip one payload byte
        path.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="checksum"):
            load_weights(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "g.kfwt"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError, match="container"):
            load_weights(path)

    def test_layer_validation(self):
        bad = Layer(kind="dense", tensors={"weight": np.zeros((4, 2)),
                                           "bias": np.zeros(3)})
        with pytest.raises(ValueError):
            GeneratorWeights((bad,))

    def test_bad_latent_rejected(self):
        rng = np.random.default_rng(1)
        weights = tiny_weights(rng)
        with pytest.raises(ValueError):
            forward(np.zeros(LATENT_DIM - 1), weights)
