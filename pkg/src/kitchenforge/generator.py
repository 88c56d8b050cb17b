"""Latent-vector to kitchen-grid decoding.

Two backends produce layouts from 32-dimensional latent vectors:

* ``decode`` runs a forward pass of a trained deconvolutional generator from
  an exported weights container (a self-describing file: JSON header, raw
  little-endian float32 tensors, sha256 checksum). Inference needs only
  numpy — batch norm is folded into per-channel affine parameters at export
  time, so no training framework is required here.
* ``direct_decode`` is a deterministic, weight-free stand-in: a fixed
  pseudo-random affine projection of z to per-tile logits. It keeps the rest
  of the pipeline (repair, simulation, archive search) exercisable without a
  trained model and behaves like a GAN in the one respect that matters
  downstream: most raw outputs are unsolvable.

The generator emits an 8x16x16 logits tensor (one channel per tile token);
the grid is the per-tile argmax, cropped top-left to the target size.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import DEFAULT_HEIGHT, DEFAULT_WIDTH, KitchenGrid, TOKENS

LATENT_DIM = 32
OUTPUT_CHANNELS = len(TOKENS)
OUTPUT_SIZE = 16

_MAGIC = b"KFWT"
_FORMAT = "kitchenforge-generator-weights"
_VERSION = 1


@dataclass(frozen=True)
class Layer:
    """One generator layer: a dense projection or a transposed convolution.

    ``tensors`` holds the layer's parameters by name. Dense layers use
    ``weight`` (out, in) and ``bias`` (out,) with an optional ``reshape`` to
    (channels, height, width). Transposed convolutions use ``weight``
    (in_ch, out_ch, k, k) plus per-channel affine ``scale``/``shift`` (the
    folded batch-norm statistics).
    """

    kind: str  # "dense" | "conv_transpose"
    tensors: dict[str, np.ndarray]
    activation: str = "none"  # "none" | "relu" | "tanh"
    stride: int = 1
    padding: int = 0
    reshape: tuple[int, int, int] | None = None


@dataclass(frozen=True)
class GeneratorWeights:
    """Ordered layer stack mapping a latent vector to token logits."""

    layers: tuple[Layer, ...]
    latent_dim: int = LATENT_DIM

    def __post_init__(self):
        for layer in self.layers:
            _validate_layer(layer)


def _validate_layer(layer: Layer) -> None:
    if layer.kind == "dense":
        w = layer.tensors["weight"]
        b = layer.tensors["bias"]
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ValueError(f"dense layer shapes inconsistent: {w.shape}, {b.shape}")
        if layer.reshape is not None and int(np.prod(layer.reshape)) != w.shape[0]:
            raise ValueError("dense reshape does not match output width")
    elif layer.kind == "conv_transpose":
        w = layer.tensors["weight"]
        if w.ndim != 4 or w.shape[2] != w.shape[3]:
            raise ValueError(f"conv_transpose weight must be (in, out, k, k), got {w.shape}")
        for name in ("scale", "shift"):
            t = layer.tensors[name]
            if t.shape != (w.shape[1],):
                raise ValueError(f"{name} must be per-output-channel, got {t.shape}")
    else:
        raise ValueError(f"unknown layer kind {layer.kind!r}")


def _activate(x: np.ndarray, name: str) -> np.ndarray:
    if name == "none":
        return x
    if name == "relu":
        return np.maximum(x, 0.0)
    if name == "tanh":
        return np.tanh(x)
    raise ValueError(f"unknown activation {name!r}")


def conv_transpose_2d(
    x: np.ndarray, weight: np.ndarray, stride: int, padding: int
) -> np.ndarray:
    """Transposed 2-D convolution, channels-first.

    x: (in_ch, H, W); weight: (in_ch, out_ch, k, k).
    Output spatial size: (H-1)*stride - 2*padding + k.
    """
    in_ch, hh, ww = x.shape
    if weight.shape[0] != in_ch:
        raise ValueError(
            f"input has {in_ch} channels, weight expects {weight.shape[0]}"
        )
    k = weight.shape[2]
    full_h = (hh - 1) * stride + k
    full_w = (ww - 1) * stride + k
    out = np.zeros((weight.shape[1], full_h, full_w))
    for iy in range(hh):
        for ix in range(ww):
            patch = np.tensordot(x[:, iy, ix], weight, axes=([0], [0]))
            out[:, iy * stride : iy * stride + k, ix * stride : ix * stride + k] += patch
    if padding:
        out = out[:, padding:-padding, padding:-padding]
    return out


def forward(z: np.ndarray, weights: GeneratorWeights) -> np.ndarray:
    """Run the generator; returns the raw logits tensor (8, 16, 16)."""
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.shape != (weights.latent_dim,):
        raise ValueError(
            f"latent vector must have {weights.latent_dim} components, got {z.shape}"
        )
    x = z
    for layer in weights.layers:
        if layer.kind == "dense":
            x = layer.tensors["weight"] @ x.reshape(-1) + layer.tensors["bias"]
            if layer.reshape is not None:
                x = x.reshape(layer.reshape)
        else:
            x = conv_transpose_2d(
                x, layer.tensors["weight"], layer.stride, layer.padding
            )
            x = x * layer.tensors["scale"][:, None, None]
            x = x + layer.tensors["shift"][:, None, None]
        x = _activate(x, layer.activation)
    return x


def logits_to_grid(
    logits: np.ndarray, width: int = DEFAULT_WIDTH, height: int = DEFAULT_HEIGHT
) -> KitchenGrid:
    """Per-tile argmax over token channels, cropped top-left.

    Ties break toward the lowest channel index (numpy argmax order), which
    keeps the mapping deterministic across platforms.
    """
    if logits.ndim != 3 or logits.shape[0] != OUTPUT_CHANNELS:
        raise ValueError(f"expected ({OUTPUT_CHANNELS}, H, W) logits, got {logits.shape}")
    if logits.shape[1] < height or logits.shape[2] < width:
        raise ValueError("logits tensor smaller than requested grid")
    picks = np.argmax(logits[:, :height, :width], axis=0)
    tiles = tuple(TOKENS[picks[y, x]] for y in range(height) for x in range(width))
    return KitchenGrid(width, height, tiles)


def decode(
    z: np.ndarray,
    weights: GeneratorWeights,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
) -> KitchenGrid:
    """Latent vector -> layout via the trained generator (pure function)."""
    return logits_to_grid(forward(z, weights), width, height)


# ---------------------------------------------------------------------------
# Weight-free direct decoder.

_DIRECT_SEED = 0x6B66_6467  # fixed: the projection is part of the contract


def _direct_projection(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(_DIRECT_SEED)
    n = OUTPUT_CHANNELS * height * width
    matrix = rng.standard_normal((n, LATENT_DIM))
    bias = rng.standard_normal(n)
    return matrix, bias


_projection_cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def direct_decode(
    z: np.ndarray, width: int = DEFAULT_WIDTH, height: int = DEFAULT_HEIGHT
) -> KitchenGrid:
    """Deterministic GAN-free backend: fixed random projection, then argmax.

    Continuous in z away from argmax boundaries, so nearby latents usually
    map to the same grid.
    """
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.shape != (LATENT_DIM,):
        raise ValueError(f"latent vector must have {LATENT_DIM} components")
    key = (width, height)
    if key not in _projection_cache:
        _projection_cache[key] = _direct_projection(width, height)
    matrix, bias = _projection_cache[key]
    logits = (matrix @ z + bias).reshape(OUTPUT_CHANNELS, height, width)
    return logits_to_grid(logits, width, height)


# ---------------------------------------------------------------------------
# Weights container I/O.


def _layer_header(layer: Layer) -> dict:
    entry: dict = {
        "kind": layer.kind,
        "activation": layer.activation,
        "tensors": [
            {"name": name, "shape": list(t.shape)}
            for name, t in layer.tensors.items()
        ],
    }
    if layer.kind == "conv_transpose":
        entry["stride"] = layer.stride
        entry["padding"] = layer.padding
    if layer.reshape is not None:
        entry["reshape"] = list(layer.reshape)
    return entry


def save_weights(weights: GeneratorWeights, path: str | Path) -> None:
    """Write the self-describing container: magic, length-prefixed JSON
    header, then all tensors as raw little-endian float32 in header order."""
    payload = b"".join(
        np.ascontiguousarray(t, dtype="<f4").tobytes()
        for layer in weights.layers
        for t in layer.tensors.values()
    )
    header = {
        "format": _FORMAT,
        "version": _VERSION,
        "latent_dim": weights.latent_dim,
        "tokens": "".join(TOKENS),
        "layers": [_layer_header(layer) for layer in weights.layers],
        "checksum": "sha256:" + hashlib.sha256(payload).hexdigest(),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(payload)


def load_weights(path: str | Path) -> GeneratorWeights:
    """Read and validate a weights container (checksum, shapes, alphabet)."""
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError("not a generator weights container")
    (blob_len,) = struct.unpack("<Q", raw[4:12])
    header = json.loads(raw[12 : 12 + blob_len].decode("utf-8"))
    if header.get("format") != _FORMAT:
        raise ValueError(f"unexpected container format {header.get('format')!r}")
    if header.get("tokens") != "".join(TOKENS):
        raise ValueError("weights were exported for a different token alphabet")
    payload = raw[12 + blob_len :]
    digest = "sha256:" + hashlib.sha256(payload).hexdigest()
    if header.get("checksum") != digest:
        raise ValueError("weights payload checksum mismatch")
    layers = []
    offset = 0
    for entry in header["layers"]:
        tensors: dict[str, np.ndarray] = {}
        for spec in entry["tensors"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape))
            data = np.frombuffer(
                payload, dtype="<f4", count=count, offset=offset
            )
            offset += count * 4
            tensors[spec["name"]] = data.reshape(shape).astype(np.float64)
        layers.append(
            Layer(
                kind=entry["kind"],
                tensors=tensors,
                activation=entry.get("activation", "none"),
                stride=entry.get("stride", 1),
                padding=entry.get("padding", 0),
                reshape=tuple(entry["reshape"]) if "reshape" in entry else None,
            )
        )
    if offset != len(payload):
        raise ValueError("weights payload size does not match layer shapes")
    return GeneratorWeights(tuple(layers), latent_dim=header["latent_dim"])
