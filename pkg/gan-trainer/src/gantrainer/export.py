"""Export trained generator weights in the shared container format.

The container is self-describing: ``KFWT`` magic, a little-endian uint64
length prefix, a JSON header (format name, version, latent dimension,
token alphabet, per-layer tensor shapes, sha256 payload checksum), then
all tensors as raw little-endian float32 in header order.

Batch norm is folded into per-channel affine ``scale``/``shift`` here so
the inference side needs no normalization statistics:

    scale = gamma / sqrt(running_var + eps)
    shift = beta - running_mean * scale

This module is written against the format specification only — it shares
no code with the inference-side reader.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import torch

from .corpus import TOKENS
from .model import BASE, Generator

_MAGIC = b"KFWT"
_FORMAT = "kitchenforge-generator-weights"
_VERSION = 1


def _fold_batch_norm(bn: torch.nn.BatchNorm2d) -> tuple[np.ndarray, np.ndarray]:
    gamma = bn.weight.detach().numpy()
    beta = bn.bias.detach().numpy()
    mean = bn.running_mean.detach().numpy()
    var = bn.running_var.detach().numpy()
    scale = gamma / np.sqrt(var + bn.eps)
    shift = beta - mean * scale
    return scale, shift


def folded_layers(gen: Generator) -> list[dict]:
    """The generator as a list of container-layer dicts with numpy tensors.

    Each dict has ``kind``, ``activation``, ``tensors`` (ordered name ->
    array), plus ``reshape`` for the dense layer and ``stride``/``padding``
    for the transposed convolutions.
    """
    scale1, shift1 = _fold_batch_norm(gen.bn1)
    w2 = gen.deconv2.weight.detach().numpy()
    return [
        {
            "kind": "dense",
            "activation": "relu",
            "reshape": [BASE, 4, 4],
            "tensors": {
                "weight": gen.dense.weight.detach().numpy(),
                "bias": gen.dense.bias.detach().numpy(),
            },
        },
        {
            "kind": "conv_transpose",
            "activation": "relu",
            "stride": gen.deconv1.stride[0],
            "padding": gen.deconv1.padding[0],
            "tensors": {
                "weight": gen.deconv1.weight.detach().numpy(),
                "scale": scale1,
                "shift": shift1,
            },
        },
        {
            "kind": "conv_transpose",
            "activation": "none",
            "stride": gen.deconv2.stride[0],
            "padding": gen.deconv2.padding[0],
            "tensors": {
                "weight": w2,
                "scale": np.ones(w2.shape[1], dtype=np.float32),
                "shift": gen.deconv2.bias.detach().numpy(),
            },
        },
    ]


def export_container(gen: Generator, path: str | Path) -> None:
    """Write the generator (eval-mode semantics, batch norm folded) to a
    weights container file."""
    gen.eval()
    layers = folded_layers(gen)
    payload = b"".join(
        np.ascontiguousarray(t, dtype="<f4").tobytes()
        for layer in layers
        for t in layer["tensors"].values()
    )
    header = {
        "format": _FORMAT,
        "version": _VERSION,
        "latent_dim": gen.latent_dim,
        "tokens": "".join(TOKENS),
        "layers": [
            {
                "kind": layer["kind"],
                "activation": layer["activation"],
                "tensors": [
                    {"name": name, "shape": list(t.shape)}
                    for name, t in layer["tensors"].items()
                ],
                **({"reshape": layer["reshape"]} if "reshape" in layer else {}),
                **(
                    {"stride": layer["stride"], "padding": layer["padding"]}
                    if layer["kind"] == "conv_transpose"
                    else {}
                ),
            }
            for layer in layers
        ],
        "checksum": "sha256:" + hashlib.sha256(payload).hexdigest(),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(payload)
