"""Deconvolutional generator and convolutional discriminator.

The generator mirrors the layer kinds the inference-side container format
can express: one dense projection (with reshape and ReLU) followed by
transposed convolutions whose batch norm folds into per-channel affine
parameters at export time.
"""

from __future__ import annotations

import torch
from torch import nn

LATENT_DIM = 32
CHANNELS = 8  # one per tile token
BASE = 256


class Generator(nn.Module):
    """z(32) -> dense 256·4·4 -> convT to 128@8x8 (BN, ReLU) -> convT to
    8@16x16 raw logits."""

    def __init__(self, latent_dim: int = LATENT_DIM):
        super().__init__()
        self.latent_dim = latent_dim
        self.dense = nn.Linear(latent_dim, BASE * 4 * 4)
        self.deconv1 = nn.ConvTranspose2d(BASE, BASE // 2, 4, stride=2, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(BASE // 2)
        self.deconv2 = nn.ConvTranspose2d(BASE // 2, CHANNELS, 4, stride=2, padding=1, bias=True)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        x = torch.relu(self.dense(z)).view(-1, BASE, 4, 4)
        x = torch.relu(self.bn1(self.deconv1(x)))
        return self.deconv2(x)


class Discriminator(nn.Module):
    """8@16x16 -> conv 64@8x8 -> conv 128@4x4 (BN) -> dense real/fake logit."""

    def __init__(self):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(CHANNELS, 64, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(64, 128, 4, stride=2, padding=1),
            nn.BatchNorm2d(128),
            nn.LeakyReLU(0.2),
            nn.Flatten(),
            nn.Linear(128 * 4 * 4, 1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)
