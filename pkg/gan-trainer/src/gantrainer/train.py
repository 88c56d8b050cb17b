"""GAN training loop and command-line entry point.

Standard non-saturating GAN on one-hot layout tensors: the discriminator
sees real (augmented corpus) and generated batches, the generator is
trained to fool it. Both use RMSprop. Sample sheets — argmax-decoded
layouts from fixed probe latents — are written as plain text every
``sample_every`` iterations so training can be eyeballed without tooling.
"""

from __future__ import annotations

import argparse
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .corpus import CANVAS, augment, decode_argmax, encode_one_hot, load_corpus
from .export import export_container
from .model import LATENT_DIM, Discriminator, Generator

log = logging.getLogger(__name__)

SAMPLE_SHEET_LATENTS = 8


@dataclass
class TrainingConfig:
    corpus_dir: str
    out_path: str
    iterations: int = 50_000
    learning_rate: float = 1e-5
    batch_size: int = 64
    seed: int = 0
    sample_every: int = 5_000
    sample_dir: str | None = None


def _real_batches(layouts, batch_size: int, rng: np.random.Generator):
    """Endless shuffled minibatches of one-hot tensors."""
    data = torch.from_numpy(np.stack([encode_one_hot(rows) for rows in layouts]))
    while True:
        order = rng.permutation(len(data))
        for start in range(0, len(order) - batch_size + 1, batch_size):
            yield data[order[start : start + batch_size]]
        if len(order) < batch_size:  # tiny corpus: sample with replacement
            yield data[rng.integers(0, len(data), batch_size)]


def _write_sample_sheet(gen: Generator, probes: torch.Tensor, path: Path) -> None:
    gen.eval()
    with torch.no_grad():
        logits = gen(probes).numpy()
    gen.train()
    sheets = []
    for i in range(len(probes)):
        rows = decode_argmax(logits[i], CANVAS, CANVAS)
        sheets.append(f"# sample {i}\n" + "\n".join(rows))
    path.write_text("\n\n".join(sheets) + "\n")


def train(config: TrainingConfig) -> Generator:
    """Train the generator and export it to ``config.out_path``."""
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)

    layouts = augment(load_corpus(config.corpus_dir))
    log.info("training corpus: %d layouts after augmentation", len(layouts))
    batch_size = min(config.batch_size, len(layouts))
    batches = _real_batches(layouts, batch_size, rng)

    gen = Generator()
    disc = Discriminator()
    opt_g = torch.optim.RMSprop(gen.parameters(), lr=config.learning_rate)
    opt_d = torch.optim.RMSprop(disc.parameters(), lr=config.learning_rate)
    probes = torch.randn(SAMPLE_SHEET_LATENTS, LATENT_DIM)
    ones = torch.ones(batch_size, 1)
    zeros = torch.zeros(batch_size, 1)

    sample_dir = Path(config.sample_dir) if config.sample_dir else None
    if sample_dir:
        sample_dir.mkdir(parents=True, exist_ok=True)

    for step in range(1, config.iterations + 1):
        real = next(batches)
        z = torch.randn(batch_size, LATENT_DIM)
        fake = gen(z)

        opt_d.zero_grad()
        loss_d = F.binary_cross_entropy_with_logits(
            disc(real), ones
        ) + F.binary_cross_entropy_with_logits(disc(fake.detach()), zeros)
        loss_d.backward()
        opt_d.step()

        opt_g.zero_grad()
        loss_g = F.binary_cross_entropy_with_logits(disc(fake), ones)
        loss_g.backward()
        opt_g.step()

        if step % 500 == 0 or step == config.iterations:
            log.info("iter %d: loss_d=%.4f loss_g=%.4f", step, loss_d, loss_g)
        if sample_dir and (step % config.sample_every == 0 or step == config.iterations):
            _write_sample_sheet(gen, probes, sample_dir / f"samples-{step:06d}.txt")

    export_container(gen, config.out_path)
    log.info("exported weights to %s", config.out_path)
    return gen


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="Train the kitchen-layout generator and export its weights."
    )
    parser.add_argument("corpus_dir", help="directory of layout .txt files")
    parser.add_argument("out_path", help="output weights container file")
    parser.add_argument("--iterations", type=int, default=50_000)
    parser.add_argument("--learning-rate", type=float, default=1e-5)
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sample-every", type=int, default=5_000)
    parser.add_argument("--sample-dir", default=None,
                        help="write periodic text sample sheets here")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    train(TrainingConfig(
        corpus_dir=args.corpus_dir,
        out_path=args.out_path,
        iterations=args.iterations,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        seed=args.seed,
        sample_every=args.sample_every,
        sample_dir=args.sample_dir,
    ))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
