"""Generator training for kitchen layouts.

Standalone batch trainer: it shares only the weights container *format*
with the inference side, not any code, so the export/import equivalence
test in ``tests/`` is the binding contract between the two.
"""

from .corpus import TOKENS, augment, encode_one_hot, load_corpus
from .export import export_container
from .model import Discriminator, Generator
from .train import TrainingConfig, train

__all__ = [
    "TOKENS",
    "augment",
    "encode_one_hot",
    "load_corpus",
    "export_container",
    "Generator",
    "Discriminator",
    "TrainingConfig",
    "train",
]
