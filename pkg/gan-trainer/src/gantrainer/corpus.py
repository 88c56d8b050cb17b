"""Training corpus: layout text files, mirror augmentation, one-hot encoding.

A layout file is plain text, one row per line, each character one of the
eight tile tokens. Every source layout contributes four training items
(original, horizontal mirror, vertical mirror, both) — all tokens are
orientation-free, so mirroring never rewrites a tile.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

#: Channel order of the one-hot encoding; must match the container header.
TOKENS = ("h", "r", "c", "e", "s", "d", "n", "p")
PAD_TOKEN = "c"  # padding ring reads as counter/wall
CANVAS = 16  # layouts are padded to CANVAS x CANVAS
MIN_CORPUS = 8


class CorpusError(ValueError):
    pass


def parse_layout(text: str, source: str = "<string>") -> list[str]:
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise CorpusError(f"{source}: empty layout")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise CorpusError(f"{source}: row {i + 1} has length {len(row)} != {width}")
        for j, ch in enumerate(row):
            if ch not in TOKENS:
                raise CorpusError(f"{source}: unknown token {ch!r} at row {i + 1} col {j + 1}")
    if len(rows) > CANVAS or width > CANVAS:
        raise CorpusError(f"{source}: layout exceeds the {CANVAS}x{CANVAS} canvas")
    return rows


def load_corpus(directory: str | Path) -> list[list[str]]:
    """All ``*.txt`` layouts in a directory, sorted by name."""
    paths = sorted(Path(directory).glob("*.txt"))
    layouts = [parse_layout(p.read_text(), p.name) for p in paths]
    if len(layouts) < MIN_CORPUS:
        raise CorpusError(
            f"corpus too small: {len(layouts)} layouts, need at least {MIN_CORPUS}"
        )
    return layouts


def mirror_h(rows: list[str]) -> list[str]:
    return [row[::-1] for row in rows]


def mirror_v(rows: list[str]) -> list[str]:
    return rows[::-1]


def augment(layouts: list[list[str]]) -> list[list[str]]:
    """Original + horizontal, vertical, and double mirror per layout (4x)."""
    out = []
    for rows in layouts:
        out.append(rows)
        out.append(mirror_h(rows))
        out.append(mirror_v(rows))
        out.append(mirror_h(mirror_v(rows)))
    return out


def encode_one_hot(rows: list[str]) -> np.ndarray:
    """(8, 16, 16) one-hot tensor; the padding ring is all counters."""
    x = np.zeros((len(TOKENS), CANVAS, CANVAS), dtype=np.float32)
    pad = TOKENS.index(PAD_TOKEN)
    x[pad, :, :] = 1.0
    for y, row in enumerate(rows):
        for xpos, ch in enumerate(row):
            x[pad, y, xpos] = 0.0
            x[TOKENS.index(ch), y, xpos] = 1.0
    return x


def decode_argmax(logits: np.ndarray, width: int, height: int) -> list[str]:
    """Per-tile argmax back to layout rows (for sample sheets)."""
    picks = np.argmax(logits[:, :height, :width], axis=0)
    return ["".join(TOKENS[picks[y, x]] for x in range(width)) for y in range(height)]
