"""Latent space illumination: MAP-Elites archive and CMA-ME search.

The archive partitions behavior space into a fixed grid of cells and keeps,
per cell, the best candidate seen. Three search loops fill it:

* ``run_lsi`` — CMA-ME with improvement emitters over the 32-dim latent
  space (ask round-robin per sample, covariance updates once per generation).
* ``run_random_search`` — z ~ N(0, I) baseline with the identical
  evaluation and insertion path.
* ``run_tile_mapelites`` — direct tile-space MAP-Elites: mutate 20 tiles of
  a random elite's raw genome each iteration.

Evaluation is injected as a callable (latent vector or genome -> Evaluation),
so the loops are testable on cheap surrogate objectives and the pipeline
layer wires in decode -> repair -> simulate. All loops draw from a single
seeded Generator and insert candidates in a fixed order, so a rerun with the
same seed reproduces the archive byte for byte regardless of worker count.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .grid import KitchenGrid, parse_grid, serialize_grid

logger = logging.getLogger(__name__)

LATENT_DIM = 32
DEFAULT_EMITTERS = 5
DEFAULT_LAMBDA = 37
DEFAULT_SIGMA = 0.2


# ---------------------------------------------------------------------------
# Archive


@dataclass(frozen=True)
class ArchiveConfig:
    """Behavior-space partition: per dimension an inclusive (lo, hi) range
    and a bin count covering it totally."""

    lows: tuple[float, ...]
    highs: tuple[float, ...]
    bins: tuple[int, ...]

    def __post_init__(self):
        if not len(self.lows) == len(self.highs) == len(self.bins):
            raise ValueError("dimension mismatch in archive config")
        for lo, hi, n in zip(self.lows, self.highs, self.bins):
            if hi <= lo or n < 1:
                raise ValueError("each dimension needs hi > lo and >= 1 bin")

    @property
    def dims(self) -> int:
        return len(self.bins)

    def cell_count(self) -> int:
        return int(np.prod(self.bins))

    def bin_of(self, b: Sequence[float]) -> tuple[tuple[int, ...], bool]:
        """Map a descriptor to bin indices; returns (indices, clamped)."""
        if len(b) != self.dims:
            raise ValueError(f"descriptor has {len(b)} dims, expected {self.dims}")
        idx = []
        clamped = False
        for v, lo, hi, n in zip(b, self.lows, self.highs, self.bins):
            if v < lo or v > hi:
                clamped = True
                v = min(max(v, lo), hi)
            k = int((v - lo) / (hi - lo) * n)
            idx.append(min(k, n - 1))
        return tuple(idx), clamped


def workload_archive_config() -> ArchiveConfig:
    """13 x 5 x 5 integer bins for (Δingredients, Δplates, Δorders)."""
    return ArchiveConfig((-6.5, -2.5, -2.5), (6.5, 2.5, 2.5), (13, 5, 5))


def fluency_archive_config() -> ArchiveConfig:
    """101 x 101 unit bins for (concurrent motion %, stuck timesteps)."""
    return ArchiveConfig((-0.5, -0.5), (100.5, 100.5), (101, 101))


@dataclass
class Cell:
    bins: tuple[int, ...]
    b: tuple[float, ...]
    f: float
    z: tuple[float, ...] | None
    grid: KitchenGrid
    metadata: dict


@dataclass
class InsertResult:
    status: str  # "new_cell" | "improved" | "rejected"
    delta: float
    bins: tuple[int, ...]

    @property
    def changed(self) -> bool:
        return self.status != "rejected"


class Archive:
    """At most one entry per cell; a cell's stored f only ever increases."""

    def __init__(self, config: ArchiveConfig):
        self.config = config
        self.cells: dict[tuple[int, ...], Cell] = {}

    def insert(
        self,
        z: Sequence[float] | None,
        grid: KitchenGrid,
        f: float,
        b: Sequence[float],
        metadata: dict | None = None,
    ) -> InsertResult:
        bins, clamped = self.config.bin_of(b)
        if clamped:
            logger.warning("descriptor %s outside declared ranges; clamped", b)
        incumbent = self.cells.get(bins)
        if incumbent is not None and incumbent.f >= f:
            return InsertResult("rejected", 0.0, bins)
        status = "new_cell" if incumbent is None else "improved"
        delta = f if incumbent is None else f - incumbent.f
        self.cells[bins] = Cell(
            bins=bins,
            b=tuple(float(v) for v in b),
            f=float(f),
            z=None if z is None else tuple(float(v) for v in z),
            grid=grid,
            metadata=dict(metadata or {}),
        )
        return InsertResult(status, delta, bins)

    def coverage(self) -> int:
        return len(self.cells)

    def qd_score(self) -> float:
        return sum(cell.f for cell in self.cells.values())

    def elites(self) -> list[Cell]:
        return [self.cells[k] for k in sorted(self.cells)]

    # -- serialization: one JSON record per occupied cell ------------------

    def to_lines(self) -> list[str]:
        lines = []
        for cell in self.elites():
            lines.append(
                json.dumps(
                    {
                        "bins": list(cell.bins),
                        "b": list(cell.b),
                        "f": cell.f,
                        "z": None if cell.z is None else list(cell.z),
                        "grid": serialize_grid(cell.grid).replace("\n", "/"),
                        "meta": cell.metadata,
                    },
                    sort_keys=True,
                )
            )
        return lines

    @classmethod
    def from_lines(cls, config: ArchiveConfig, lines: Iterable[str]) -> Archive:
        archive = cls(config)
        for line in lines:
            if not line.strip():
                continue
            rec = json.loads(line)
            cell = Cell(
                bins=tuple(rec["bins"]),
                b=tuple(rec["b"]),
                f=rec["f"],
                z=None if rec["z"] is None else tuple(rec["z"]),
                grid=parse_grid(rec["grid"].replace("/", "\n")),
                metadata=rec["meta"],
            )
            archive.cells[cell.bins] = cell
        return archive

    def heatmap_slices(self) -> dict[str, list[list[float | None]]]:
        """2-D f-matrices for CSV/plot export; None marks empty cells.

        A 2-D archive yields one slice; a 3-D archive yields one (dim0 x
        dim1) slice per bin of the last dimension, matching the
        five-panel-per-orders-difference layout.
        """
        cfg = self.config
        if cfg.dims == 2:
            grid = [[None] * cfg.bins[1] for _ in range(cfg.bins[0])]
            for cell in self.cells.values():
                grid[cell.bins[0]][cell.bins[1]] = cell.f
            return {"slice": grid}
        if cfg.dims == 3:
            out = {}
            for k in range(cfg.bins[2]):
                grid = [[None] * cfg.bins[1] for _ in range(cfg.bins[0])]
                for cell in self.cells.values():
                    if cell.bins[2] == k:
                        grid[cell.bins[0]][cell.bins[1]] = cell.f
                out[f"slice{k}"] = grid
            return out
        raise ValueError("heatmap export supports 2-D and 3-D archives only")


def heatmap_csv(matrix: list[list[float | None]]) -> str:
    """Render one slice as CSV; empty cells stay empty (not 0)."""
    lines = []
    for row in matrix:
        lines.append(",".join("" if v is None else f"{v:.6g}" for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# CMA-ME improvement emitter


@dataclass
class _Parent:
    z: np.ndarray
    delta: float
    new_cell: bool


class ImprovementEmitter:
    """One CMA-ME improvement emitter over the latent space.

    Parents are the generation's archive-changing samples, ranked new-cell
    first and then by Δ descending; the mean/covariance/path update over
    the ranked parents follows the standard covariance-matrix-adaptation
    formulas. A generation with no archive change triggers a restart from a
    uniformly chosen elite with identity covariance.
    """

    def __init__(
        self,
        dim: int = LATENT_DIM,
        sigma0: float = DEFAULT_SIGMA,
        lam: int = DEFAULT_LAMBDA,
        mean: np.ndarray | None = None,
    ):
        self.dim = dim
        self.sigma0 = sigma0
        self.lam = lam
        self.mean = np.zeros(dim) if mean is None else np.asarray(mean, float).copy()
        self.parents: list[_Parent] = []
        self.samples_this_gen = 0
        self.restarts = 0
        self._reset_adaptation()

    def _reset_adaptation(self) -> None:
        self.sigma = self.sigma0
        self.cov = np.eye(self.dim)
        self.p_sigma = np.zeros(self.dim)
        self.p_c = np.zeros(self.dim)
        self._decompose()

    def _decompose(self) -> None:
        vals, vecs = np.linalg.eigh((self.cov + self.cov.T) / 2.0)
        floor = 1e-12
        if np.any(vals < floor):
            logger.warning("emitter covariance lost positive definiteness; repaired")
            vals = np.maximum(vals, floor)
            self.cov = (vecs * vals) @ vecs.T
        self._eigvecs = vecs
        self._eigvals = vals

    def ask(self, rng: np.random.Generator) -> np.ndarray:
        """Sample z ~ N(mean, sigma^2 C)."""
        y = self._eigvecs @ (np.sqrt(self._eigvals) * rng.standard_normal(self.dim))
        return self.mean + self.sigma * y

    def tell(
        self,
        z: np.ndarray,
        outcome: InsertResult,
        archive: Archive,
        rng: np.random.Generator,
    ) -> None:
        if outcome.changed:
            self.parents.append(
                _Parent(np.asarray(z, float), outcome.delta, outcome.status == "new_cell")
            )
        self.samples_this_gen += 1
        if self.samples_this_gen < self.lam:
            return
        self.samples_this_gen = 0
        if not self.parents:
            self._restart(archive, rng)
            return
        ranked = sorted(self.parents, key=lambda p: (not p.new_cell, -p.delta))
        self.parents = []
        self._adapt([p.z for p in ranked])

    def _restart(self, archive: Archive, rng: np.random.Generator) -> None:
        self.restarts += 1
        elites = [c for c in archive.elites() if c.z is not None]
        if elites:
            pick = elites[int(rng.integers(len(elites)))]
            self.mean = np.asarray(pick.z, float).copy()
        self._reset_adaptation()

    def _adapt(self, parents: list[np.ndarray]) -> None:
        n = self.dim
        mu = len(parents)
        raw = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
        weights = raw / raw.sum()
        mueff = 1.0 / float(np.sum(weights**2))

        cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
        cs = (mueff + 2) / (n + mueff + 5)
        c1 = 2 / ((n + 1.3) ** 2 + mueff)
        cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
        damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + cs
        chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))

        old_mean = self.mean
        ys = [(z - old_mean) / self.sigma for z in parents]
        y_w = sum(w * y for w, y in zip(weights, ys))
        self.mean = old_mean + self.sigma * y_w

        inv_sqrt = (self._eigvecs / np.sqrt(self._eigvals)) @ self._eigvecs.T
        self.p_sigma = (1 - cs) * self.p_sigma + math.sqrt(
            cs * (2 - cs) * mueff
        ) * (inv_sqrt @ y_w)
        norm_ps = float(np.linalg.norm(self.p_sigma))
        self.sigma *= math.exp((cs / damps) * (norm_ps / chi_n - 1))

        hsig = norm_ps / math.sqrt(1 - (1 - cs) ** 2) / chi_n < 1.4 + 2 / (n + 1)
        self.p_c = (1 - cc) * self.p_c + (
            math.sqrt(cc * (2 - cc) * mueff) * y_w if hsig else 0.0
        )
        rank_mu = sum(w * np.outer(y, y) for w, y in zip(weights, ys))
        delta_h = (1 - hsig) * cc * (2 - cc)
        self.cov = (
            (1 - c1 - cmu) * self.cov
            + c1 * (np.outer(self.p_c, self.p_c) + delta_h * self.cov)
            + cmu * rank_mu
        )
        self._decompose()


# ---------------------------------------------------------------------------
# Search loops


@dataclass
class Evaluation:
    """One candidate's evaluation: objective, descriptor, repaired layout."""

    f: float
    b: tuple[float, ...]
    grid: KitchenGrid
    metadata: dict = field(default_factory=dict)


@dataclass
class SearchConfig:
    evaluations: int
    seed: int
    archive: ArchiveConfig
    emitters: int = DEFAULT_EMITTERS
    lam: int = DEFAULT_LAMBDA
    sigma0: float = DEFAULT_SIGMA
    latent_dim: int = LATENT_DIM
    workers: int = 1


@dataclass
class SearchState:
    """Complete, picklable mid-run search state (the checkpoint payload).

    Resuming from a checkpoint with the same config and worker count
    reproduces the uninterrupted run exactly: the RNG, the archive, and
    every emitter's adaptation state travel together.
    """

    i: int
    rng: np.random.Generator
    archive: Archive
    emitters: list[ImprovementEmitter] | None = None


def _run_batched(
    config: SearchConfig,
    state: SearchState,
    ask: Callable[[SearchState, int], object],
    process: Callable[[SearchState, object, Evaluation], None],
    evaluate: Callable,
    total: int,
    checkpoint: Callable[[SearchState], None] | None,
) -> Archive:
    """Shared loop: ask a batch, evaluate (optionally on a worker pool),
    insert/tell serially in ask order. Batch size equals the worker count,
    so the RNG consumption order — and hence the archive — is a function of
    (seed, worker count) only."""
    gen = config.lam * config.emitters
    pool = None
    mapper = map
    if config.workers > 1:
        import multiprocessing

        pool = multiprocessing.get_context("fork").Pool(config.workers)
        mapper = pool.map
    try:
        while state.i < total:
            batch = min(max(config.workers, 1), total - state.i)
            candidates = [ask(state, state.i + j) for j in range(batch)]
            evaluations = list(mapper(evaluate, candidates))
            for cand, ev in zip(candidates, evaluations):
                process(state, cand, ev)
            before = state.i
            state.i += batch
            if checkpoint and state.i // gen > before // gen:
                checkpoint(state)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return state.archive


def run_lsi(
    config: SearchConfig,
    evaluate: Callable[[np.ndarray], Evaluation],
    state: SearchState | None = None,
    checkpoint: Callable[[SearchState], None] | None = None,
) -> Archive:
    """CMA-ME over latent space: ask round-robin per sample; covariance
    updates fire inside each emitter every ``lam`` samples (synchronous
    generations for determinism)."""
    if state is None:
        state = SearchState(
            0,
            np.random.default_rng(config.seed),
            Archive(config.archive),
            [
                ImprovementEmitter(config.latent_dim, config.sigma0, config.lam)
                for _ in range(config.emitters)
            ],
        )

    def ask(st_, idx):
        emitter = st_.emitters[idx % len(st_.emitters)]
        return (idx, emitter.ask(st_.rng))

    def process(st_, cand, ev):
        idx, z = cand
        emitter = st_.emitters[idx % len(st_.emitters)]
        outcome = st_.archive.insert(z, ev.grid, ev.f, ev.b, ev.metadata)
        emitter.tell(z, outcome, st_.archive, st_.rng)

    return _run_batched(
        config, state, ask, process, _LatentEval(evaluate), config.evaluations, checkpoint
    )


class _LatentEval:
    """Picklable adapter unpacking (index, z) batch items for the pool."""

    def __init__(self, evaluate):
        self.evaluate = evaluate

    def __call__(self, cand):
        return self.evaluate(cand[1])


def run_random_search(
    config: SearchConfig,
    evaluate: Callable[[np.ndarray], Evaluation],
    state: SearchState | None = None,
    checkpoint: Callable[[SearchState], None] | None = None,
) -> Archive:
    """Baseline: z ~ N(0, I) each evaluation, same insertion path."""
    if state is None:
        state = SearchState(0, np.random.default_rng(config.seed), Archive(config.archive))

    def ask(st_, idx):
        return (idx, st_.rng.standard_normal(config.latent_dim))

    def process(st_, cand, ev):
        st_.archive.insert(cand[1], ev.grid, ev.f, ev.b, ev.metadata)

    return _run_batched(
        config, state, ask, process, _LatentEval(evaluate), config.evaluations, checkpoint
    )


MUTATED_TILES = 20


def run_tile_mapelites(
    config: SearchConfig,
    evaluate: Callable[[KitchenGrid], Evaluation],
    width: int,
    height: int,
    iterations: int = 10_000,
    state: SearchState | None = None,
    checkpoint: Callable[[SearchState], None] | None = None,
) -> Archive:
    """Direct tile-space MAP-Elites baseline.

    Each iteration picks a uniform-random elite's raw genome (the pre-repair
    tile grid, kept in cell metadata), replaces 20 uniformly chosen tiles
    with uniformly chosen tokens, and sends the result down the same
    repair/evaluate/insert path. With an empty archive the genome is drawn
    uniformly at random.
    """
    from .grid import TOKENS

    if state is None:
        state = SearchState(0, np.random.default_rng(config.seed), Archive(config.archive))
    n_tiles = width * height

    def ask(st_, idx):
        elites = st_.archive.elites()
        if elites:
            parent = elites[int(st_.rng.integers(len(elites)))]
            tiles = list(parent.metadata["genome"])
            for pos in st_.rng.integers(n_tiles, size=MUTATED_TILES):
                tiles[int(pos)] = TOKENS[int(st_.rng.integers(len(TOKENS)))]
        else:
            tiles = [
                TOKENS[int(t)] for t in st_.rng.integers(len(TOKENS), size=n_tiles)
            ]
        return KitchenGrid(width, height, tuple(tiles))

    def process(st_, genome, ev):
        meta = dict(ev.metadata)
        meta["genome"] = "".join(genome.tiles)
        st_.archive.insert(None, ev.grid, ev.f, ev.b, meta)

    return _run_batched(config, state, ask, process, evaluate, iterations, checkpoint)
