"""Experiment orchestration: config files, checkpointed runs, and reports.

An experiment is a YAML document naming the generator backend, the agent
pair, the objective, the descriptor set, and the search shape. ``include:``
pulls in a base document (paths relative to the including file) so the
standard experiment variants share one base config. ``run_experiment``
wires the evaluator into the chosen search loop, checkpoints once per
generation, and writes the archive plus CSV/PNG heatmaps and a run
manifest; an interrupted run resumes from the newest checkpoint and ends in
the same archive an uninterrupted run produces.
"""

from __future__ import annotations

import hashlib
import json
import os
import pickle
import time
from dataclasses import dataclass
from pathlib import Path

import yaml

from . import qd
from .evaluation import BC_SETS, OBJECTIVES, PAIRS, EnvEvaluator, episode_descriptor, simulate_episode
from .grid import DEFAULT_HEIGHT, DEFAULT_WIDTH
from .metrics import RobustnessTable, median_aggregate, spearman

WORKERS_ENV = "KITCHENFORGE_WORKERS"
SEARCHES = ("cma-me", "random", "tile")


class ConfigError(Exception):
    """Invalid experiment configuration (as opposed to a runtime failure)."""


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config_dict(path: str | Path) -> dict:
    """Read a YAML config, resolving ``include:`` chains depth-first."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config root must be a mapping: {path}")
    includes = doc.pop("include", None)
    merged: dict = {}
    if includes:
        if isinstance(includes, str):
            includes = [includes]
        for inc in includes:
            merged = _deep_merge(merged, load_config_dict(path.parent / inc))
    return _deep_merge(merged, doc)


@dataclass
class ExperimentConfig:
    seed: int
    pair: str = "qmdp"
    objective: str = "performance"
    bc_set: str = "workload"
    search: str = "cma-me"
    evaluations: int = 10_000
    trials: int = 1
    epsilon: float = 0.0
    emitters: int = qd.DEFAULT_EMITTERS
    lam: int = qd.DEFAULT_LAMBDA
    sigma0: float = qd.DEFAULT_SIGMA
    workers: int = 1
    generator_backend: str = "direct"
    weights_path: str | None = None
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    horizon: int = 100
    repair_time_limit: float = 10.0
    repair_backend: str = "branch-and-bound"
    joint_node_cap: int = 1000
    archive_lows: tuple[float, ...] | None = None
    archive_highs: tuple[float, ...] | None = None
    archive_bins: tuple[int, ...] | None = None

    def archive_config(self) -> qd.ArchiveConfig:
        if self.archive_bins is not None:
            return qd.ArchiveConfig(
                tuple(self.archive_lows), tuple(self.archive_highs), tuple(self.archive_bins)
            )
        if self.bc_set == "workload":
            return qd.workload_archive_config()
        return qd.fluency_archive_config()

    def canonical(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, default=list)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a merged config document into an ExperimentConfig."""
    if "seed" not in doc:
        raise ConfigError("config must set a seed")
    generator = doc.get("generator", {})
    backend = generator.get("backend", "direct")
    weights = generator.get("weights_path")
    if backend == "weights":
        if not weights:
            raise ConfigError("generator.backend=weights needs generator.weights_path")
        if not Path(weights).exists():
            raise ConfigError(f"weights file not found: {weights}")
    elif backend != "direct":
        raise ConfigError(f"unknown generator backend {backend!r}")
    pair = doc.get("pair", "qmdp")
    if pair not in PAIRS:
        raise ConfigError(f"unknown agent pair {pair!r}")
    objective = doc.get("objective", "performance")
    if objective not in OBJECTIVES:
        raise ConfigError(f"unknown objective {objective!r}")
    bc_set = doc.get("bc_set", "workload")
    if bc_set not in BC_SETS:
        raise ConfigError(f"unknown descriptor set {bc_set!r}")
    search = doc.get("search", "cma-me")
    if search not in SEARCHES:
        raise ConfigError(f"unknown search {search!r}")
    grid = doc.get("grid", {})
    repair = doc.get("repair", {})
    archive = doc.get("archive", {})
    workers = doc.get("workers")
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    try:
        return ExperimentConfig(
            seed=int(doc["seed"]),
            pair=pair,
            objective=objective,
            bc_set=bc_set,
            search=search,
            evaluations=int(doc.get("evaluations", 10_000)),
            trials=int(doc.get("trials", 1)),
            epsilon=float(doc.get("epsilon", 0.0)),
            emitters=int(doc.get("emitters", qd.DEFAULT_EMITTERS)),
            lam=int(doc.get("lam", qd.DEFAULT_LAMBDA)),
            sigma0=float(doc.get("sigma0", qd.DEFAULT_SIGMA)),
            workers=int(workers),
            generator_backend=backend,
            weights_path=weights,
            width=int(grid.get("width", DEFAULT_WIDTH)),
            height=int(grid.get("height", DEFAULT_HEIGHT)),
            horizon=int(doc.get("horizon", 100)),
            repair_time_limit=float(repair.get("time_limit", 10.0)),
            repair_backend=repair.get("backend", "branch-and-bound"),
            joint_node_cap=int(doc.get("joint_node_cap", 1000)),
            archive_lows=tuple(archive["lows"]) if "lows" in archive else None,
            archive_highs=tuple(archive["highs"]) if "highs" in archive else None,
            archive_bins=tuple(archive["bins"]) if "bins" in archive else None,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(load_config_dict(path))


def build_evaluator(config: ExperimentConfig) -> EnvEvaluator:
    return EnvEvaluator(
        pair=config.pair,
        bc_set=config.bc_set,
        objective=config.objective,
        trials=config.trials,
        epsilon=config.epsilon,
        seed=config.seed,
        horizon=config.horizon,
        width=config.width,
        height=config.height,
        repair_time_limit=config.repair_time_limit,
        repair_backend=config.repair_backend,
        weights_path=config.weights_path,
        joint_node_cap=config.joint_node_cap,
    )


def run_experiment(config: ExperimentConfig, out_dir: str | Path, resume: bool = True) -> dict:
    """Run the configured search to completion; returns a result summary.

    Artifacts in ``out_dir``: ``archive.jsonl`` (one JSON record per
    occupied cell), ``manifest.json`` (seed, config, config hash),
    per-slice heatmap CSVs and PNGs, and ``checkpoint.pkl`` while running.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "seed": config.seed,
        "config": json.loads(config.canonical()),
        "config_hash": config.digest(),
        "started": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    ckpt_path = out / "checkpoint.pkl"
    state = None
    if resume and ckpt_path.exists():
        with open(ckpt_path, "rb") as fh:
            saved = pickle.load(fh)
        if saved["config_hash"] != config.digest():
            raise ConfigError("checkpoint belongs to a different configuration")
        state = saved["state"]

    def checkpoint(st: qd.SearchState) -> None:
        tmp = ckpt_path.with_suffix(".tmp")
        with open(tmp, "wb") as fh:
            pickle.dump({"config_hash": config.digest(), "state": st}, fh)
        tmp.replace(ckpt_path)

    evaluator = build_evaluator(config)
    search_cfg = qd.SearchConfig(
        evaluations=config.evaluations,
        seed=config.seed,
        archive=config.archive_config(),
        emitters=config.emitters,
        lam=config.lam,
        sigma0=config.sigma0,
        workers=config.workers,
    )
    if config.search == "cma-me":
        archive = qd.run_lsi(search_cfg, evaluator, state=state, checkpoint=checkpoint)
    elif config.search == "random":
        archive = qd.run_random_search(search_cfg, evaluator, state=state, checkpoint=checkpoint)
    else:
        archive = qd.run_tile_mapelites(
            search_cfg,
            evaluator.evaluate_grid,
            config.width,
            config.height,
            iterations=config.evaluations,
            state=state,
            checkpoint=checkpoint,
        )

    archive_path = out / "archive.jsonl"
    archive_path.write_text("\n".join(archive.to_lines()) + "\n")
    render_heatmaps(archive, out)
    if ckpt_path.exists():
        ckpt_path.unlink()
    return {
        "archive_path": str(archive_path),
        "coverage": archive.coverage(),
        "qd_score": archive.qd_score(),
    }


def render_heatmaps(archive: qd.Archive, out_dir: str | Path, prefix: str = "heatmap") -> list[str]:
    """Write one CSV and one PNG per 2-D archive slice.

    The color scale normalizes f over the archive; empty cells are rendered
    as a distinct hatch color, never as f = 0.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    slices = archive.heatmap_slices()
    values = [c.f for c in archive.cells.values()]
    vmin = min(values, default=0.0)
    vmax = max(values, default=1.0)
    for name, matrix in slices.items():
        csv_path = out / f"{prefix}-{name}.csv"
        csv_path.write_text(qd.heatmap_csv(matrix))
        written.append(str(csv_path))

        data = np.array(
            [[np.nan if v is None else v for v in row] for row in matrix], dtype=float
        )
        fig, ax = plt.subplots(figsize=(5, 4))
        cmap = plt.get_cmap("viridis").copy()
        cmap.set_bad("#d0d0d0")
        masked = np.ma.masked_invalid(data)
        im = ax.imshow(masked.T, origin="lower", cmap=cmap, vmin=vmin, vmax=vmax, aspect="auto")
        ax.set_title(name)
        ax.set_xlabel("descriptor 0 bin")
        ax.set_ylabel("descriptor 1 bin")
        fig.colorbar(im, ax=ax, label="f")
        png_path = out / f"{prefix}-{name}.png"
        fig.savefig(png_path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(str(png_path))
    return written


@dataclass
class _Resimulator:
    """Picklable callable re-running one archive cell with the ε-random
    human; used by the robustness sweep."""

    grids: dict
    bc_set: str
    pair: str
    horizon: int
    joint_node_cap: int
    base_seed: int
    trials: int

    def __call__(self, key, epsilon: float, trial: int):
        grid = self.grids[key]
        # Same per-trial seed schedule the evaluator used, so the ε = 0
        # sweep reproduces the archive's own episodes exactly.
        seed = (self.base_seed * 1_000_003 + trial) % 2**32
        log = simulate_episode(
            grid,
            seed,
            pair=self.pair,
            epsilon=epsilon,
            horizon=self.horizon,
            joint_node_cap=self.joint_node_cap,
        )
        return episode_descriptor(log, self.bc_set)


def robustness_from_archive(
    archive: qd.Archive,
    bc_set: str,
    epsilons=(0.0, 0.05, 0.1, 0.2, 0.5),
    trials: int = 50,
    pair: str = "qmdp",
    sample: int | None = None,
    seed: int = 0,
    horizon: int = 100,
    joint_node_cap: int = 1000,
) -> RobustnessTable:
    """ε-robustness of archive ranks: resimulate cells with the ε-random
    human and correlate per-dimension ranks against the archive's values.

    ``sample`` caps the number of cells (uniform, seeded); workload sweeps
    use every cell, fluency sweeps typically sample 100.
    """
    import numpy as np

    from .metrics import robustness_analysis

    cells = archive.elites()
    if sample is not None and sample < len(cells):
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(cells), size=sample, replace=False)
        cells = [cells[i] for i in sorted(idx)]
    entries = [(cell.bins, cell.b) for cell in cells]
    resim = _Resimulator(
        grids={cell.bins: cell.grid for cell in cells},
        bc_set=bc_set,
        pair=pair,
        horizon=horizon,
        joint_node_cap=joint_node_cap,
        base_seed=seed,
        trials=trials,
    )
    names = (
        ["d_ingredients", "d_plates", "d_orders"]
        if bc_set == "workload"
        else ["concurrent_motion_pct", "stuck_timesteps"]
    )
    return robustness_analysis(entries, list(epsilons), resim, trials=trials, bc_names=names)
