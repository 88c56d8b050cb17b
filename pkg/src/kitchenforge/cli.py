"""Command-line interface.

Subcommands cover the pipeline end to end: ``generate`` latents into
layouts, ``repair`` a layout file, ``simulate`` an episode, ``search`` a
configured experiment, ``heatmap`` and ``robustness`` reports over archive
files, and ``serve`` for the interactive play service.

Exit codes: 2 for configuration problems (bad config file, malformed grid,
missing path), 1 for runtime failures, 0 on success.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import generator as gen
from . import pipeline, qd
from .engine import HORIZON
from .evaluation import BC_SETS, PAIRS, episode_descriptor, episode_performance, simulate_episode
from .grid import GridParseError, check_solvability, parse_grid, serialize_grid
from .pipeline import ConfigError
from .repair import EditCosts, repair_grid

CONFIG_EXIT = 2
RUNTIME_EXIT = 1


def _config_fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(CONFIG_EXIT)


def _runtime_fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(RUNTIME_EXIT)


@click.group()
def main():
    """Procedural kitchen-layout generation, repair, search, and play."""


@main.command()
@click.option("--count", default=1, show_default=True, help="Number of layouts.")
@click.option("--seed", required=True, type=int, help="Latent sampling seed.")
@click.option("--backend", default="direct", type=click.Choice(["direct", "weights"]), show_default=True)
@click.option("--weights", type=click.Path(), default=None, help="Weights container (backend=weights).")
@click.option("--width", default=15, show_default=True)
@click.option("--height", default=10, show_default=True)
@click.option("--repair/--no-repair", "do_repair", default=False, help="Repair each layout to solvability.")
@click.option("--time-limit", default=10.0, show_default=True, help="Repair time limit (s).")
def generate(count, seed, backend, weights, width, height, do_repair, time_limit):
    """Sample latent vectors and print the decoded layouts."""
    loaded = None
    if backend == "weights":
        if not weights or not Path(weights).exists():
            _config_fail("backend=weights needs an existing --weights file")
        loaded = gen.load_weights(weights)
    rng = np.random.default_rng(seed)
    for i in range(count):
        z = rng.standard_normal(gen.LATENT_DIM)
        grid = (
            gen.direct_decode(z, width, height)
            if loaded is None
            else gen.decode(z, loaded, width, height)
        )
        note = "raw"
        if do_repair:
            result = repair_grid(grid, EditCosts(), time_limit=time_limit)
            grid = result.repaired
            note = f"repaired cost={result.edit_cost} status={result.solver_status}"
        solvable = check_solvability(grid).is_solvable
        click.echo(f"# layout {i} ({note}, solvable={solvable})")
        click.echo(serialize_grid(grid))
        if i + 1 < count:
            click.echo()


@main.command()
@click.argument("grid_file", type=click.Path())
@click.option("--backend", default="branch-and-bound",
              type=click.Choice(["branch-and-bound", "milp"]), show_default=True)
@click.option("--time-limit", default=10.0, show_default=True)
def repair(grid_file, backend, time_limit):
    """Repair a layout file to the nearest solvable kitchen."""
    try:
        grid = parse_grid(Path(grid_file).read_text())
    except FileNotFoundError:
        _config_fail(f"grid file not found: {grid_file}")
    except GridParseError as exc:
        _config_fail(f"malformed grid: {exc}")
    try:
        result = repair_grid(grid, EditCosts(), time_limit=time_limit, backend=backend)
    except Exception as exc:  # solver failure is a runtime error
        _runtime_fail(str(exc))
    click.echo(serialize_grid(result.repaired))
    click.echo(f"# cost={result.edit_cost} status={result.solver_status}")


@main.command()
@click.argument("grid_file", type=click.Path())
@click.option("--pair", default="qmdp", type=click.Choice(list(PAIRS)), show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--epsilon", default=0.0, show_default=True)
@click.option("--horizon", default=HORIZON, show_default=True, type=int)
@click.option("--log", "log_path", type=click.Path(), default=None, help="Write the episode log here.")
def simulate(grid_file, pair, seed, epsilon, horizon, log_path):
    """Run one episode on a solvable layout and print its scores."""
    try:
        grid = parse_grid(Path(grid_file).read_text())
    except FileNotFoundError:
        _config_fail(f"grid file not found: {grid_file}")
    except GridParseError as exc:
        _config_fail(f"malformed grid: {exc}")
    report = check_solvability(grid)
    if not report.is_solvable:
        _config_fail(f"layout is not solvable: {report.violations[0].message}")
    log = simulate_episode(grid, seed, pair=pair, epsilon=epsilon, horizon=horizon)
    perf = episode_performance(log, horizon)
    workload = episode_descriptor(log, "workload")
    fluency = episode_descriptor(log, "fluency")
    click.echo(f"performance,{perf:.6f}")
    click.echo(f"orders_delivered,{len(log.delivery_times())}")
    click.echo(f"workload,{workload[0]:g},{workload[1]:g},{workload[2]:g}")
    click.echo(f"fluency,{fluency[0]:.2f},{fluency[1]:g}")
    if log_path:
        Path(log_path).write_text("\n".join(log.to_lines()) + "\n")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--resume/--no-resume", default=True, show_default=True)
def search(config_path, out_dir, resume):
    """Run a configured archive search (experiment) to completion."""
    try:
        config = pipeline.load_config(config_path)
    except ConfigError as exc:
        _config_fail(str(exc))
    try:
        summary = pipeline.run_experiment(config, out_dir, resume=resume)
    except ConfigError as exc:
        _config_fail(str(exc))
    except Exception as exc:
        _runtime_fail(str(exc))
    click.echo(f"archive,{summary['archive_path']}")
    click.echo(f"coverage,{summary['coverage']}")
    click.echo(f"qd_score,{summary['qd_score']:.6f}")


def _load_archive(archive_file: str, bc_set: str) -> qd.Archive:
    cfg = (
        qd.workload_archive_config() if bc_set == "workload" else qd.fluency_archive_config()
    )
    try:
        lines = Path(archive_file).read_text().splitlines()
    except FileNotFoundError:
        _config_fail(f"archive file not found: {archive_file}")
    try:
        return qd.Archive.from_lines(cfg, lines)
    except Exception as exc:
        _config_fail(f"malformed archive file: {exc}")


@main.command()
@click.argument("archive_file", type=click.Path())
@click.option("--bc-set", default="workload", type=click.Choice(list(BC_SETS)), show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def heatmap(archive_file, bc_set, out_dir):
    """Render archive heatmaps (CSV matrices plus PNG images)."""
    archive = _load_archive(archive_file, bc_set)
    try:
        written = pipeline.render_heatmaps(archive, out_dir)
    except Exception as exc:
        _runtime_fail(str(exc))
    for path in written:
        click.echo(path)


@main.command()
@click.argument("archive_file", type=click.Path())
@click.option("--bc-set", default="workload", type=click.Choice(list(BC_SETS)), show_default=True)
@click.option("--pair", default="qmdp", type=click.Choice(["qmdp", "mdp"]), show_default=True)
@click.option("--epsilons", default="0,0.05,0.1,0.2,0.5", show_default=True)
@click.option("--trials", default=50, show_default=True, type=int)
@click.option("--sample", default=None, type=int, help="Cap on resimulated cells.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", type=click.Path(), default=None, help="Also write the CSV here.")
def robustness(archive_file, bc_set, pair, epsilons, trials, sample, seed, out_path):
    """Rank-stability sweep: resimulate archive cells with ε-random humans."""
    archive = _load_archive(archive_file, bc_set)
    try:
        eps = [float(e) for e in epsilons.split(",") if e.strip()]
    except ValueError:
        _config_fail(f"bad epsilon list: {epsilons!r}")
    try:
        table = pipeline.robustness_from_archive(
            archive, bc_set, epsilons=eps, trials=trials, pair=pair, sample=sample, seed=seed
        )
    except ValueError as exc:
        _config_fail(str(exc))
    except Exception as exc:
        _runtime_fail(str(exc))
    csv = table.to_csv()
    click.echo(csv, nl=False)
    if out_path:
        Path(out_path).write_text(csv)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True, type=int)
@click.option("--layout-dir", type=click.Path(), default=None,
              help="Directory of layout files the service may load.")
@click.option("--tick-ms", default=200, show_default=True, type=int)
@click.option("--static-dir", type=click.Path(), default=None,
              help="Serve a built browser client from this directory at /.")
def serve(host, port, layout_dir, tick_ms, static_dir):
    """Start the interactive play service (WebSocket)."""
    if layout_dir is not None and not Path(layout_dir).is_dir():
        _config_fail(f"layout dir not found: {layout_dir}")
    if static_dir is not None and not Path(static_dir).is_dir():
        _config_fail(f"static dir not found: {static_dir}")
    import uvicorn

    from .play import create_app

    app = create_app(layout_dir=layout_dir, default_tick_ms=tick_ms,
                     static_dir=static_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    except Exception as exc:
        _runtime_fail(str(exc))


if __name__ == "__main__":
    main()
