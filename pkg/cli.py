import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from app.config import config
from app.schemas import (
    PlanReport,
    RunConfigFile,
    SceneFile,
    SkeletonFile,
    load_json_file,
    write_json_file,
)
from app.services.evaluation import SweepSpec, f1_eval, run_sweep, write_sweep_csv
from app.services.evaluation.report_service import render_report_file
from app.services.model import load_model
from app.services.planning import CemConfig, execute_and_verify, plan_skeleton
from app.services.scene_service import render_cloud
from app.services.simulation_service import GenerationConfig, generate_dataset, parse_horizon
from app.services.training import TrainConfig, train
from app.stores.corpus_store import read_corpus, write_corpus
from models import RELATIONS

app = typer.Typer(
    name="reldyn",
    help="Relational dynamics learning and skill planning in a blocks world",
    no_args_is_help=True,
)
console = Console()

# Configure logging with Rich handler
logging.basicConfig(
    level=getattr(logging, config.LOG_LEVEL, logging.INFO),
    format="%(message)s",
    datefmt="[%X]",
    handlers=[RichHandler(console=console, rich_tracebacks=True, show_path=False)],
)

# matplotlib is chatty about font discovery at DEBUG
logging.getLogger("matplotlib").setLevel(logging.WARNING)


@dataclass
class RunSettings:
    """Global flags shared by every command."""

    seed: int | None = None
    threads: int = config.THREADS
    config_file: RunConfigFile | None = None


_run = RunSettings()


def _seed(section_seed: int | None = None) -> int:
    """--seed, then the config file section, then RELDYN_SEED."""
    if _run.seed is not None:
        return _run.seed
    if section_seed is not None:
        return section_seed
    return config.SEED


def _section(name: str):
    return getattr(_run.config_file, name) if _run.config_file is not None else None


def _seed_option():
    return typer.Option(None, "--seed", "-s", help="Random seed (overrides the global --seed)")


def _config_option():
    return typer.Option(
        None,
        "--config",
        "-c",
        help="JSON run config (overrides the global --config)",
        exists=True,
        file_okay=True,
        dir_okay=False,
        readable=True,
    )


def _use_command_flags(seed: int | None, config_file: Path | None) -> None:
    """
    Let a command's own --seed and --config take over from the global ones.

    Raises:
        ValueError: If the config file does not match RunConfigFile
    """
    if seed is not None:
        _run.seed = seed
    if config_file is not None:
        _run.config_file = load_json_file(config_file, RunConfigFile)


def _fail(e: Exception) -> typer.Exit:
    console.print(f"[bold red]Error:[/bold red] {e}")
    return typer.Exit(code=1)


def _parse_values(text: str) -> list[int]:
    """'1,2,3' or '1..3' into a list of ints."""
    if ".." in text:
        low, high = parse_horizon(text)
        return list(range(low, high + 1))
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected '1,2,3' or '1..3', got '{text}'") from None


@app.callback()
def callback(
    seed: int | None = typer.Option(None, "--seed", "-s", help="Random seed (default RELDYN_SEED)"),
    threads: int = typer.Option(
        config.THREADS, "--threads", "-j", min=1, help="Worker threads for parallel stages"
    ),
    config_file: Path | None = typer.Option(
        None,
        "--config",
        "-c",
        help="JSON file with generation/model/train/cem/sweep sections",
        exists=True,
        file_okay=True,
        dir_okay=False,
        readable=True,
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose debug logging"),
):
    """
    Relational dynamics learning and skill planning in a blocks world
    """
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
        console.print("[dim]Debug logging enabled[/dim]\n")
    _run.seed = seed
    _run.threads = threads
    _run.config_file = None
    if config_file is not None:
        try:
            _run.config_file = load_json_file(config_file, RunConfigFile)
        except ValueError as e:
            raise _fail(e) from e


# ===== Data =====


@app.command(name="gen-data")
def gen_data(
    out: Path = typer.Option(
        config.DATA_DIR / "corpus.jsonl", "--out", "-o", help="Corpus JSONL file to write"
    ),
    episodes: int | None = typer.Option(None, "--episodes", "-n", min=0, help="Episode count"),
    objects: str | None = typer.Option(None, "--objects", help="Object count range, e.g. '2..4'"),
    min_objects: int | None = typer.Option(None, "--min-objects", help="Fewest objects per scene"),
    max_objects: int | None = typer.Option(None, "--max-objects", help="Most objects per scene"),
    horizon: str | None = typer.Option(None, "--horizon", help="Actions per episode, e.g. '1..3'"),
    push_fraction: float | None = typer.Option(
        None, "--push-fraction", min=0.0, max=1.0, help="Share of push actions"
    ),
    seed: int | None = _seed_option(),
    config_file: Path | None = _config_option(),
):
    """
    Generate a corpus of simulated episodes with a manifest sidecar.

    Examples:
        reldyn gen-data --episodes 3000 --min-objects 2 --max-objects 5 --horizon 1..3 --seed 0
        reldyn --seed 7 --threads 4 gen-data -n 100 --objects 2..4
    """
    try:
        _use_command_flags(seed, config_file)
        base = _section("generation") or GenerationConfig()
        updates: dict = {"seed": _seed(base.seed if _section("generation") else None)}
        if episodes is not None:
            updates["episodes"] = episodes
        if objects is not None:
            updates["min_objects"], updates["max_objects"] = parse_horizon(objects)
        if min_objects is not None:
            updates["min_objects"] = min_objects
        if max_objects is not None:
            updates["max_objects"] = max_objects
        if horizon is not None:
            updates["min_horizon"], updates["max_horizon"] = parse_horizon(horizon)
        if push_fraction is not None:
            updates["push_fraction"] = push_fraction
        generation = GenerationConfig.model_validate({**base.model_dump(), **updates})
    except ValueError as e:
        raise _fail(e) from e

    console.print(
        f"\n[bold cyan]Generating {generation.episodes} episodes "
        f"(seed {generation.seed}, {_run.threads} threads)...[/bold cyan]"
    )
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        console=console,
    ) as progress:
        task = progress.add_task("Simulating...", total=None)
        try:
            manifest = write_corpus(
                generate_dataset(generation, threads=_run.threads),
                out,
                seed=generation.seed,
                generation=generation.model_dump(),
            )
            progress.update(task, description="Complete!")
        except Exception as e:
            raise _fail(e) from e

    console.print(f"\n[bold green]✓[/bold green] Wrote {manifest.n_episodes} episodes to {out}")
    for name, indices in manifest.splits.items():
        console.print(f"  • {name}: {len(indices)}")
    console.print()


# ===== Training =====


@app.command(name="train")
def train_model(
    data: Path = typer.Option(
        ..., "--data", "-d", help="Corpus JSONL file", exists=True, dir_okay=False, readable=True
    ),
    out: Path = typer.Option(Path("ckpt"), "--out", "-o", help="Output directory"),
    ablation: str | None = typer.Option(
        None, "--ablation", "-a", help="rd_gnn, rd_pe_gnn, pe_gnn, dpd_gnn, mlp, rd_gnn_wo_lr, relations_only"
    ),
    epochs: int | None = typer.Option(None, "--epochs", "-e", min=1, help="Epochs (default RELDYN_EPOCHS)"),
    learning_rate: float | None = typer.Option(None, "--lr", help="Adam learning rate"),
    seed: int | None = _seed_option(),
    config_file: Path | None = _config_option(),
):
    """
    Train a model; writes best.ckpt, last.ckpt and metrics.csv to the output directory.

    Examples:
        reldyn train --data data/corpus.jsonl --out ckpt/rd_gnn
        reldyn train --config train.json --data data/corpus.jsonl --out ckpt/
        reldyn --config run.json train --data data/corpus.jsonl --ablation mlp
    """
    try:
        _use_command_flags(seed, config_file)
        section = _section("train")
        base = section or TrainConfig()
        updates: dict = {"seed": _seed(base.seed if section else None)}
        if ablation is not None:
            updates["ablation"] = ablation
        if epochs is not None:
            updates["epochs"] = epochs
        if learning_rate is not None:
            updates["learning_rate"] = learning_rate
        train_config = TrainConfig.model_validate({**base.model_dump(), **updates})
        corpus = read_corpus(data)
    except ValueError as e:
        raise _fail(e) from e

    console.print(
        f"\n[bold cyan]Training {train_config.ablation} for {train_config.epochs} epochs...[/bold cyan]\n"
    )
    try:
        result = train(corpus, train_config, out, model_config=_section("model"))
    except Exception as e:
        raise _fail(e) from e

    console.print(f"\n[bold green]✓[/bold green] Trained for {result.steps} steps")
    console.print(f"  • Best epoch: {result.best_epoch} ({result.best_checkpoint})")
    console.print(f"  • Last: {result.last_checkpoint}")
    console.print(f"  • Metrics: {result.metrics_path}\n")


# ===== Evaluation =====


@app.command(name="eval")
def evaluate(
    ckpt: Path = typer.Option(
        ..., "--ckpt", help="Checkpoint file", exists=True, dir_okay=False, readable=True
    ),
    data: Path = typer.Option(
        ..., "--data", "-d", help="Corpus JSONL file", exists=True, dir_okay=False, readable=True
    ),
    split: str = typer.Option("test", "--split", help="Corpus split to score (train, val, test)"),
    out: Path | None = typer.Option(None, "--out", "-o", help="Write the full report as JSON"),
):
    """
    Score detection and prediction F1 on a corpus split.

    Examples:
        reldyn eval --ckpt ckpt/rd_gnn/best.ckpt --data data/corpus.jsonl --out f1.json
    """
    try:
        model, metadata = load_model(ckpt)
        corpus = read_corpus(data)
        evaluation = f1_eval(model, corpus.iter_split(split))
    except Exception as e:
        raise _fail(e) from e

    table = Table(title=f"F1 on {split} ({evaluation.n_transitions} transitions)")
    table.add_column("Relation", style="cyan")
    table.add_column("Detect F1", justify="right")
    table.add_column("Predict F1", justify="right")
    for k, name in enumerate(RELATIONS):
        table.add_row(name, f"{evaluation.detect.f1[k]:.3f}", f"{evaluation.predict.f1[k]:.3f}")
    table.add_row(
        "[bold]macro[/bold]",
        f"[bold]{evaluation.detect.macro_f1:.3f}[/bold]",
        f"[bold]{evaluation.predict.macro_f1:.3f}[/bold]",
    )
    table.add_row("micro", f"{evaluation.detect.micro_f1:.3f}", f"{evaluation.predict.micro_f1:.3f}")
    console.print()
    console.print(table)
    console.print()

    if out is not None:
        write_json_file(
            out, {"checkpoint": str(ckpt), "split": split, "metadata": metadata, **evaluation.to_dict()}
        )
        console.print(f"[bold green]✓[/bold green] Wrote {out}\n")


# ===== Planning =====


@app.command(name="plan")
def plan(
    ckpt: Path = typer.Option(
        ..., "--ckpt", help="Checkpoint file", exists=True, dir_okay=False, readable=True
    ),
    scene_file: Path = typer.Option(
        ..., "--scene", help="Scene JSON", exists=True, dir_okay=False, readable=True
    ),
    skeleton_file: Path = typer.Option(
        ..., "--skeleton", help="Plan skeleton JSON", exists=True, dir_okay=False, readable=True
    ),
    report: Path | None = typer.Option(None, "--report", "-r", help="Write the plan report as JSON"),
    mode: str | None = typer.Option(None, "--mode", help="Execution mode: mean or sample_3sigma"),
    seed: int | None = _seed_option(),
    config_file: Path | None = _config_option(),
):
    """
    Plan one action per subgoal, execute the plan in the simulator and verify it.

    Examples:
        reldyn plan --ckpt ckpt/best.ckpt --scene scene.json --skeleton goals.json --seed 7
    """
    try:
        _use_command_flags(seed, config_file)
        model, _ = load_model(ckpt)
        scene = load_json_file(scene_file, SceneFile).to_domain()
        skeleton = load_json_file(skeleton_file, SkeletonFile).to_domain()
        section = _section("cem")
        cem = section or CemConfig()
        updates: dict = {"threads": _run.threads}
        if mode is not None:
            updates["execution_mode"] = mode
        cem = CemConfig.model_validate({**cem.model_dump(), **updates})
        seed = _seed()
        rng = np.random.default_rng(seed)
        result = plan_skeleton(render_cloud(scene), skeleton, cem, model, rng)
        result = execute_and_verify(scene, result, skeleton, model, cem, rng)
    except Exception as e:
        raise _fail(e) from e

    table = Table(title="Plan")
    table.add_column("Step", justify="right")
    table.add_column("Skill", style="cyan")
    table.add_column("Target", justify="right")
    table.add_column("(dx, dy)")
    table.add_column("log p", justify="right")
    table.add_column("Achieved")
    table.add_column("Detected")
    for k, step in enumerate(result.steps, start=1):
        dx, dy = step.executed_params or step.action.params
        table.add_row(
            str(k),
            step.action.skill.value,
            str(step.action.target),
            f"({dx:+.3f}, {dy:+.3f})",
            f"{step.predicted_score:.3f}",
            "[green]yes[/green]" if step.achieved else "[red]no[/red]",
            "yes" if step.achieved_learned else "no",
        )
    console.print()
    console.print(table)
    verdict = "[bold green]succeeded[/bold green]" if result.success else "[bold red]failed[/bold red]"
    console.print(Panel.fit(f"Plan {verdict}", border_style="cyan"))

    if report is not None:
        write_json_file(report, PlanReport.build(ckpt, seed, cem.execution_mode, skeleton, result))
        console.print(f"[bold green]✓[/bold green] Wrote {report}\n")


# ===== Sweeps =====


@app.command(name="sweep")
def sweep(
    ckpts: list[Path] = typer.Option(
        ..., "--ckpt", help="Checkpoint file (repeat to compare models)", exists=True, dir_okay=False
    ),
    out: Path = typer.Option(Path("sweep.csv"), "--out", "-o", help="Trial-level CSV to write"),
    axis: str | None = typer.Option(None, "--axis", help="n_objects, n_goal_relations or n_steps"),
    values: str | None = typer.Option(None, "--values", help="Swept values, e.g. '1,2,3' or '1..5'"),
    trials: int | None = typer.Option(None, "--trials", min=1, help="Trials per value"),
    seed: int | None = _seed_option(),
    config_file: Path | None = _config_option(),
):
    """
    Measure planning success rate as one setting varies.

    Examples:
        reldyn sweep --ckpt ckpt/rd_gnn/best.ckpt --axis n_goal_relations --values 1..5
        reldyn sweep --ckpt a.ckpt --ckpt b.ckpt --axis n_steps --values 1,2,3 --trials 20
    """
    try:
        _use_command_flags(seed, config_file)
        section = _section("sweep")
        base = section or SweepSpec()
        updates: dict = {"seed": _seed(base.seed if section else None)}
        if axis is not None:
            updates["axis"] = axis
        if values is not None:
            updates["values"] = _parse_values(values)
        if trials is not None:
            updates["trials"] = trials
        spec = SweepSpec.model_validate({**base.model_dump(), **updates})
        models = {}
        for path in ckpts:
            name = path.parent.name if path.stem in ("best", "last") and path.parent.name else path.stem
            if name in models:
                name = str(path)
            models[name], _ = load_model(path)
        cem = _section("cem") or CemConfig()
    except Exception as e:
        raise _fail(e) from e

    console.print(
        f"\n[bold cyan]Sweeping {spec.axis} over {spec.values} "
        f"({spec.trials} trials each, {len(models)} models)...[/bold cyan]\n"
    )
    try:
        result = run_sweep(spec, models, cem, threads=_run.threads)
        write_sweep_csv(result, out)
    except Exception as e:
        raise _fail(e) from e

    table = Table(title=f"Success rate by {spec.axis}")
    table.add_column("Model", style="cyan")
    for value in spec.values:
        table.add_column(str(value), justify="right")
    for name, rates in result.success_rates().items():
        table.add_row(name, *(f"{rates[v]:.2f}" for v in spec.values))
    console.print(table)
    console.print(f"\n[bold green]✓[/bold green] Wrote {len(result.rows)} rows to {out}\n")


@app.command(name="report")
def report(
    sweep_csv: Path = typer.Option(
        ..., "--sweep", help="Sweep CSV", exists=True, dir_okay=False, readable=True
    ),
    out: Path = typer.Option(Path("figures"), "--out", "-o", help="Directory for SVG figures"),
):
    """
    Render success-rate figures for a sweep CSV.

    Examples:
        reldyn report --sweep sweep.csv --out figures/
    """
    try:
        written = render_report_file(sweep_csv, out)
    except Exception as e:
        raise _fail(e) from e
    console.print(f"\n[bold green]✓[/bold green] Wrote {len(written)} figures")
    for path in written:
        console.print(f"  • {path}")
    console.print()


if __name__ == "__main__":
    app()
