"""CLI entry point for ssdlab."""

import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional

import typer
from typer import Typer

from ssdlab.core.config import configure_logging, settings

app = Typer(name="ssdlab", help="ssdlab - sequential social dilemma laboratory")

logger = logging.getLogger(__name__)


@app.callback()
def _setup(log_level: str = typer.Option("", help="Override SSDLAB_LOG_LEVEL.")) -> None:
    configure_logging(log_level or settings.log_level)


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Validation problems exit 1, anything else unexpected exits 2."""
    try:
        yield
    except typer.Exit:
        raise
    except ValueError as e:
        typer.echo(f"❌ {e}", err=True)
        raise typer.Exit(code=1) from None
    except Exception as e:
        logger.exception("command failed")
        typer.echo(f"💥 {type(e).__name__}: {e}", err=True)
        raise typer.Exit(code=2) from None


@app.command()
def classify(path: Path) -> None:
    """Check a matrix game against the social dilemma conditions."""
    from ssdlab.core.dilemma import check_social_dilemma, load_game

    with _exit_codes():
        report = check_social_dilemma(load_game(path))
    symmetry = "asymmetric" if report.asymmetric else "symmetric"
    typer.echo(f"{report.classification.value}, {symmetry}")
    for agent, checks in report.checks.items():
        flags = " ".join(
            f"{name}={'yes' if getattr(checks, name) else 'no'}"
            for name in ("c1", "c2", "c3", "greed", "fear")
        )
        typer.echo(f"  agent {agent}: {flags}")
    typer.echo(f"csv: {path},{report.classification.value},{str(report.asymmetric).lower()}")
    if not report.is_social_dilemma:
        raise typer.Exit(code=1)


@app.command()
def normalize(path: Path, output: Optional[Path] = typer.Option(None, "--output", "-o")) -> None:
    """Rescale each agent's outcomes onto [0, 1]."""
    from ssdlab.core.dilemma import dump_game, load_game, normalize_game

    with _exit_codes():
        text = dump_game(normalize_game(load_game(path)))
        if output is None:
            typer.echo(text, nl=False)
        else:
            output.write_text(text)
            typer.echo(f"✅ Normalized game written to {output}")


@app.command()
def schelling(
    config: Path,
    seeds: Optional[List[int]] = typer.Option(None, "--seed", help="Override the config seeds."),
    episodes: Optional[int] = typer.Option(None, help="Episodes per assignment and seed."),
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
) -> None:
    """Run scripted cooperate/defect sweeps and verify the dilemma empirically."""
    from ssdlab.core.dilemma import write_schelling_csv
    from ssdlab.core.experiment import load_experiment, resolve_output_dir
    from ssdlab.core.schelling import schelling_sweep

    with _exit_codes():
        experiment = load_experiment(config)
        out_dir = resolve_output_dir(experiment, output)
        typer.echo(f"🎲 Schelling sweep for {experiment.name}...")
        result = schelling_sweep(
            experiment.env,
            seeds or experiment.seeds,
            episodes or experiment.schelling_episodes,
        )
        csv_path = write_schelling_csv(result.diagram, out_dir / "schelling.csv")
    for agent_type, verdict in result.report.types.items():
        typer.echo(f"  {agent_type}: {verdict.verdict.value}")
    for agent_type, k in result.report.failures:
        typer.echo(f"  ⚠️  cooperation beats defection for {agent_type} at k={k}")
    typer.echo(f"✅ Diagram written to {csv_path} (verdict: {result.report.verdict.value})")


@app.command()
def train(
    config: Path,
    workers: Optional[int] = typer.Option(None, help="Seed cells run in parallel."),
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
) -> None:
    """Train independent Q-learners for every seed of a config."""
    from ssdlab.core.experiment import load_experiment, run_experiment

    with _exit_codes():
        experiment = load_experiment(config)
        method = experiment.shaping.method.value
        typer.echo(f"🚀 Training {experiment.name} ({method}) on seeds {experiment.seeds}")
        manifest = run_experiment(experiment, workers, output, config_text=config.read_text())
    for seed, files in manifest.files.items():
        typer.echo(f"  seed {seed}: {', '.join(files)}")
    typer.echo(f"✅ Run complete, config hash {manifest.config_hash[:12]}")


@app.command()
def trace(path: Path, output: Optional[Path] = typer.Option(None, "--output", "-o")) -> None:
    """Replay a visibility trace and dump every estimate table."""
    from ssdlab.core.estimates import write_estimate_dump
    from ssdlab.core.trace import load_trace, run_trace

    with _exit_codes():
        result = run_trace(load_trace(path))
        target = output or path.with_suffix(".dump.csv")
        write_estimate_dump(result.rows, target)
    age = "n/a" if result.average_age is None else f"{result.average_age:.6g}"
    typer.echo(f"✅ {len(result.rows)} estimate rows written to {target} (average age {age})")


@app.command()
def report(run_dir: Path) -> None:
    """Emit plot data and summarize the final evaluation of finished runs."""
    from ssdlab.core.experiment import report_runs

    with _exit_codes():
        plot_path, summary = report_runs(run_dir)
    for method, metrics in summary.items():
        typer.echo(f"📊 {method}")
        for name, value in metrics.items():
            typer.echo(f"  {name}: {value:.4f}")
    typer.echo(f"✅ Plot data written to {plot_path}")


@app.command()
def test() -> None:
    """Run tests."""
    import subprocess

    subprocess.run([sys.executable, "-m", "pytest"], check=True)


@app.command()
def lint() -> None:
    """Run linting."""
    import subprocess

    subprocess.run([sys.executable, "-m", "ruff", "check", "."], check=True)
    subprocess.run([sys.executable, "-m", "black", "--check", "."], check=True)
    subprocess.run([sys.executable, "-m", "mypy", "ssdlab"], check=True)


def main() -> None:
    """Main entry point."""
    app()


if __name__ == "__main__":
    main()
