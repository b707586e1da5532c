"""Experiment configs, per-seed training cells, manifests and reports."""

import configparser
import hashlib
import io
import logging
import platform
import shutil
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from ssdlab import __version__
from ssdlab.core.checkpoint import checkpoint_path, save_checkpoint
from ssdlab.core.config import get_output_root, settings
from ssdlab.core.errors import ConfigurationError
from ssdlab.core.learning import train
from ssdlab.core.metrics import emit_plot_data, read_metrics_csv, write_metrics_csv
from ssdlab.models.agents import AgentSpec
from ssdlab.models.environment import EnvConfig
from ssdlab.models.experiment import ExperimentConfig, RunManifest
from ssdlab.models.learning import LearnerConfig
from ssdlab.models.shaping import ShapingConfig

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
MERGED_METRICS = "metrics.csv"
PLOT_DATA = "plot_data.csv"

_EXPERIMENT_KEYS = ("name", "seeds", "output_dir", "peace_scope", "schelling_episodes")
_LIST_KEYS = {"seeds", "regrowth_probs"}


def _split(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _parse_centers(value: str) -> List[Tuple[int, int]]:
    centers = []
    for item in _split(value):
        x, _, y = item.partition(":")
        centers.append((int(x), int(y)))
    return centers


def _section_values(section: configparser.SectionProxy) -> Dict[str, Any]:
    values: Dict[str, Any] = {}
    for key, value in section.items():
        if key in _LIST_KEYS:
            values[key] = _split(value)
        elif key == "apple_patch_centers":
            values[key] = _parse_centers(value)
        else:
            values[key] = value
    return values


def parse_experiment_text(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse an INI experiment config.

    Without `[agent.<id>]` sections the population comes from the
    environment/variant preset, sized by `n_agents` in `[env]`.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(text, source=source)
        if not parser.has_section("env"):
            raise ConfigurationError(f"{source}: missing [env] section")

        experiment: Dict[str, Any] = {}
        if parser.has_section("experiment"):
            experiment = _section_values(parser["experiment"])
        unknown = set(experiment) - set(_EXPERIMENT_KEYS)
        if unknown:
            raise ConfigurationError(f"{source}: unknown [experiment] keys {sorted(unknown)}")

        env_values = _section_values(parser["env"])
        n_agents = env_values.pop("n_agents", None)
        agents = []
        for section in parser.sections():
            if section.startswith("agent."):
                values = dict(parser[section])
                agent_type = values.pop("type", "standard")
                agents.append(AgentSpec.for_type(section.split(".", 1)[1], agent_type, **values))
        if agents:
            env = EnvConfig(agents=agents, **env_values)
        else:
            environment = env_values.pop("environment", "coins")
            variant = env_values.pop("variant", "symmetric")
            env = EnvConfig.preset(
                environment, variant, int(n_agents) if n_agents else None, **env_values
            )

        shaping_values: Dict[str, Any] = {}
        phi: Dict[str, str] = {}
        if parser.has_section("shaping"):
            for key, value in parser["shaping"].items():
                if key.startswith("phi."):
                    phi[key.split(".", 1)[1]] = value
                else:
                    shaping_values[key] = value
        shaping = ShapingConfig(phi=phi, **shaping_values)
        learner = LearnerConfig(
            **(dict(parser["learner"]) if parser.has_section("learner") else {})
        )
        return ExperimentConfig(env=env, shaping=shaping, learner=learner, **experiment)
    except configparser.Error as e:
        raise ConfigurationError(f"{source}: {e}") from None
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigurationError(f"{source}: {location}: {first['msg']}") from None


def load_experiment(path: Union[str, Path]) -> ExperimentConfig:
    """Load an experiment config file."""
    path = Path(path)
    return parse_experiment_text(path.read_text(), source=str(path))


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        if value and isinstance(value[0], (list, tuple)):
            return ", ".join(f"{x}:{y}" for x, y in value)
        return ", ".join(_format(item) for item in value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def dump_experiment(config: ExperimentConfig) -> str:
    """Serialize a config; parsing the result yields an equal config."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    parser["experiment"] = {key: _format(getattr(config, key)) for key in _EXPERIMENT_KEYS}
    env = config.env.model_dump(exclude={"agents"})
    parser["env"] = {key: _format(value) for key, value in env.items()}
    for agent in config.env.agents:
        values = agent.model_dump(exclude={"agent_id"})
        values["type"] = values.pop("agent_type")
        parser[f"agent.{agent.agent_id}"] = {key: _format(value) for key, value in values.items()}
    shaping = config.shaping.model_dump(by_alias=True, exclude={"phi"})
    shaping_section = {key: _format(value) for key, value in shaping.items()}
    shaping_section.update({f"phi.{k}": _format(float(v)) for k, v in config.shaping.phi.items()})
    parser["shaping"] = shaping_section
    parser["learner"] = {key: _format(value) for key, value in config.learner.model_dump().items()}
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(dump_experiment(config).encode()).hexdigest()


def resolve_output_dir(
    config: ExperimentConfig, override: Optional[Union[str, Path]] = None
) -> Path:
    if override:
        out = Path(override)
    elif config.output_dir:
        out = Path(config.output_dir)
    else:
        out = get_output_root() / config.name
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_seed_cell(config: ExperimentConfig, seed: int, out_dir: Union[str, Path]) -> List[str]:
    """Train one seed and write its log, metrics and checkpoint files."""
    out_dir = Path(out_dir)
    log = train(
        config.env, config.shaping, config.learner, seed=seed, peace_scope=config.peace_scope
    )
    log_path = log.write_csv(out_dir / f"log_seed{seed}.csv")
    metrics_path = write_metrics_csv(
        [(step, seed, metrics) for step, metrics in log.evaluations],
        out_dir / f"metrics_seed{seed}.csv",
    )
    compression = settings.checkpoint_compression
    ckpt = checkpoint_path(out_dir, seed, compression)
    save_checkpoint(log.q_tables, ckpt, compression)
    return [log_path.name, metrics_path.name, ckpt.name, f"{ckpt.name}.sha256"]


def _merge_metrics(out_dir: Path, seeds: List[int]) -> Path:
    merged = out_dir / MERGED_METRICS
    with merged.open("w", newline="") as target:
        for index, seed in enumerate(seeds):
            with (out_dir / f"metrics_seed{seed}.csv").open(newline="") as source:
                header = source.readline()
                if index == 0:
                    target.write(header)
                shutil.copyfileobj(source, target)
    return merged


def run_experiment(
    config: ExperimentConfig,
    workers: Optional[int] = None,
    output_dir: Optional[Union[str, Path]] = None,
    config_text: Optional[str] = None,
) -> RunManifest:
    """Train every seed of a config, merge metrics and write the manifest."""
    out_dir = resolve_output_dir(config, output_dir)
    workers = workers or settings.workers
    files: Dict[str, List[str]] = {}
    if workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                seed: pool.submit(run_seed_cell, config, seed, out_dir) for seed in config.seeds
            }
            for seed, future in futures.items():
                files[str(seed)] = future.result()
    else:
        for seed in config.seeds:
            files[str(seed)] = run_seed_cell(config, seed, out_dir)
    _merge_metrics(out_dir, config.seeds)

    manifest = RunManifest(
        name=config.name,
        method=config.shaping.method.value,
        config_hash=config_hash(config),
        seeds=list(config.seeds),
        files=files,
        merged_metrics=MERGED_METRICS,
        versions={
            "ssdlab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        config=config_text if config_text is not None else dump_experiment(config),
        phi=dict(config.shaping.phi),
    )
    (out_dir / MANIFEST_NAME).write_text(manifest.model_dump_json(indent=2))
    logger.info("run %s written to %s", config.name, out_dir)
    return manifest


def load_manifest(run_dir: Union[str, Path]) -> RunManifest:
    path = Path(run_dir) / MANIFEST_NAME
    if not path.exists():
        raise ConfigurationError(f"no {MANIFEST_NAME} in {run_dir}")
    return RunManifest.model_validate_json(path.read_text())


def find_runs(root: Union[str, Path]) -> List[Path]:
    """A run directory itself, or every run directory directly below it."""
    root = Path(root)
    if (root / MANIFEST_NAME).exists():
        return [root]
    runs: List[Path] = []
    if root.is_dir():
        runs = sorted(p for p in root.iterdir() if (p / MANIFEST_NAME).exists())
    if not runs:
        raise ConfigurationError(f"no run directories found under {root}")
    return runs


def report_runs(root: Union[str, Path]) -> Tuple[Path, Dict[str, Dict[str, float]]]:
    """Write plot data for all runs under `root` and summarize final evaluations.

    The summary maps each method to the seed-averaged global metrics at the
    last evaluation step.
    """
    root = Path(root)
    rows_by_method: Dict[str, List[Dict[str, str]]] = {}
    summary: Dict[str, Dict[str, float]] = {}
    for run_dir in find_runs(root):
        manifest = load_manifest(run_dir)
        rows = read_metrics_csv(run_dir / manifest.merged_metrics)
        method = manifest.method
        if method in rows_by_method:
            method = f"{manifest.method}:{manifest.name}"
        rows_by_method[method] = rows
        if not rows:
            continue
        last = max(int(row["eval_step"]) for row in rows)
        final: Dict[str, List[float]] = {}
        for row in rows:
            if int(row["eval_step"]) == last and row["scope"] == "global":
                final.setdefault(row["name"], []).append(float(row["value"]))
        summary[method] = {name: float(np.mean(values)) for name, values in final.items()}
    plot_path = emit_plot_data(rows_by_method, root / PLOT_DATA)
    return plot_path, summary
