"""Command implementations behind the ``seqsel`` CLI.

Each command takes already-parsed arguments, writes its files and returns a
summary dict that the CLI prints as a one-line JSON status.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import numpy as np

from seqsel.agent.evaluate import evaluate
from seqsel.agent.policy import ActionPolicy, UniformRandomPolicy
from seqsel.agent.selection_log import SelectionLog
from seqsel.agent.train_config import build_train_config
from seqsel.agent.trainer import train
from seqsel.config.config_loader import load_yaml
from seqsel.config.param_meta import PARAM_ALIASES, PARAM_META
from seqsel.data.io import load_category_map, load_csv, write_category_map, write_csv
from seqsel.data.models import Dataset, NormStats, SynthSpec
from seqsel.data.preprocessing import split, zscore_apply, zscore_fit
from seqsel.data.synth import planted_category_map, synth_generate
from seqsel.errors import ContractError
from seqsel.intel.report import analyze, write_report
from seqsel.metrics.report import confusion, summarize, write_histogram_csv
from seqsel.qnet.checkpoint import load_checkpoint, save_checkpoint
from seqsel.serialization import write_json, write_jsonl


logger = logging.getLogger(__name__)

SEED_ENV = "SEQSEL_SEED"
CHECKPOINT_DIR = "checkpoint"


@dataclass
class RunConfig:
    data: str
    out_dir: str = "runs/latest"
    label_column: str = "label"
    test_fraction: float = 0.2
    split_seed: int = 0
    stratified: bool = True
    validation_fraction: float = 0.1
    categories: Optional[str] = None
    profile: Optional[str] = None
    train: Dict[str, Any] = field(default_factory=dict)

    def validate(self) -> None:
        if not Path(self.data).exists():
            raise FileNotFoundError(f"Missing data file: {self.data}")
        if not (0.0 < self.test_fraction < 1.0):
            raise ValueError("test_fraction must lie strictly between 0 and 1")
        if not (0.0 <= self.validation_fraction < 1.0):
            raise ValueError("validation_fraction must lie in [0, 1)")


def env_seed() -> Optional[int]:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def load_run_config(config_path: Path | str) -> RunConfig:
    """
    Read a YAML or JSON run config. Run-level keys fill RunConfig; every
    training parameter sits at the top level too and is passed on as an
    override. Relative paths resolve against the config file's directory.
    """
    config_path = Path(config_path).resolve()
    raw = load_yaml(config_path)

    run_keys = {f.name for f in fields(RunConfig)} - {"train"}
    train_keys = set(PARAM_META) | set(PARAM_ALIASES)
    unknown = sorted(set(raw) - run_keys - train_keys)
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    if "data" not in raw:
        raise ValueError("config must name a 'data' CSV")

    run = RunConfig(
        **{k: v for k, v in raw.items() if k in run_keys},
        train={k: v for k, v in raw.items() if k in train_keys},
    )
    base = config_path.parent
    run.data = str(_resolve(base, run.data))
    run.out_dir = str(_resolve(base, run.out_dir))
    if run.categories is not None and (base / run.categories).exists():
        run.categories = str(_resolve(base, run.categories))

    seed = env_seed()
    if seed is not None:
        run.train["seed"] = seed
    run.validate()
    return run


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def _write_eval_outputs(
    out_dir: Path,
    log: SelectionLog,
    predictions: np.ndarray,
    dataset: Dataset,
    prefix: str = "",
) -> Dict[str, Any]:
    conf = confusion(predictions, dataset.labels, dataset.n_classes)
    report = summarize(conf, log.lengths(), dataset.n_features, labels=dataset.labels, class_names=dataset.class_names)
    paths = {
        "report": write_json(out_dir / f"{prefix}metrics.json", report),
        "confusion": conf.write_csv(out_dir / f"{prefix}confusion.csv", report.class_names),
        "histogram": write_histogram_csv(log.lengths(), out_dir / f"{prefix}episode_lengths.csv"),
        "selection_log": log.write_jsonl(out_dir / f"{prefix}selection_log.jsonl"),
    }
    logger.info(
        "Accuracy %.4f, mean episode length %.2f of %d features",
        report.accuracy, report.mean_episode_length, dataset.n_features,
    )
    return {
        "accuracy": report.accuracy,
        "mean_episode_length": report.mean_episode_length,
        "files": {k: str(v) for k, v in paths.items()},
    }


def cmd_train(config: str, progress: bool = False) -> Dict[str, Any]:
    run = load_run_config(config)
    out_dir = Path(run.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dataset = load_csv(run.data, run.label_column)
    fit_raw, test_raw = split(dataset, run.test_fraction, run.split_seed, run.stratified)
    val_raw = None
    if run.validation_fraction > 0:
        fit_raw, val_raw = split(fit_raw, run.validation_fraction, run.split_seed + 1, run.stratified)

    stats = zscore_fit(fit_raw)
    fit_ds = zscore_apply(fit_raw, stats)
    test_ds = zscore_apply(test_raw, stats)
    val_ds = zscore_apply(val_raw, stats) if val_raw is not None else None

    cfg = build_train_config(dataset.n_features, profile=run.profile, overrides=run.train)
    result = train(fit_ds, cfg, validation=val_ds, progress=progress)

    ckpt = save_checkpoint(
        out_dir / CHECKPOINT_DIR,
        result.params,
        result.opt,
        epoch=cfg.episodes,
        optimizer_config={
            "learning_rate": cfg.learning_rate,
            "lr_decay_factor": cfg.lr_decay_factor,
            "lr_decay_every": cfg.lr_decay_every,
            "lr_min": cfg.lr_min,
            "weight_decay": cfg.weight_decay,
            "max_grad_norm": cfg.max_grad_norm,
        },
        extra={
            "max_steps": cfg.max_steps,
            "label_column": run.label_column,
            "feature_names": dataset.feature_names,
            "class_names": dataset.class_names,
            "norm_stats": stats.to_dict(),
            "train_config": cfg.to_dict(),
        },
    )
    trace_path = write_jsonl(out_dir / "trace.jsonl", result.trace.to_dict(orient="records"))
    write_csv(test_raw, out_dir / "test.csv", label_column=run.label_column)

    log, predictions = evaluate(result.params, test_ds, cfg.max_steps)
    summary = _write_eval_outputs(out_dir, log, predictions, test_ds)
    summary["files"].update(checkpoint=str(ckpt), trace=str(trace_path), test_data=str(out_dir / "test.csv"))

    if run.categories is not None:
        cats = load_category_map(run.categories, dataset.n_features)
        write_report(analyze(log, test_ds, cats), out_dir / "analysis")
        summary["files"]["analysis"] = str(out_dir / "analysis")

    summary.update(episodes=cfg.episodes, updates=result.updates, seed=cfg.seed)
    return summary


def _load_for_checkpoint(ckpt: str, data: str, label_column: Optional[str]):
    params, _, manifest = load_checkpoint(ckpt)
    label_column = label_column or manifest.get("label_column", "label")
    dataset = load_csv(data, label_column, class_names=manifest.get("class_names"))
    if dataset.n_features != params.n_features or dataset.n_classes != params.n_classes:
        raise ContractError(
            f"checkpoint expects n={params.n_features}, k={params.n_classes}; "
            f"{data} has n={dataset.n_features}, k={dataset.n_classes}"
        )
    if manifest.get("norm_stats") is not None:
        dataset = zscore_apply(dataset, NormStats.from_dict(manifest["norm_stats"]))
    max_steps = manifest.get("max_steps") or params.n_features
    return params, dataset, int(max_steps)


def cmd_eval(ckpt: str, data: str, out: str, label_column: Optional[str] = None) -> Dict[str, Any]:
    params, dataset, max_steps = _load_for_checkpoint(ckpt, data, label_column)
    log, predictions = evaluate(params, dataset, max_steps)
    return _write_eval_outputs(Path(out), log, predictions, dataset)


def cmd_analyze(
    ckpt: str,
    data: str,
    categories: str,
    out: str,
    random_policy: bool = False,
    label_column: Optional[str] = None,
    seed: Optional[int] = None,
) -> Dict[str, Any]:
    params, dataset, max_steps = _load_for_checkpoint(ckpt, data, label_column)
    cats = load_category_map(categories, dataset.n_features)

    policy: Optional[ActionPolicy] = None
    if random_policy:
        seed = seed if seed is not None else (env_seed() or 0)
        policy = UniformRandomPolicy(dataset.n_classes, seed=seed)
    log, _ = evaluate(params, dataset, max_steps, policy=policy)

    out_dir = Path(out)
    report = analyze(log, dataset, cats)
    written = write_report(report, out_dir)
    log.write_jsonl(out_dir / "selection_log.jsonl")
    return {
        "learning_score": report.learning_score,
        "specialization_score": report.specialization_score,
        "adaptation": report.adaptation,
        "policy": "uniform_random" if random_policy else "greedy",
        "files": [str(p) for p in written],
    }


def load_synth_spec(spec_path: str) -> tuple[SynthSpec, Optional[int]]:
    raw = dict(load_yaml(Path(spec_path).resolve()))
    seed = raw.pop("seed", None)
    allowed = {f.name for f in fields(SynthSpec)}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ValueError(f"unknown synth spec keys: {unknown}")
    try:
        spec = SynthSpec(**raw)
    except TypeError as exc:
        raise ValueError(f"invalid synth spec: {exc}") from None
    spec.validate()
    return spec, seed


def cmd_synth(spec: str, out: str, categories_out: Optional[str] = None, seed: Optional[int] = None) -> Dict[str, Any]:
    synth_spec, spec_seed = load_synth_spec(spec)
    for candidate in (seed, env_seed(), spec_seed, 0):
        if candidate is not None:
            seed = int(candidate)
            break

    dataset = synth_generate(synth_spec, seed)
    path = write_csv(dataset, out)
    summary: Dict[str, Any] = {"rows": dataset.n_rows, "n_features": dataset.n_features, "seed": seed, "files": {"data": str(path)}}
    if categories_out is not None:
        summary["files"]["categories"] = str(write_category_map(planted_category_map(synth_spec), categories_out))
    logger.info("Wrote %d %s rows to %s", dataset.n_rows, synth_spec.rule, path)
    return summary


@dataclass(frozen=True)
class Command:
    name: str
    help: str
    run: Callable[..., Dict[str, Any]]
    add_arguments: Callable[[Any], None]


def _train_args(p) -> None:
    p.add_argument("--config", required=True, help="YAML or JSON run config")
    p.add_argument("--progress", action="store_true", help="show a progress bar while training")


def _eval_args(p) -> None:
    p.add_argument("--ckpt", required=True, help="checkpoint directory")
    p.add_argument("--data", required=True, help="CSV with the checkpoint's feature columns")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--label-column", dest="label_column", default=None)


def _analyze_args(p) -> None:
    _eval_args(p)
    p.add_argument("--categories", required=True, help="category map JSON file or preset name")
    p.add_argument("--random-policy", dest="random_policy", action="store_true",
                   help="roll out the uniform random valid policy instead of the network")
    p.add_argument("--seed", type=int, default=None, help="seed for --random-policy")


def _synth_args(p) -> None:
    p.add_argument("--spec", required=True, help="YAML or JSON synthetic dataset spec")
    p.add_argument("--out", required=True, help="CSV path to write")
    p.add_argument("--categories-out", dest="categories_out", default=None,
                   help="also write the planted category map as JSON")
    p.add_argument("--seed", type=int, default=None)


COMMANDS = [
    Command("train", "Train a Q-network from a run config", cmd_train, _train_args),
    Command("eval", "Greedy evaluation of a checkpoint on a CSV", cmd_eval, _eval_args),
    Command("analyze", "Selection-intelligence report for a checkpoint", cmd_analyze, _analyze_args),
    Command("synth", "Generate a synthetic dataset", cmd_synth, _synth_args),
]

