"""Command line front end: run, compare, report, defaults.

Configuration comes from a named preset, an optional strict JSON config file
(unknown keys are rejected with the offending field named), and CLI flag
overrides, in that order. All emitted CSVs use a header row, LF line endings,
and 9 significant digits for reals so that identical configurations produce
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .data import CsvSource, DatasetSpec, SyntheticSource, materialize_clients
from .metrics import (
    argmax_decisions,
    classification_metrics,
    confusion,
    roc_sweep,
    trapezoid_auc,
)
from .model import ModelParams
from .simulator import (
    METHODS,
    CalibrationConfig,
    ClusterConfig,
    LatencyModel,
    RoundReport,
    Scenario,
    build_scenario,
    run_round,
    init_state,
    straggler_metrics,
    _should_stop,
)
from .clustering import ResourceWeights
from .model import TrainConfig

__all__ = ["main", "cmd_run", "cmd_compare", "cmd_report", "ConfigError"]


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 1."""


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".9g")
    if value is None:
        return ""
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# config schema


_SCHEMA = {
    "preset": None,
    "method": None,
    "seed": None,
    "rounds": None,
    "num_clients": None,
    "num_clusters": None,
    "straggler_fraction": None,
    "straggler_slowdown": None,
    "archetype_mix": None,
    "attack_classes": None,
    "dataset": {
        "source": {
            "type": None,
            "num_classes": None,
            "num_features": None,
            "samples_per_class": None,
            "class_separation": None,
            "path": None,
            "label_column": None,
        },
        "partition": None,
        "concentration": None,
        "shards_per_client": None,
        "calibration_fraction": None,
        "holdout_fraction": None,
        "seed": None,
    },
    "train": {
        "learning_rate": None,
        "batch_size": None,
        "local_epochs": None,
        "dropout_rate": None,
        "proximal_coeff": None,
    },
    "clustering": {
        "fuzzifier": None,
        "participation_floor": None,
        "profile_jitter": None,
        "max_iter": None,
        "tol": None,
        "weights": {"cpu": None, "memory": None, "bandwidth": None},
    },
    "calibration": {
        "enabled": None,
        "initial_confidence": None,
        "fnr_sensitivity": None,
        "fpr_sensitivity": None,
        "resource_sensitivity": None,
    },
    "latency": {
        "work_units_per_sample": None,
        "bytes_per_param": None,
        "round_overhead_s": None,
        "cpu_floor": None,
        "fedprox_partial_work": None,
    },
}


def _check_keys(cfg: dict, schema: dict, prefix: str = "") -> None:
    for key, value in cfg.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(f"unknown key {path!r}")
        sub = schema[key]
        if isinstance(sub, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"key {path!r} must be an object")
            _check_keys(value, sub, prefix=f"{path}.")


def _build_source(cfg: dict):
    kind = cfg.get("type", "synthetic")
    rest = {k: v for k, v in cfg.items() if k != "type"}
    try:
        if kind == "synthetic":
            return SyntheticSource(**rest)
        if kind == "csv":
            return CsvSource(**rest)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"dataset.source: {exc}") from exc
    raise ConfigError(f"dataset.source.type must be 'synthetic' or 'csv', got {kind!r}")


def _build_section(name: str, cls, cfg: dict, base=None):
    try:
        if base is not None:
            return replace(base, **cfg)
        return cls(**cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def resolve_scenario(
    preset: str | None,
    config: dict | None,
    method: str | None = None,
    seed: int | None = None,
    rounds: int | None = None,
    straggler_fraction: float | None = None,
    straggler_slowdown: float | None = None,
) -> Scenario:
    """Merge preset, config file, and CLI overrides into a Scenario."""
    cfg = dict(config) if config else {}
    _check_keys(cfg, _SCHEMA)
    preset = preset or cfg.pop("preset", None)
    try:
        scenario = build_scenario(preset) if preset else Scenario()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    top: dict = {}
    for key in (
        "method",
        "seed",
        "rounds",
        "num_clients",
        "num_clusters",
        "straggler_fraction",
        "straggler_slowdown",
    ):
        if key in cfg:
            top[key] = cfg[key]
    if "archetype_mix" in cfg:
        mix = cfg["archetype_mix"]
        if not isinstance(mix, dict):
            raise ConfigError("archetype_mix must map archetype names to fractions")
        top["archetype_mix"] = tuple((k, float(v)) for k, v in mix.items())
    if "attack_classes" in cfg:
        top["attack_classes"] = tuple(int(c) for c in cfg["attack_classes"])

    dataset = scenario.dataset
    dataset_seed_explicit = False
    if "dataset" in cfg:
        dcfg = dict(cfg["dataset"])
        if "source" in dcfg:
            dcfg["source"] = _build_source(dcfg["source"])
        dataset_seed_explicit = "seed" in dcfg
        dataset = _build_section("dataset", DatasetSpec, dcfg, base=dataset)
    train_cfg = scenario.train_cfg
    if "train" in cfg:
        train_cfg = _build_section("train", TrainConfig, cfg["train"], base=train_cfg)
    cluster_cfg = scenario.cluster_cfg
    if "clustering" in cfg:
        ccfg = dict(cfg["clustering"])
        if "weights" in ccfg:
            ccfg["weights"] = _build_section(
                "clustering.weights", ResourceWeights, ccfg["weights"]
            )
        cluster_cfg = _build_section(
            "clustering", ClusterConfig, ccfg, base=cluster_cfg
        )
    calib_cfg = scenario.calib_cfg
    if "calibration" in cfg:
        calib_cfg = _build_section(
            "calibration", CalibrationConfig, cfg["calibration"], base=calib_cfg
        )
    latency = scenario.latency
    if "latency" in cfg:
        latency = _build_section("latency", LatencyModel, cfg["latency"], base=latency)

    # CLI flags override the file
    if method is not None:
        top["method"] = method
    if seed is not None:
        top["seed"] = seed
    if rounds is not None:
        top["rounds"] = rounds
    if straggler_fraction is not None:
        top["straggler_fraction"] = straggler_fraction
    if straggler_slowdown is not None:
        top["straggler_slowdown"] = straggler_slowdown

    if "seed" in top and not dataset_seed_explicit:
        dataset = replace(dataset, seed=int(top["seed"]))

    try:
        return replace(
            scenario,
            dataset=dataset,
            train_cfg=train_cfg,
            cluster_cfg=cluster_cfg,
            calib_cfg=calib_cfg,
            latency=latency,
            **top,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def scenario_to_dict(scenario: Scenario) -> dict:
    """Serialize a Scenario into the config file schema (round-trippable)."""
    source = scenario.dataset.source
    if isinstance(source, SyntheticSource):
        source_dict = {
            "type": "synthetic",
            "num_classes": source.num_classes,
            "num_features": source.num_features,
            "samples_per_class": source.samples_per_class,
            "class_separation": source.class_separation,
        }
    else:
        source_dict = {
            "type": "csv",
            "path": source.path,
            "label_column": source.label_column,
            "num_classes": source.num_classes,
        }
    return {
        "method": scenario.method,
        "seed": scenario.seed,
        "rounds": scenario.rounds,
        "num_clients": scenario.num_clients,
        "num_clusters": scenario.num_clusters,
        "straggler_fraction": scenario.straggler_fraction,
        "straggler_slowdown": scenario.straggler_slowdown,
        "archetype_mix": {name: frac for name, frac in scenario.archetype_mix},
        "attack_classes": (
            list(scenario.attack_classes)
            if scenario.attack_classes is not None
            else sorted(scenario.resolved_attack_classes(scenario.dataset.num_classes))
        ),
        "dataset": {
            "source": source_dict,
            "partition": scenario.dataset.partition,
            "concentration": scenario.dataset.concentration,
            "shards_per_client": scenario.dataset.shards_per_client,
            "calibration_fraction": scenario.dataset.calibration_fraction,
            "holdout_fraction": scenario.dataset.holdout_fraction,
            "seed": scenario.dataset.seed,
        },
        "train": {
            "learning_rate": scenario.train_cfg.learning_rate,
            "batch_size": scenario.train_cfg.batch_size,
            "local_epochs": scenario.train_cfg.local_epochs,
            "dropout_rate": scenario.train_cfg.dropout_rate,
            "proximal_coeff": scenario.train_cfg.proximal_coeff,
        },
        "clustering": {
            "fuzzifier": scenario.cluster_cfg.fuzzifier,
            "participation_floor": scenario.cluster_cfg.participation_floor,
            "profile_jitter": scenario.cluster_cfg.profile_jitter,
            "max_iter": scenario.cluster_cfg.max_iter,
            "tol": scenario.cluster_cfg.tol,
            "weights": {
                "cpu": scenario.cluster_cfg.weights.cpu,
                "memory": scenario.cluster_cfg.weights.memory,
                "bandwidth": scenario.cluster_cfg.weights.bandwidth,
            },
        },
        "calibration": {
            "enabled": scenario.calib_cfg.enabled,
            "initial_confidence": scenario.calib_cfg.initial_confidence,
            "fnr_sensitivity": scenario.calib_cfg.fnr_sensitivity,
            "fpr_sensitivity": scenario.calib_cfg.fpr_sensitivity,
            "resource_sensitivity": scenario.calib_cfg.resource_sensitivity,
        },
        "latency": {
            "work_units_per_sample": scenario.latency.work_units_per_sample,
            "bytes_per_param": scenario.latency.bytes_per_param,
            "round_overhead_s": scenario.latency.round_overhead_s,
            "cpu_floor": scenario.latency.cpu_floor,
            "fedprox_partial_work": scenario.latency.fedprox_partial_work,
        },
    }


# ---------------------------------------------------------------------------
# commands


def _train_with_state(scenario: Scenario):
    state = init_state(scenario)
    reports: list[RoundReport] = []
    converged = None
    for _ in range(scenario.rounds):
        state, report = run_round(state, scenario)
        reports.append(report)
        if _should_stop(state.accuracy_trace):
            converged = report.round_index
            break
    return reports, state, converged


def _rounds_rows(scenario: Scenario, reports: list[RoundReport]):
    header = [
        "round",
        "global_loss",
        "accuracy",
        "precision",
        "recall",
        "f1",
        "fpr",
        "fnr",
        "sync_latency_s",
    ]
    cluster_detail = scenario.method == "cfhfc"
    if cluster_detail:
        for k in range(scenario.num_clusters):
            header += [
                f"cluster{k}_latency_s",
                f"cluster{k}_confidence",
                f"cluster{k}_threshold",
                f"cluster{k}_fnr_hat",
                f"cluster{k}_fpr_hat",
            ]
    rows = []
    for r in reports:
        row = [
            r.round_index,
            r.global_loss,
            r.accuracy,
            r.precision,
            r.recall,
            r.f1,
            r.fpr,
            r.fnr,
            r.sync_latency_s,
        ]
        if cluster_detail:
            stats = {s.cluster_id: s for s in r.cluster_stats}
            for k in range(scenario.num_clusters):
                s = stats.get(k)
                if s is None:
                    row += [0.0, None, None, None, None]
                else:
                    row += [s.latency_s, s.confidence, s.threshold, s.fnr_hat, s.fpr_hat]
        rows.append(row)
    return header, rows


def _final_summary(scenario: Scenario, reports: list[RoundReport], state, converged):
    final = reports[-1]
    auc = None
    if state.holdout is not None:
        attack = scenario.resolved_attack_classes(state.num_classes)
        points = roc_sweep(
            state.global_model, state.holdout, attack, np.linspace(0.0, 1.0, 101)
        )
        auc = trapezoid_auc(points)
    syncs = [r.sync_latency_s for r in reports]
    return {
        "method": scenario.method,
        "seed": scenario.seed,
        "rounds_run": len(reports),
        "converged_round": converged,
        "final": {
            "loss": final.global_loss,
            "accuracy": final.accuracy,
            "precision": final.precision,
            "recall": final.recall,
            "f1": final.f1,
            "fpr": final.fpr,
            "fnr": final.fnr,
        },
        "auc": auc,
        "latency": {
            "mean_sync_s": float(np.mean(syncs)),
            "max_sync_s": float(np.max(syncs)),
        },
    }


def cmd_run(scenario: Scenario, out_dir: str | Path) -> int:
    """Train one method and persist rounds.csv, summary.json, config, model."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports, state, converged = _train_with_state(scenario)
    if not reports:
        raise RuntimeError("scenario ran zero rounds; nothing to report")
    header, rows = _rounds_rows(scenario, reports)
    _write_csv(out / "rounds.csv", header, rows)
    summary = _final_summary(scenario, reports, state, converged)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (out / "config.resolved.json").write_text(
        json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True) + "\n"
    )
    model = state.global_model
    (out / "final_model.json").write_text(
        json.dumps(
            {
                "weights": model.weights.tolist(),
                "biases": model.biases.tolist(),
            }
        )
        + "\n"
    )
    return 0


def cmd_compare(scenario: Scenario, methods: list[str], out_dir: str | Path) -> int:
    """Run several methods on the same data and emit side-by-side artifacts."""
    if len(methods) < 2:
        raise ConfigError(f"compare needs at least two methods, got {methods}")
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = [
        "method",
        "round",
        "global_loss",
        "accuracy",
        "precision",
        "recall",
        "f1",
        "fpr",
        "fnr",
        "sync_latency_s",
    ]
    rows = []
    finals: dict[str, dict] = {}
    mean_sync: dict[str, float] = {}
    for method in methods:
        run_scenario = replace(scenario, method=method)
        reports, state, converged = _train_with_state(run_scenario)
        for r in reports:
            rows.append(
                [
                    method,
                    r.round_index,
                    r.global_loss,
                    r.accuracy,
                    r.precision,
                    r.recall,
                    r.f1,
                    r.fpr,
                    r.fnr,
                    r.sync_latency_s,
                ]
            )
        finals[method] = _final_summary(run_scenario, reports, state, converged)
        mean_sync[method] = finals[method]["latency"]["mean_sync_s"]
    _write_csv(out / "compare.csv", header, rows)

    reference = "fedavg" if "fedavg" in methods else methods[0]
    sweep = straggler_metrics(
        scenario,
        fractions=(0.0, 0.1, 0.2, 0.3),
        client_counts=(scenario.num_clients,),
        methods=tuple(methods),
    )
    comparison = {
        "methods": list(methods),
        "reference": reference,
        "final_accuracy": {m: finals[m]["final"]["accuracy"] for m in methods},
        "final_accuracy_gap": {
            m: finals[m]["final"]["accuracy"] - finals[reference]["final"]["accuracy"]
            for m in methods
        },
        "mean_sync_latency_s": mean_sync,
        "latency_reduction_pct": {
            m: 100.0 * (1.0 - mean_sync[m] / mean_sync[reference]) for m in methods
        },
        "sme_per_straggler_fraction": {
            m: {
                str(frac): sweep[m][scenario.num_clients][frac]["sme"]
                for frac in (0.0, 0.1, 0.2, 0.3)
            }
            for m in methods
        },
    }
    (out / "compare.json").write_text(
        json.dumps(comparison, indent=2, sort_keys=True) + "\n"
    )
    return 0


def cmd_report(run_dir: str | Path, out_dir: str | Path | None = None) -> int:
    """Turn a finished run directory into ROC, confusion, and text summaries."""
    run_path = Path(run_dir)
    rounds_csv = run_path / "rounds.csv"
    if not rounds_csv.exists():
        raise ConfigError(f"missing run artifacts: {rounds_csv} not found")
    config_path = run_path / "config.resolved.json"
    model_path = run_path / "final_model.json"
    for p in (config_path, model_path):
        if not p.exists():
            raise ConfigError(f"missing run artifacts: {p} not found")
    out = Path(out_dir) if out_dir is not None else run_path
    out.mkdir(parents=True, exist_ok=True)

    scenario = resolve_scenario(None, json.loads(config_path.read_text()))
    raw_model = json.loads(model_path.read_text())
    model = ModelParams(np.array(raw_model["weights"]), np.array(raw_model["biases"]))
    min_samples = max(2 * scenario.train_cfg.batch_size, 64)
    _, holdout = materialize_clients(scenario.dataset, scenario.num_clients, min_samples)
    if holdout is None:
        raise ConfigError("run has no holdout split; cannot build a report")
    attack = scenario.resolved_attack_classes(scenario.dataset.num_classes)

    points = roc_sweep(model, holdout, attack, np.linspace(0.0, 1.0, 101))
    _write_csv(
        out / "roc_sweep.csv",
        ["threshold", "fpr", "tpr"],
        [[t, f, p] for t, f, p in points],
    )
    auc = trapezoid_auc(points)

    decisions = argmax_decisions(model, holdout.features)
    counts = confusion(decisions, holdout.labels, attack, scenario.dataset.num_classes)
    num_classes = scenario.dataset.num_classes
    _write_csv(
        out / "confusion.csv",
        ["truth"] + [f"pred_{c}" for c in range(num_classes)],
        [[c] + list(counts.per_class[c]) for c in range(num_classes)],
    )

    report = classification_metrics(counts)
    lines = [
        f"run:       {run_path}",
        f"method:    {scenario.method}",
        f"seed:      {scenario.seed}",
        f"holdout:   {len(holdout)} samples",
        "",
        f"accuracy:  {report.accuracy:.6f}",
        f"precision: {report.precision:.6f}",
        f"recall:    {report.recall:.6f}",
        f"f1:        {report.f1:.6f}",
        f"fpr:       {report.fpr:.6f}",
        f"fnr:       {report.fnr:.6f}",
        f"auc:       {auc:.6f}",
    ]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(parser: argparse.ArgumentParser, repeat_method: bool) -> None:
    parser.add_argument("--preset", choices=sorted(_preset_names()), default=None)
    parser.add_argument("--config", default=None, help="strict JSON config file")
    if repeat_method:
        parser.add_argument(
            "--method",
            action="append",
            choices=list(METHODS),
            default=None,
            help="repeatable; defaults to all three methods",
        )
    else:
        parser.add_argument("--method", choices=list(METHODS), default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--rounds", type=int, default=None)
    parser.add_argument("--straggler-fraction", type=float, default=None)
    parser.add_argument("--straggler-slowdown", type=float, default=None)


def _preset_names() -> list[str]:
    from .simulator import _PRESETS

    return list(_PRESETS)


def _load_config_file(path: str | None) -> dict | None:
    if path is None:
        return None
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} not found")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {p} must contain a JSON object")
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cfhfc",
        description="federated intrusion detection simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train one method and write artifacts")
    _add_common(run_p, repeat_method=False)
    run_p.add_argument("--out", default="out")

    cmp_p = sub.add_parser("compare", help="run several methods side by side")
    _add_common(cmp_p, repeat_method=True)
    cmp_p.add_argument("--out", default="out")

    rep_p = sub.add_parser("report", help="derive ROC/confusion from a run directory")
    rep_p.add_argument("run_dir")
    rep_p.add_argument("--out", default=None)

    sub.add_parser("defaults", help="print the default configuration as JSON")

    args = parser.parse_args(argv)
    try:
        if args.command == "defaults":
            print(json.dumps(scenario_to_dict(Scenario()), indent=2, sort_keys=True))
            return 0
        if args.command == "report":
            return cmd_report(args.run_dir, args.out)
        config = _load_config_file(args.config)
        if args.command == "run":
            scenario = resolve_scenario(
                args.preset,
                config,
                method=args.method,
                seed=args.seed,
                rounds=args.rounds,
                straggler_fraction=args.straggler_fraction,
                straggler_slowdown=args.straggler_slowdown,
            )
            return cmd_run(scenario, args.out)
        if args.command == "compare":
            methods = args.method if args.method else list(METHODS)
            scenario = resolve_scenario(
                args.preset,
                config,
                seed=args.seed,
                rounds=args.rounds,
                straggler_fraction=args.straggler_fraction,
                straggler_slowdown=args.straggler_slowdown,
            )
            return cmd_compare(scenario, methods, args.out)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
