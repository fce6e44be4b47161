"""Command-line entry point: ``repchain <subcommand> [options]``.

Every subcommand reads the same configuration (file plus ``--set`` overrides),
prints a short table and writes CSV (or JSON with ``--json``). Exit codes:
0 success, 1 runtime failure or failed validation, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments
from .config import ConfigError, ExperimentConfig, load_config
from .experiments import SweepResult
from .validation import run_validation

DEFAULT_OUTPUTS = {
    "one-shot": "one_shot",
    "stream": "stream",
    "sweep-lambda": "lambda_sweep",
    "optimize-distance": "distance",
    "heatmap": "heatmap",
}

RUNNERS = {
    "one-shot": experiments.run_one_shot,
    "stream": experiments.run_stream,
    "sweep-lambda": experiments.run_lambda_sweep,
    "optimize-distance": experiments.run_distance_optimization,
    "heatmap": experiments.run_hardware_heatmap,
}

# flag dest -> config key
FLAG_KEYS = {
    "trials": "sim.trials",
    "requests": "sim.requests",
    "seed": "sim.seed",
    "engine": "engine",
    "output": "output.path",
    "workers": "run.workers",
    "lam": "workload.lambda",
    "n_links": "chain.n_links",
    "policy": "model.policy",
}

MAX_TABLE_ROWS = 20


def _key_value(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (relative paths also searched in $REPCHAIN_CONFIG_DIR)")
    common.add_argument("--set", dest="overrides", action="append", type=_key_value, default=[],
                        metavar="KEY=VALUE", help="override one config key; repeatable")
    common.add_argument("--trials", help="one-shot Monte Carlo trials (accepts 1e6)")
    common.add_argument("--requests", help="measured requests per stream run")
    common.add_argument("--seed")
    common.add_argument("--engine", choices=["analytic", "simulate", "both"])
    common.add_argument("--output", help="output file path")
    common.add_argument("--json", action="store_true", help="write JSON instead of CSV")
    common.add_argument("--workers", help="worker processes for grid points")
    common.add_argument("--lambda", dest="lam", help="request rate(s), list or start:stop:step")
    common.add_argument("--n-links", dest="n_links", help="chain size(s)")
    common.add_argument("--policy", help="oqf, yqf or both as 'oqf,yqf'")

    parser = argparse.ArgumentParser(prog="repchain", description="Repeater-chain fidelity and key-rate tools.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("one-shot", parents=[common], help="single request through an idle chain")
    sub.add_parser("stream", parents=[common], help="Poisson request stream simulation")
    sub.add_parser("sweep-lambda", parents=[common], help="fidelity and key rate against request rate")
    sub.add_parser("optimize-distance", parents=[common], help="best repeater count against distance")
    sub.add_parser("heatmap", parents=[common], help="best key rate over coherence time and gate quality")
    v = sub.add_parser("validate", parents=[common], help="analytic versus simulation cross-checks")
    v.add_argument("--quick", action="store_true", help="fewer one-shot trials")
    return parser


def config_from_args(args) -> ExperimentConfig:
    overrides = dict(args.overrides)
    for dest, key in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = str(value)
    if args.json:
        overrides["output.json"] = "true"
    return load_config(args.config, overrides)


def format_table(result: SweepResult, limit: int = MAX_TABLE_ROWS) -> str:
    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)

    rows = [[cell(v) for v in r] for r in result.rows[:limit]]
    widths = [max([len(c)] + [len(r[i]) for r in rows]) for i, c in enumerate(result.columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(result.columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in rows]
    if len(result.rows) > limit:
        lines.append(f"... {len(result.rows) - limit} more rows")
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _run_sweep(command: str, cfg: ExperimentConfig) -> int:
    result = RUNNERS[command](cfg)
    ext = ".json" if cfg.json else ".csv"
    path = Path(cfg.output) if cfg.output else Path(DEFAULT_OUTPUTS[command] + ext)
    _write(path, result.to_json() if cfg.json else result.to_csv())
    sys.stdout.write(format_table(result))
    sys.stdout.write(f"wrote {len(result.rows)} rows to {path}\n")
    return 0


def _run_validate(cfg: ExperimentConfig, quick: bool) -> int:
    report = run_validation(quick=quick, seed=cfg.seed)
    text = report.to_text()
    sys.stdout.write(text)
    if cfg.output:
        _write(Path(cfg.output), report.to_json() if cfg.json else text)
    return 0 if report.ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"repchain: config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "validate":
            return _run_validate(cfg, args.quick)
        return _run_sweep(args.command, cfg)
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit 1
        print(f"repchain: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
