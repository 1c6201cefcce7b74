"""Command-line benchmark runner.

Four subcommands: ``run`` (one method on one benchmark over a seed
list), ``equivalence`` (the estimator consistency study), ``composite``
(structure-aware vs. plain loops on the transport objective), and
``ablate`` (a grid over the threshold quantile or the utility
exponent).  Every run is fully seeded; rerunning a command with the
same arguments rewrites byte-identical files.

Exit codes: 0 on success, 1 when a run fails at runtime (partial
traces are still persisted), 2 for usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .benchmarks import get_benchmark, list_benchmarks
from .classifiers import GbtConfig, MlpConfig
from .composite import make_env_objective
from .core import ThresholdPolicy
from .driver import (
    BACKENDS,
    METHODS,
    BoConfig,
    CompositeBoConfig,
    EquivalenceConfig,
    ObjectiveEvaluationError,
    RegretTrace,
    run_bo,
    run_composite_bo,
    run_equivalence_experiment,
    summarize_traces,
    trace_to_csv,
    write_equivalence_csv,
    write_summary_csv,
)

__all__ = ["main", "parse_seeds", "parse_floats"]

_RUN_DEFAULTS: dict = {
    "benchmark": "synthetic1d",
    "method": "lfbo-ei",
    "backend": "mlp",
    "seeds": (0, 1, 2, 3, 4),
    "gamma": 0.33,
    "lambda": None,
    "epsilon": 0.0,
    "budget": 50,
    "n_init": 10,
    "n_candidates": 512,
    "outdir": "results",
    "mlp": {},
    "gbt": {},
}


def parse_seeds(text: str) -> tuple[int, ...]:
    """Parse ``"0..4"`` (inclusive) or ``"0,1,3"`` into a seed tuple."""
    text = text.strip()
    try:
        if ".." in text:
            lo_s, hi_s = text.split("..", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise ValueError("range is empty")
            return tuple(range(lo, hi + 1))
        seeds = tuple(int(t) for t in text.split(",") if t.strip())
        if not seeds:
            raise ValueError("no seeds given")
        return seeds
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}: {exc}") from exc


def parse_floats(text: str) -> tuple[float, ...]:
    """Parse a comma-separated float list; empty lists are rejected."""
    try:
        values = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad value list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("value list is empty")
    return values


def parse_ints(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad value list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("value list is empty")
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lfbo-bench", description="Seeded benchmark runner."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one method on one benchmark")
    run.add_argument("--benchmark", choices=list_benchmarks(), default=None)
    run.add_argument("--method", choices=METHODS, default=None)
    run.add_argument("--backend", choices=BACKENDS, default=None)
    run.add_argument("--seeds", type=parse_seeds, default=None)
    run.add_argument("--gamma", type=float, default=None)
    run.add_argument(
        "--lambda", dest="power_exponent", type=float, default=None,
        help="utility exponent; required by (and only by) lfbo-power",
    )
    run.add_argument("--epsilon", type=float, default=None)
    run.add_argument("--budget", type=int, default=None)
    run.add_argument("--n-init", type=int, default=None)
    run.add_argument("--n-candidates", type=int, default=None)
    run.add_argument("--outdir", default=None)
    run.add_argument("--config", default=None, help="JSON file; flags override it")
    run.add_argument(
        "--print-config", action="store_true",
        help="print the resolved configuration as JSON and exit",
    )
    run.set_defaults(func=_cmd_run)

    eq = sub.add_parser("equivalence", help="estimator consistency study")
    eq.add_argument("--seeds", type=parse_seeds, default=(0, 1, 2, 3, 4))
    eq.add_argument("--n-values", type=parse_ints, default=(100, 1000, 10000))
    eq.add_argument("--gamma", type=float, default=0.33)
    eq.add_argument("--epochs", type=int, default=1000)
    eq.add_argument("--outdir", default="results")
    eq.set_defaults(func=_cmd_equivalence)

    comp = sub.add_parser("composite", help="structure-aware vs. plain loops")
    comp.add_argument("--seeds", type=parse_seeds, default=tuple(range(10)))
    comp.add_argument("--budget", type=int, default=50)
    comp.add_argument("--n-init", type=int, default=10)
    comp.add_argument("--epochs", type=int, default=800)
    comp.add_argument("--with-gp", action="store_true", help="also run gp-ei")
    comp.add_argument("--outdir", default="results")
    comp.set_defaults(func=_cmd_composite)

    ab = sub.add_parser("ablate", help="grid over gamma or the utility exponent")
    ab.add_argument("--param", choices=("gamma", "lambda"), required=True)
    ab.add_argument("--values", type=parse_floats, required=True)
    ab.add_argument("--method", choices=METHODS, default="lfbo-ei")
    ab.add_argument("--backend", choices=BACKENDS, default="gbt")
    ab.add_argument("--benchmark", choices=list_benchmarks(), default="synthetic1d")
    ab.add_argument("--seeds", type=parse_seeds, default=tuple(range(20)))
    ab.add_argument("--budget", type=int, default=50)
    ab.add_argument("--n-init", type=int, default=10)
    ab.add_argument("--outdir", default="results")
    ab.set_defaults(func=_cmd_ablate)

    return parser


def _benchmark_objective(bench):
    def objective(x, rng):
        return bench.evaluate(x, rng)

    return objective


def _mlp_from_dict(data: dict, parser) -> MlpConfig:
    try:
        if "hidden_units" in data:
            data = {**data, "hidden_units": tuple(data["hidden_units"])}
        return dataclasses.replace(MlpConfig(), **data)
    except (TypeError, ValueError) as exc:
        parser.error(f"bad mlp config: {exc}")


def _gbt_from_dict(data: dict, parser) -> GbtConfig:
    try:
        return dataclasses.replace(GbtConfig(), **data)
    except (TypeError, ValueError) as exc:
        parser.error(f"bad gbt config: {exc}")


def _resolve_run_config(args, parser) -> dict:
    cfg = dict(_RUN_DEFAULTS)
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config file: {exc}")
        if not isinstance(data, dict):
            parser.error("config file must hold a JSON object")
        unknown = sorted(set(data) - set(_RUN_DEFAULTS))
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(data)
    overrides = {
        "benchmark": args.benchmark,
        "method": args.method,
        "backend": args.backend,
        "seeds": args.seeds,
        "gamma": args.gamma,
        "lambda": args.power_exponent,
        "epsilon": args.epsilon,
        "budget": args.budget,
        "n_init": args.n_init,
        "n_candidates": args.n_candidates,
        "outdir": args.outdir,
    }
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    if isinstance(cfg["seeds"], str):
        try:
            cfg["seeds"] = parse_seeds(cfg["seeds"])
        except argparse.ArgumentTypeError as exc:
            parser.error(str(exc))
    cfg["seeds"] = tuple(int(s) for s in cfg["seeds"])
    if cfg["method"] not in METHODS:
        parser.error(f"unknown method {cfg['method']!r}")
    if cfg["backend"] not in BACKENDS:
        parser.error(f"unknown backend {cfg['backend']!r}")
    if cfg["benchmark"] not in list_benchmarks():
        parser.error(f"unknown benchmark {cfg['benchmark']!r}")
    if cfg["method"] == "lfbo-power" and cfg["lambda"] is None:
        parser.error("--lambda is required for lfbo-power")
    if cfg["method"] != "lfbo-power" and cfg["lambda"] is not None:
        parser.error("--lambda only applies to lfbo-power")
    return cfg


def _write_partial(
    method: str, seed: int, optimum: float, exc: ObjectiveEvaluationError, path: Path
) -> None:
    trace = RegretTrace(method, seed, optimum, exc.partial)
    trace_to_csv(trace, str(path))
    print(f"error: {exc} (partial trace at {path})", file=sys.stderr)


def _cmd_run(args, parser) -> int:
    cfg = _resolve_run_config(args, parser)
    if args.print_config:
        printable = dict(cfg)
        printable["seeds"] = list(cfg["seeds"])
        printable["mlp"] = dataclasses.asdict(_mlp_from_dict(cfg["mlp"], parser))
        printable["mlp"]["hidden_units"] = list(printable["mlp"]["hidden_units"])
        printable["gbt"] = dataclasses.asdict(_gbt_from_dict(cfg["gbt"], parser))
        print(json.dumps(printable, indent=2, sort_keys=True))
        return 0
    bench = get_benchmark(cfg["benchmark"])
    outbase = Path(cfg["outdir"]) / cfg["benchmark"] / cfg["method"]
    outbase.mkdir(parents=True, exist_ok=True)
    records = []
    for seed in cfg["seeds"]:
        bo = BoConfig(
            space=bench.space,
            objective=_benchmark_objective(bench),
            optimum_value=bench.optimum_value,
            method=cfg["method"],
            backend=cfg["backend"],
            power_exponent=cfg["lambda"],
            policy=ThresholdPolicy(gamma=cfg["gamma"]),
            n_init=cfg["n_init"],
            budget=cfg["budget"],
            n_candidates=cfg["n_candidates"],
            epsilon=cfg["epsilon"],
            seed=seed,
            mlp=_mlp_from_dict(cfg["mlp"], parser),
            gbt=_gbt_from_dict(cfg["gbt"], parser),
        )
        try:
            trace = run_bo(bo)
        except ObjectiveEvaluationError as exc:
            _write_partial(cfg["method"], seed, bench.optimum_value, exc, outbase / f"{seed}.csv")
            return 1
        trace_to_csv(trace, str(outbase / f"{seed}.csv"))
        records.append(trace.records)
    write_summary_csv(summarize_traces(records), str(outbase / "summary.csv"))
    print(f"wrote {len(cfg['seeds'])} trace(s) and summary.csv to {outbase}")
    return 0


def _cmd_equivalence(args, parser) -> int:
    config = EquivalenceConfig(
        n_values=tuple(args.n_values),
        seeds=tuple(args.seeds),
        gamma=args.gamma,
        mlp=dataclasses.replace(
            EquivalenceConfig().mlp, epochs=args.epochs
        ),
    )
    report = run_equivalence_experiment(config)
    outbase = Path(args.outdir) / "equivalence"
    outbase.mkdir(parents=True, exist_ok=True)
    path = outbase / "equivalence.csv"
    write_equivalence_csv(report, str(path))
    for n in config.n_values:
        line = ", ".join(
            f"{m}_vs_{t}={report.mean_error(m, t, n):.4f}"
            for m in config.methods
            for t in ("pi", "ei")
        )
        print(f"n={n}: {line}")
    print(f"wrote {path}")
    return 0


def _final_log10_regrets(records_per_seed) -> np.ndarray:
    finals = np.asarray([records[-1].regret for records in records_per_seed])
    return np.log10(np.maximum(finals, 1e-300))


def _cmd_composite(args, parser) -> int:
    bench = get_benchmark("env")
    outroot = Path(args.outdir) / "composite"
    methods_records: dict[str, list] = {}

    runs: list[tuple[str, object]] = [("composite", None), ("lfbo-ei", None)]
    if args.with_gp:
        runs.append(("gp-ei", None))
    for method, _ in runs:
        outbase = outroot / method
        outbase.mkdir(parents=True, exist_ok=True)
        records = []
        for seed in args.seeds:
            try:
                if method == "composite":
                    trace = run_composite_bo(
                        CompositeBoConfig(
                            space=bench.space,
                            objective=make_env_objective(),
                            optimum_value=bench.optimum_value,
                            epochs=args.epochs,
                            n_init=args.n_init,
                            budget=args.budget,
                            seed=seed,
                        )
                    )
                else:
                    trace = run_bo(
                        BoConfig(
                            space=bench.space,
                            objective=_benchmark_objective(bench),
                            optimum_value=bench.optimum_value,
                            method=method,
                            backend="mlp",
                            n_init=args.n_init,
                            budget=args.budget,
                            seed=seed,
                        )
                    )
            except ObjectiveEvaluationError as exc:
                _write_partial(method, seed, bench.optimum_value, exc, outbase / f"{seed}.csv")
                return 1
            trace_to_csv(trace, str(outbase / f"{seed}.csv"))
            records.append(trace.records)
        write_summary_csv(summarize_traces(records), str(outbase / "summary.csv"))
        methods_records[method] = records
    for method, records in methods_records.items():
        med = float(np.median(_final_log10_regrets(records)))
        print(f"{method}: median final log10 regret {med:.3f}")
    print(f"wrote results under {outroot}")
    return 0


def _cmd_ablate(args, parser) -> int:
    if args.param == "lambda" and args.method not in ("lfbo-ei", "lfbo-power"):
        parser.error("--param lambda requires the lfbo-power method")
    bench = get_benchmark(args.benchmark)
    outroot = Path(args.outdir) / f"ablate-{args.param}"
    summary_rows: list[tuple[str, float, float, float]] = []
    for value in args.values:
        if args.param == "gamma":
            method = args.method
            exponent = None
            gamma = value
            if not 0.0 < gamma < 1.0:
                parser.error(f"gamma value {gamma} outside (0, 1)")
        else:
            method = "lfbo-power"
            exponent = value
            gamma = 0.33
        cell = f"{args.param}-{value:g}"
        outbase = outroot / cell
        outbase.mkdir(parents=True, exist_ok=True)
        records = []
        for seed in args.seeds:
            bo = BoConfig(
                space=bench.space,
                objective=_benchmark_objective(bench),
                optimum_value=bench.optimum_value,
                method=method,
                backend=args.backend,
                power_exponent=exponent,
                policy=ThresholdPolicy(gamma=gamma),
                n_init=args.n_init,
                budget=args.budget,
                seed=seed,
            )
            try:
                trace = run_bo(bo)
            except ObjectiveEvaluationError as exc:
                _write_partial(method, seed, bench.optimum_value, exc, outbase / f"{seed}.csv")
                return 1
            trace_to_csv(trace, str(outbase / f"{seed}.csv"))
            records.append(trace.records)
        write_summary_csv(summarize_traces(records), str(outbase / "summary.csv"))
        finals = np.asarray([r[-1].regret for r in records])
        summary_rows.append(
            (args.param, value, float(np.mean(finals)), float(np.median(finals)))
        )
    import csv as _csv

    outroot.mkdir(parents=True, exist_ok=True)
    with open(outroot / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["param", "value", "mean_final_regret", "median_final_regret"])
        for param, value, mean_r, median_r in summary_rows:
            writer.writerow(
                [param, repr(float(value)), repr(float(mean_r)), repr(float(median_r))]
            )
    for param, value, mean_r, median_r in summary_rows:
        print(f"{param}={value:g}: mean final regret {mean_r:.4f}, median {median_r:.4f}")
    print(f"wrote results under {outroot}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except ObjectiveEvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not crashes
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
