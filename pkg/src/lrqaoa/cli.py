"""Command-line interface.

Verbs: ``generate`` (datasets), ``run`` (experiment), ``fit`` (re-fit scaling
exponents from stored records), ``export`` (figure data from stored records).
Flags mirror ExperimentConfig fields; when --config is given, its values
override the defaults and explicit flags override the config file.

Exit codes: 0 success, 2 config error, 3 data error, 4 partial instance
failures (details in the manifest).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .classical import RuntimeRecord, fit_power_law, fit_scaling_geomean, fit_scaling_robust
from .datasets import (
    export_portfolio_csv,
    generate_blobs,
    generate_moons,
    synthetic_feature_table,
    synthetic_portfolio_universe,
)
from .errors import ConfigError, DataError
from .pipeline import ExperimentConfig, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PARTIAL = 4


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--family", choices=["portfolio", "feature", "clustering"])
    parser.add_argument("--n-min", type=int, dest="n_min")
    parser.add_argument("--n-max", type=int, dest="n_max")
    parser.add_argument("--n-step", type=int, dest="n_step")
    parser.add_argument("--instances-per-size", type=int, dest="instances_per_size")
    parser.add_argument(
        "--sub-sizes", dest="sub_sizes", help="comma-separated, e.g. 4,6,8"
    )
    parser.add_argument(
        "--sub-instances-per-size", type=int, dest="sub_instances_per_size"
    )
    parser.add_argument("--grid-resolution", type=int, dest="grid_resolution")
    parser.add_argument("--p0", type=int)
    parser.add_argument("--depth-coefficient", type=float, dest="depth_coefficient")
    parser.add_argument("--seed", type=int, dest="master_seed")
    parser.add_argument("--portfolio-csv", dest="portfolio_csv")
    parser.add_argument("--feature-csv", dest="feature_csv")
    parser.add_argument("--out", dest="output_dir")
    parser.add_argument("--repetitions", type=int)
    parser.add_argument("--sa-budget", type=int, dest="sa_budget")
    parser.add_argument(
        "--no-classical", action="store_true", help="skip classical timing records"
    )
    parser.add_argument(
        "--paper-scale", action="store_true", help="use the full-size profile"
    )


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} not found")
        try:
            values.update(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from exc
    flag_fields = [
        "family", "n_min", "n_max", "n_step", "instances_per_size",
        "sub_instances_per_size", "grid_resolution", "p0", "depth_coefficient",
        "master_seed", "portfolio_csv", "feature_csv", "output_dir",
        "repetitions", "sa_budget",
    ]
    for name in flag_fields:
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    if getattr(args, "sub_sizes", None):
        values["sub_sizes"] = tuple(int(s) for s in args.sub_sizes.split(","))
    if getattr(args, "no_classical", False):
        values["measure_classical"] = False
    if getattr(args, "paper_scale", False):
        return ExperimentConfig.paper_scale(**values)
    return ExperimentConfig.from_dict(values)


def _cmd_generate(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "portfolio":
        data = synthetic_portfolio_universe(args.n, args.seed)
        export_portfolio_csv(data, out)
    elif args.kind == "features":
        features, target = synthetic_feature_table(args.n, master_seed=args.seed)
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"f{i}" for i in range(features.shape[1])] + ["target"])
            for row, t in zip(features, target):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(t))])
    elif args.kind in ("moons", "blobs"):
        if args.kind == "moons":
            data = generate_moons(args.n, noise=args.noise, rng_seed=args.seed)
        else:
            data = generate_blobs(
                args.n, centers=[[0.0, 0.0], [3.0, 3.0]], spread=args.noise,
                rng_seed=args.seed,
            )
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y"])
            for x, y in data.points:
                writer.writerow([repr(float(x)), repr(float(y))])
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    store = run_experiment(config)
    manifest = Path(config.output_dir) / "manifest.json"
    print(f"completed {len(store.instance_results)} instances; manifest: {manifest}")
    if store.failures:
        print(f"{len(store.failures)} instance(s) failed; see manifest", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _load_records(path: Path) -> list[dict]:
    if not path.exists():
        raise DataError(f"records file {path} not found")
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _cmd_fit(args: argparse.Namespace) -> int:
    """Re-fit scaling exponents from a stored run directory."""
    store_dir = Path(args.store)
    rows = _load_records(store_dir / "records.csv")
    quantum = [
        RuntimeRecord(
            n=int(r["n"]),
            instance_label=r["instance_label"],
            runtime=float(r["total_depth"]),
            solved_optimally=r["is_outlier"] == "0",
            repetition=0,
        )
        for r in rows
    ]
    report = {}
    try:
        fit = fit_scaling_geomean(quantum)
        report["quantum_geomean"] = {
            "alpha": fit.alpha, "intercept": fit.intercept,
            "points_used": fit.points_used, "n_excluded": fit.n_excluded,
        }
    except ValueError as exc:
        report["quantum_geomean"] = {"error": str(exc)}
    for path in sorted(store_dir.glob("classical_*.csv")):
        method = path.stem.removeprefix("classical_")
        recs = [
            RuntimeRecord(
                n=int(r["n"]),
                instance_label=r["instance_label"],
                runtime=float(r["runtime_seconds"]),
                solved_optimally=r["solved_optimally"] == "1",
                repetition=int(r["repetition"]),
            )
            for r in _load_records(path)
        ]
        try:
            fit = fit_scaling_robust(recs)
            report[f"classical_{method}"] = {"alpha": fit.alpha, "intercept": fit.intercept}
        except ValueError as exc:
            report[f"classical_{method}"] = {"error": str(exc)}
    by_n: dict[int, list[float]] = {}
    for r in rows:
        by_n.setdefault(int(r["n"]), []).append(float(r["p_star"]))
    try:
        pl = fit_power_law(
            [(n, float(np.exp(np.mean(np.log(v))))) for n, v in sorted(by_n.items())]
        )
        report["depth_power_law"] = {"a": pl.a, "b": pl.b, "residual": pl.residual}
    except ValueError as exc:
        report["depth_power_law"] = {"error": str(exc)}
    print(json.dumps(report, indent=1))
    return EXIT_OK


def _cmd_export(args: argparse.Namespace) -> int:
    """Regenerate figure CSVs from the persisted records of a run."""
    store_dir = Path(args.store)
    rows = _load_records(store_dir / "records.csv")
    out = Path(args.out) if args.out else store_dir

    def write(name: str, header: list[str], data_rows: list[list]) -> None:
        with open(out / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(data_rows)

    write(
        "fig_runtime_quantum.csv",
        ["n", "instance_label", "total_depth"],
        [[r["n"], r["instance_label"], r["total_depth"]] for r in rows],
    )
    write(
        "fig_params.csv",
        ["n", "instance_label", "delta_gamma", "delta_beta", "p_star"],
        [
            [r["n"], r["instance_label"], r["delta_gamma"], r["delta_beta"], r["p_star"]]
            for r in rows
        ],
    )
    write(
        "fig_p_opt.csv",
        ["n", "instance_label", "p_opt_realized"],
        [[r["n"], r["instance_label"], r["p_opt_realized"]] for r in rows],
    )
    by_n: dict[int, list[float]] = {}
    for r in rows:
        v = float(r["p_opt_realized"])
        if v > 0:
            by_n.setdefault(int(r["n"]), []).append(v)
    write(
        "fig_p_opt_geomean.csv",
        ["n", "geomean_p_opt"],
        [
            [n, repr(float(np.exp(np.mean(np.log(v)))))]
            for n, v in sorted(by_n.items())
        ],
    )
    print(f"figure data written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrqaoa",
        description="Linear-ramp QAOA parameter-extrapolation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset CSV")
    gen.add_argument("--kind", required=True,
                     choices=["portfolio", "features", "moons", "blobs"])
    gen.add_argument("--out", required=True)
    gen.add_argument("--n", type=int, default=30)
    gen.add_argument("--noise", type=float, default=0.1)
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(func=_cmd_generate)

    run = sub.add_parser("run", help="run an experiment sweep")
    _add_run_flags(run)
    run.set_defaults(func=_cmd_run)

    fit = sub.add_parser("fit", help="re-fit scaling exponents from stored records")
    fit.add_argument("--store", required=True, help="run output directory")
    fit.set_defaults(func=_cmd_fit)

    exp = sub.add_parser("export", help="regenerate figure CSVs from stored records")
    exp.add_argument("--store", required=True, help="run output directory")
    exp.add_argument("--out", help="target directory (default: store)")
    exp.set_defaults(func=_cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
