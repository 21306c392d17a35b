"""Experiment orchestration, persistence, and figure-data export.

A run sweeps problem sizes, builds one QUBO per (size, instance) pair, drives
the depth optimization (which internally runs sub-sampling, grid search,
skew-Gaussian fitting and extrapolation), then collects classical baseline
timings and all scaling fits.  Outputs are CSV files plus a JSON manifest;
plotting is left to external tools.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import time
import warnings
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import seeding
from .classical import (
    PowerLawFit,
    RuntimeRecord,
    ScalingFit,
    fit_power_law,
    fit_scaling_geomean,
    fit_scaling_robust,
    measure_classical_runtime,
)
from .datasets import (
    generate_moons,
    ingest_feature_csv,
    ingest_portfolio_csv,
    synthetic_feature_table,
    synthetic_portfolio_universe,
    feature_data_from_table,
)
from .errors import ConfigError
from .qubo import (
    FeatureData,
    ProblemFamily,
    QuboInstance,
    build_clustering_qubo,
    build_feature_qubo,
    build_portfolio_qubo,
)
from .runtime import (
    ChainCache,
    ChainConfig,
    DepthModel,
    DepthOptimizationResult,
    optimize_depth,
)

FAMILIES = {
    "portfolio": ProblemFamily.PORTFOLIO,
    "feature": ProblemFamily.FEATURE_SELECTION,
    "clustering": ProblemFamily.CLUSTERING,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment frame; defaults follow the desk-scale profile."""

    family: str = "portfolio"
    n_min: int = 12
    n_max: int = 16
    n_step: int = 2
    instances_per_size: int = 5
    sub_sizes: tuple[int, ...] = (4, 6, 8)
    sub_instances_per_size: int = 10
    grid_resolution: int = 11
    log_gamma_bounds: tuple[float, float] = (-1.0, 1.0)
    log_beta_bounds: tuple[float, float] = (-1.5, 0.5)
    p0: int = 6
    depth_coefficient: Optional[float] = None
    master_seed: int = 0
    portfolio_csv: Optional[str] = None
    feature_csv: Optional[str] = None
    output_dir: str = "lrqaoa_out"
    deterministic: bool = True
    measure_classical: bool = True
    repetitions: int = 5
    sa_budget: int = 200
    q_risk: float = 1.0
    phi: float = 0.9
    penalty: Optional[float] = None
    cluster_noise: float = 0.1
    universe_assets: int = 30
    universe_features: int = 48

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if not (2 <= self.n_min <= self.n_max) or self.n_step < 1:
            raise ConfigError("size range must satisfy 2 <= n_min <= n_max, step >= 1")
        if self.instances_per_size < 1 or self.sub_instances_per_size < 1:
            raise ConfigError("instance counts must be >= 1")
        if min(self.sub_sizes) < 2 or max(self.sub_sizes) >= self.n_min:
            raise ConfigError("sub_sizes must lie in [2, n_min)")

    @classmethod
    def paper_scale(cls, **overrides) -> "ExperimentConfig":
        """The paper's frame: N up to 28, sub-sizes to 10, 10 instances each."""
        base = dict(
            n_min=12,
            n_max=28,
            n_step=1,
            instances_per_size=10,
            sub_sizes=(4, 6, 8, 10),
        )
        base.update(overrides)
        return cls(**base)

    def sizes(self) -> list[int]:
        return list(range(self.n_min, self.n_max + 1, self.n_step))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sub_sizes"] = list(self.sub_sizes)
        d["log_gamma_bounds"] = list(self.log_gamma_bounds)
        d["log_beta_bounds"] = list(self.log_beta_bounds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        for key in ("sub_sizes", "log_gamma_bounds", "log_beta_bounds"):
            if key in d:
                d[key] = tuple(d[key])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def config_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def chain_config(self) -> ChainConfig:
        return ChainConfig(
            sub_sizes=self.sub_sizes,
            sub_instances_per_size=self.sub_instances_per_size,
            grid_resolution=self.grid_resolution,
            log_gamma_bounds=self.log_gamma_bounds,
            log_beta_bounds=self.log_beta_bounds,
            master_seed=self.master_seed,
            depth_model=DepthModel(self.depth_coefficient),
        )


@dataclass
class InstanceResult:
    n: int
    label: str
    depth: DepthOptimizationResult


@dataclass
class ResultsStore:
    """Everything a run produced, traceable to the config hash and seeds."""

    config: ExperimentConfig
    instance_results: list[InstanceResult] = field(default_factory=list)
    classical_records: dict[str, list[RuntimeRecord]] = field(default_factory=dict)
    quantum_fit: Optional[ScalingFit] = None
    classical_fits: dict[str, ScalingFit] = field(default_factory=dict)
    depth_power_law: Optional[PowerLawFit] = None
    failures: list[dict] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 4 if self.failures else 0


def _build_instance(config: ExperimentConfig, shared, n: int, k: int) -> QuboInstance:
    """One problem instance; selection/generation seeded by (seed, n, k)."""
    rng = seeding.derive_rng(config.master_seed, seeding.PURPOSE_INSTANCE, n, k)
    label = f"{config.family}_N{n}_i{k}"
    family = FAMILIES[config.family]
    if family is ProblemFamily.PORTFOLIO:
        universe = shared
        idx = np.sort(rng.choice(universe.n_assets, size=n, replace=False))
        return build_portfolio_qubo(
            universe.restrict(idx),
            budget=n // 2,
            penalty=config.penalty,
            label=label,
        )
    if family is ProblemFamily.FEATURE_SELECTION:
        full: FeatureData = shared
        idx = np.sort(rng.choice(full.rho_fy.size, size=n, replace=False))
        sub = FeatureData(
            rho_ff=full.rho_ff[np.ix_(idx, idx)],
            rho_fy=full.rho_fy[idx],
            phi=full.phi,
        )
        return build_feature_qubo(sub, label=label)
    data = generate_moons(
        n,
        noise=config.cluster_noise,
        rng_seed=seeding.derive_seed(
            config.master_seed, seeding.PURPOSE_DATASET, n, k
        ),
    )
    return build_clustering_qubo(data, label=label)


def _shared_data(config: ExperimentConfig):
    family = FAMILIES[config.family]
    if family is ProblemFamily.PORTFOLIO:
        if config.portfolio_csv:
            return ingest_portfolio_csv(config.portfolio_csv, q_risk=config.q_risk)
        return synthetic_portfolio_universe(
            config.universe_assets, config.master_seed, q_risk=config.q_risk
        )
    if family is ProblemFamily.FEATURE_SELECTION:
        if config.feature_csv:
            return ingest_feature_csv(config.feature_csv, phi=config.phi)
        features, target = synthetic_feature_table(
            config.universe_features, master_seed=config.master_seed
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return feature_data_from_table(features, target, phi=config.phi)
    return None


def run_experiment(config: ExperimentConfig) -> ResultsStore:
    """Execute the full sweep and write all outputs to config.output_dir.

    Per-instance failures are recorded and the run continues; only config or
    data-source errors abort.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    store = ResultsStore(config=config)
    shared = _shared_data(config)
    chain_config = config.chain_config()
    cache = ChainCache()
    cache_path = out / "chain_cache.json"
    if cache_path.exists():
        cache.load(cache_path)

    instances_by_n: dict[int, list[QuboInstance]] = {}
    p_current = config.p0
    t_start = time.time()
    for n in config.sizes():
        instances_by_n[n] = []
        for k in range(config.instances_per_size):
            try:
                inst = _build_instance(config, shared, n, k)
                instances_by_n[n].append(inst)
                result = optimize_depth(
                    inst, p_init=p_current, cache=cache, config=chain_config
                )
                p_current = result.p_star
                store.instance_results.append(
                    InstanceResult(n=n, label=inst.label, depth=result)
                )
            except Exception as exc:  # noqa: BLE001 -- per-instance isolation
                store.failures.append(
                    {"n": n, "instance": k, "error": f"{type(exc).__name__}: {exc}"}
                )

    if config.measure_classical:
        for method in ("brute_force", "annealing"):
            store.classical_records[method] = measure_classical_runtime(
                instances_by_n,
                repetitions=config.repetitions,
                method=method,
                sa_budget=config.sa_budget,
                master_seed=config.master_seed,
            )

    _compute_fits(store)
    cache.save(cache_path)
    _write_outputs(store, out, wall_seconds=time.time() - t_start)
    return store


def _compute_fits(store: ResultsStore) -> None:
    quantum_records = [
        RuntimeRecord(
            n=r.n,
            instance_label=r.label,
            runtime=r.depth.total_depth,
            solved_optimally=not r.depth.is_outlier,
            repetition=0,
        )
        for r in store.instance_results
    ]
    try:
        store.quantum_fit = fit_scaling_geomean(quantum_records)
    except ValueError:
        store.quantum_fit = None
    for method, records in store.classical_records.items():
        try:
            store.classical_fits[method] = fit_scaling_robust(records)
        except ValueError:
            pass
    by_n: dict[int, list[int]] = {}
    for r in store.instance_results:
        by_n.setdefault(r.n, []).append(r.depth.p_star)
    points = [
        (float(n), float(np.exp(np.mean(np.log(ps))))) for n, ps in sorted(by_n.items())
    ]
    try:
        store.depth_power_law = fit_power_law(points)
    except ValueError:
        store.depth_power_law = None


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [repr(v) if isinstance(v, float) else v for v in row]
            )


def _geomean_by_n(pairs: list[tuple[int, float]]) -> list[tuple[int, float]]:
    by_n: dict[int, list[float]] = {}
    for n, v in pairs:
        if math.isfinite(v) and v > 0:
            by_n.setdefault(n, []).append(v)
    return [
        (n, float(np.exp(np.mean(np.log(vs))))) for n, vs in sorted(by_n.items())
    ]


def _write_outputs(store: ResultsStore, out: Path, wall_seconds: float) -> None:
    cfg = store.config

    _write_csv(
        out / "records.csv",
        [
            "n", "instance_label", "p_star", "delta_gamma", "delta_beta",
            "p_opt_extr", "p_opt_realized", "d_circuit", "total_depth", "is_outlier",
        ],
        [
            [
                r.n, r.label, r.depth.p_star,
                r.depth.extrapolation.delta_gamma_extr,
                r.depth.extrapolation.delta_beta_extr,
                r.depth.extrapolation.p_opt_extr,
                r.depth.p_opt_realized,
                r.depth.d_circuit,
                r.depth.total_depth,
                int(r.depth.is_outlier),
            ]
            for r in store.instance_results
        ],
    )

    trace_rows = []
    for r in store.instance_results:
        extr = r.depth.extrapolation
        for o in extr.sub_optima:
            trace_rows.append(
                [
                    r.label, extr.p, o.size,
                    o.log_gamma_opt, o.log_beta_opt, o.log_p_opt_max, 0,
                ]
            )
        trace_rows.append(
            [
                r.label, extr.p, r.n,
                float(np.log10(extr.delta_gamma_extr)),
                float(np.log10(extr.delta_beta_extr)),
                float(np.log10(max(extr.p_opt_extr, 1e-300))),
                1,
            ]
        )
    _write_csv(
        out / "extrapolation_traces.csv",
        ["instance_label", "p", "size", "log_gamma", "log_beta", "log_p_opt", "is_extrapolated"],
        trace_rows,
    )

    descent_rows = []
    for r in store.instance_results:
        for p, d_est in r.depth.trace:
            descent_rows.append([r.label, p, d_est, int(p == r.depth.p_star)])
    _write_csv(
        out / "descent_traces.csv",
        ["instance_label", "p", "d_estimated", "chosen_flag"],
        descent_rows,
    )

    for method, records in store.classical_records.items():
        _write_csv(
            out / f"classical_{method}.csv",
            ["n", "instance_label", "repetition", "runtime_seconds", "solved_optimally"],
            [
                [r.n, r.instance_label, r.repetition, r.runtime, int(r.solved_optimally)]
                for r in records
            ],
        )

    _write_csv(
        out / "fig_runtime_quantum.csv",
        ["n", "instance_label", "total_depth"],
        [[r.n, r.label, r.depth.total_depth] for r in store.instance_results],
    )
    _write_csv(
        out / "fig_runtime_quantum_geomean.csv",
        ["n", "geomean_total_depth"],
        [
            list(t)
            for t in _geomean_by_n(
                [(r.n, r.depth.total_depth) for r in store.instance_results]
            )
        ],
    )
    _write_csv(
        out / "fig_params.csv",
        ["n", "instance_label", "delta_gamma", "delta_beta", "p_star"],
        [
            [
                r.n, r.label,
                r.depth.extrapolation.delta_gamma_extr,
                r.depth.extrapolation.delta_beta_extr,
                r.depth.p_star,
            ]
            for r in store.instance_results
        ],
    )
    _write_csv(
        out / "fig_p_opt.csv",
        ["n", "instance_label", "p_opt_realized"],
        [[r.n, r.label, r.depth.p_opt_realized] for r in store.instance_results],
    )
    _write_csv(
        out / "fig_p_opt_geomean.csv",
        ["n", "geomean_p_opt"],
        [
            list(t)
            for t in _geomean_by_n(
                [(r.n, r.depth.p_opt_realized) for r in store.instance_results]
            )
        ],
    )

    manifest = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "master_seed": cfg.master_seed,
        "wall_seconds": wall_seconds,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "n_instances": len(store.instance_results),
        "failures": store.failures,
        "fits": {
            "quantum_geomean": _fit_dict(store.quantum_fit),
            "classical": {k: _fit_dict(v) for k, v in store.classical_fits.items()},
            "depth_power_law": (
                None
                if store.depth_power_law is None
                else {
                    "a": store.depth_power_law.a,
                    "b": store.depth_power_law.b,
                    "residual": store.depth_power_law.residual,
                }
            ),
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))


def _fit_dict(fit: Optional[ScalingFit]) -> Optional[dict]:
    if fit is None:
        return None
    return {
        "alpha": fit.alpha,
        "intercept": fit.intercept,
        "method": fit.method.value,
        "points_used": fit.points_used,
        "n_excluded": fit.n_excluded,
    }
