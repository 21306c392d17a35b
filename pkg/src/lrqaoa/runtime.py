"""Quantum-runtime accounting and local-descent optimization of the depth p.

The runtime proxy for one instance is the total depth D = d * N_shots, with d
the gate-layer depth of a single circuit and N_shots the median number of
executions until the optimal solution is observed.  D is first estimated from
the extrapolation chain and minimized over a logarithmic p-grid; the chosen
depth is then validated with one full-size simulation.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import seeding
from .errors import SkewFitError
from .extrapolation import ExtrapolationResult, SubSizeOptimum, extrapolate_params
from .landscape import (
    GridSpec,
    fit_skew_gaussian,
    grid_argmax_optimum,
    locate_maximum,
    reduce_grid,
    run_grid_search,
)
from .qubo import QuboInstance, brute_force_solve, sample_sub_instance
from .simulate import build_schedule, simulate, success_probability

P_OPT_FLOOR = 1e-15
P_OPT_CEILING = 1.0 - 1e-9


@dataclass(frozen=True)
class DepthModel:
    """Gate-layer depth of one circuit: d = p * (n + 1) by default.

    The n+1 layers per QAOA layer come from a swap-network bound for the
    fully connected cost block plus one mixer layer.  Setting
    ``per_layer_depth_coefficient`` replaces n + 1 by a fixed constant;
    scaling exponents are invariant to this choice.
    """

    per_layer_depth_coefficient: Optional[float] = None

    def __post_init__(self):
        c = self.per_layer_depth_coefficient
        if c is not None and c <= 0:
            raise ValueError(f"coefficient must be > 0, got {c}")

    def layer_depth(self, n: int) -> float:
        if self.per_layer_depth_coefficient is not None:
            return float(self.per_layer_depth_coefficient)
        return float(n + 1)


@dataclass(frozen=True)
class ShotEstimate:
    p_opt: float
    n_shots: float


@dataclass(frozen=True)
class DepthOptimizationResult:
    p_star: int
    d_circuit: float
    total_depth: float
    trace: tuple[tuple[int, float], ...]
    p_opt_realized: float
    extrapolation: ExtrapolationResult
    is_outlier: bool = False


def p_grid(max_index: int = 60) -> list[int]:
    """Logarithmic depth grid {1, 2, 3} + floor(2^(i/4)) for i = 9..max_index."""
    values = {1, 2, 3}
    for i in range(9, max_index + 1):
        values.add(math.floor(2.0 ** (i / 4.0)))
    return sorted(values)


def circuit_depth(n: int, p: int, model: DepthModel = DepthModel()) -> float:
    if n < 1 or p < 1:
        raise ValueError("n and p must be >= 1")
    return p * model.layer_depth(n)


def median_shots(p_opt: float) -> ShotEstimate:
    """Median executions until success: log(1/2) / log(1 - p_opt).

    Inputs outside (0, 1) are clamped to [1e-15, 1 - 1e-9] with a warning;
    the estimate is real-valued, not rounded.
    """
    clamped = min(max(p_opt, P_OPT_FLOOR), P_OPT_CEILING)
    if clamped != p_opt:
        warnings.warn(
            f"p_opt={p_opt} clamped to {clamped} for the shots formula",
            stacklevel=2,
        )
    return ShotEstimate(
        p_opt=clamped,
        n_shots=math.log(0.5) / math.log1p(-clamped),
    )


@dataclass(frozen=True)
class ChainConfig:
    """Settings for the sub-sample / grid-search / extrapolation chain."""

    sub_sizes: tuple[int, ...] = (4, 6, 8, 10)
    sub_instances_per_size: int = 10
    grid_resolution: int = 11
    log_gamma_bounds: tuple[float, float] = (-1.0, 1.0)
    log_beta_bounds: tuple[float, float] = (-1.5, 0.5)
    master_seed: int = 0
    depth_model: DepthModel = field(default_factory=DepthModel)

    def initial_spec(self) -> GridSpec:
        return GridSpec(
            log_gamma_min=self.log_gamma_bounds[0],
            log_gamma_max=self.log_gamma_bounds[1],
            log_beta_min=self.log_beta_bounds[0],
            log_beta_max=self.log_beta_bounds[1],
            resolution=self.grid_resolution,
        )


class ChainCache:
    """Extrapolation-chain results keyed by (instance label, p).

    Within one run the cache is an in-memory dict; ``save``/``load`` persist
    it to JSON so repeated runs with the same config reuse earlier chains.
    """

    def __init__(self):
        self._store: dict[tuple[str, int], ExtrapolationResult] = {}

    def get(self, label: str, p: int) -> Optional[ExtrapolationResult]:
        return self._store.get((label, p))

    def put(self, label: str, p: int, result: ExtrapolationResult) -> None:
        self._store[(label, p)] = result

    def save(self, path) -> None:
        rows = []
        for (label, p), res in self._store.items():
            rows.append(
                {
                    "label": label,
                    "p": p,
                    "delta_gamma_extr": res.delta_gamma_extr,
                    "delta_beta_extr": res.delta_beta_extr,
                    "p_opt_extr": res.p_opt_extr,
                    "clamped": res.clamped,
                    "fits": [
                        {"slope": f.slope, "intercept": f.intercept, "residual": f.residual}
                        for f in res.fits
                    ],
                    "sub_optima": [
                        {
                            "size": o.size,
                            "log_gamma_opt": o.log_gamma_opt,
                            "log_beta_opt": o.log_beta_opt,
                            "log_p_opt_max": o.log_p_opt_max,
                        }
                        for o in res.sub_optima
                    ],
                }
            )
        Path(path).write_text(json.dumps(rows, indent=1))

    def load(self, path) -> None:
        from .extrapolation import LogLogFit

        for row in json.loads(Path(path).read_text()):
            fits = tuple(
                LogLogFit(f["slope"], f["intercept"], f["residual"]) for f in row["fits"]
            )
            subs = tuple(
                SubSizeOptimum(
                    size=o["size"],
                    log_gamma_opt=o["log_gamma_opt"],
                    log_beta_opt=o["log_beta_opt"],
                    log_p_opt_max=o["log_p_opt_max"],
                )
                for o in row["sub_optima"]
            )
            self._store[(row["label"], row["p"])] = ExtrapolationResult(
                delta_gamma_extr=row["delta_gamma_extr"],
                delta_beta_extr=row["delta_beta_extr"],
                p_opt_extr=row["p_opt_extr"],
                fits=fits,
                p=row["p"],
                clamped=row["clamped"],
                sub_optima=subs,
            )


def run_parameter_chain(
    instance: QuboInstance, p: int, config: ChainConfig
) -> ExtrapolationResult:
    """Sub-sample, grid-search, fit and extrapolate at one candidate depth.

    Sub-instance selection seeds depend only on the master seed, the instance
    label and the sub-size index, so every candidate p sees identical
    sub-instances.  A failed or degenerate skew fit falls back to the raw
    grid argmax with half-span widths.
    """
    label_key = abs(hash(instance.label)) % (1 << 32)
    spec = config.initial_spec()
    sub_optima: list[SubSizeOptimum] = []
    for size_idx, sub_size in enumerate(sorted(config.sub_sizes)):
        subs = [
            sample_sub_instance(
                instance,
                sub_size,
                seeding.derive_seed(
                    config.master_seed,
                    seeding.PURPOSE_SUBSAMPLE,
                    label_key,
                    size_idx,
                    k,
                ),
            )
            for k in range(config.sub_instances_per_size)
        ]
        landscape = run_grid_search(subs, spec, p)
        try:
            params = fit_skew_gaussian(landscape)
            opt = locate_maximum(params, landscape)
            if opt.p_opt_max <= params.offset:
                opt = grid_argmax_optimum(landscape)
        except SkewFitError:
            opt = grid_argmax_optimum(landscape)
        sub_optima.append(
            SubSizeOptimum(
                size=sub_size,
                log_gamma_opt=opt.log_gamma_opt,
                log_beta_opt=opt.log_beta_opt,
                log_p_opt_max=float(np.log10(max(opt.p_opt_max, P_OPT_FLOOR))),
            )
        )
        spec = reduce_grid(opt, resolution=config.grid_resolution)
    return extrapolate_params(sub_optima, target_size=instance.n, p=p)


def estimate_total_depth(
    instance: QuboInstance,
    p: int,
    cache: Optional[ChainCache] = None,
    config: ChainConfig = ChainConfig(),
) -> tuple[float, ExtrapolationResult]:
    """Estimated total depth at one candidate p, driven by the chain."""
    result = cache.get(instance.label, p) if cache is not None else None
    if result is None:
        result = run_parameter_chain(instance, p, config)
        if cache is not None:
            cache.put(instance.label, p, result)
    d = circuit_depth(instance.n, p, config.depth_model)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        shots = median_shots(result.p_opt_extr)
    return d * shots.n_shots, result


def realized_depth(
    instance: QuboInstance,
    delta_gamma: float,
    delta_beta: float,
    p: int,
    depth_model: DepthModel = DepthModel(),
    optima=None,
) -> tuple[float, float]:
    """One full-size simulation: returns (realized D, realized P_opt).

    A success probability at the clamp floor yields an infinite-depth
    sentinel so callers can flag the instance as an outlier.
    """
    if optima is None:
        optima = brute_force_solve(instance)
    schedule = build_schedule(delta_gamma, delta_beta, p)
    state = simulate(instance, schedule)
    p_opt = success_probability(state, optima).p_opt
    if p_opt <= P_OPT_FLOOR:
        return math.inf, p_opt
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        shots = median_shots(p_opt)
    return circuit_depth(instance.n, p, depth_model) * shots.n_shots, p_opt


def optimize_depth(
    instance: QuboInstance,
    p_init: int = 6,
    cache: Optional[ChainCache] = None,
    config: ChainConfig = ChainConfig(),
    grid_max_index: int = 60,
) -> DepthOptimizationResult:
    """Descend the logarithmic p-grid to a local minimum of estimated D.

    Both neighbors of the start point are explored before committing; ties
    break toward smaller p (cheaper circuits).  The chosen depth is then
    validated by one full-size simulation at the extrapolated parameters.
    """
    if cache is None:
        cache = ChainCache()
    grid = p_grid(grid_max_index)
    idx = int(np.argmin(np.abs(np.array(grid) - p_init)))

    evaluated: dict[int, tuple[float, ExtrapolationResult]] = {}

    def eval_at(i: int) -> float:
        p = grid[i]
        if p not in evaluated:
            evaluated[p] = estimate_total_depth(instance, p, cache, config)
        return evaluated[p][0]

    trace: list[tuple[int, float]] = []
    current = eval_at(idx)
    trace.append((grid[idx], current))
    while True:
        candidates = []
        for nb in (idx - 1, idx + 1):
            if 0 <= nb < len(grid):
                d_nb = eval_at(nb)
                if (grid[nb], d_nb) not in trace:
                    trace.append((grid[nb], d_nb))
                if d_nb < current:
                    candidates.append((d_nb, grid[nb], nb))
        if not candidates:
            break
        # Steepest descent; ties toward smaller p.
        candidates.sort(key=lambda t: (t[0], t[1]))
        current, _, idx = candidates[0]

    p_star = grid[idx]
    _, extrapolation = evaluated[p_star]
    full_optima = brute_force_solve(instance)
    total_depth, p_opt_realized = realized_depth(
        instance,
        extrapolation.delta_gamma_extr,
        extrapolation.delta_beta_extr,
        p_star,
        depth_model=config.depth_model,
        optima=full_optima,
    )
    return DepthOptimizationResult(
        p_star=p_star,
        d_circuit=circuit_depth(instance.n, p_star, config.depth_model),
        total_depth=total_depth,
        trace=tuple(trace),
        p_opt_realized=p_opt_realized,
        extrapolation=extrapolation,
        is_outlier=not math.isfinite(total_depth),
    )


def refine_parameters(
    instance: QuboInstance,
    extrapolation: ExtrapolationResult,
    p: int,
    depth_model: DepthModel = DepthModel(),
    max_iter: int = 80,
) -> tuple[float, float, float]:
    """Directly minimize the realized D over (log dgamma, log dbeta) at fixed p.

    Seeded at the extrapolated parameters; every objective evaluation is one
    full-size simulation, so the iteration budget is kept small.  Returns
    (delta_gamma, delta_beta, realized D) at the minimizer.
    """
    from scipy.optimize import minimize

    optima = brute_force_solve(instance)

    def objective(x: np.ndarray) -> float:
        d, _ = realized_depth(
            instance, 10.0 ** x[0], 10.0 ** x[1], p, depth_model, optima
        )
        return d if math.isfinite(d) else 1e300

    x0 = np.log10([extrapolation.delta_gamma_extr, extrapolation.delta_beta_extr])
    res = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={"maxiter": max_iter, "xatol": 1e-3, "fatol": 1e-6},
    )
    return 10.0 ** res.x[0], 10.0 ** res.x[1], float(res.fun)
