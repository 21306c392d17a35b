"""Classical reference solvers, runtime measurement, and scaling-exponent fits.

The classical baselines are exact enumeration and single-flip Metropolis
annealing with restarts.  Runtime records feed two exponent estimators: a
robust Theil-Sen fit on log2 median runtimes (classical) and an OLS fit on
log2 geometric-mean total depths (quantum); both report the slope of
T ~ 2^(alpha * N).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .qubo import QuboInstance, brute_force_solve, DEGENERACY_TOL


@dataclass(frozen=True)
class RuntimeRecord:
    """One timing measurement (classical seconds or quantum total depth)."""

    n: int
    instance_label: str
    runtime: float
    solved_optimally: bool
    repetition: int


class FitMethod(Enum):
    ROBUST_THEIL_SEN = "theil_sen"
    OLS_ON_GEOMEAN = "ols_geomean"


@dataclass(frozen=True)
class ScalingFit:
    """Exponent of T ~ 2^(alpha*N); n_excluded counts dropped sentinel records."""

    alpha: float
    intercept: float
    method: FitMethod
    points_used: int
    n_excluded: int = 0


@dataclass(frozen=True)
class PowerLawFit:
    a: float
    b: float
    residual: float = 0.0

    def predict(self, n: float) -> float:
        return self.a * n**self.b


def simulated_annealing_solve(
    instance: QuboInstance,
    budget: int,
    rng_seed,
    sweeps_per_restart: int = 50,
) -> tuple[np.ndarray, float, float]:
    """Single-flip Metropolis annealing with restarts and incremental deltas.

    ``budget`` is the total number of sweeps across all restarts; each
    restart cools geometrically from a scale set by the row sums of |Q|.
    Returns (best bitstring, best value, wall-clock seconds until the best
    value was first reached).
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    rng = np.random.default_rng(rng_seed)
    n = instance.n
    q = instance.q_matrix
    diag = np.diag(q)
    t_hot = max(2.0 * float(np.abs(q).sum(axis=1).max()), 1e-12)
    t_cold = 1e-3 * t_hot

    best_bits = np.zeros(n, dtype=np.int8)
    best_value = instance.constant
    t_start = time.perf_counter()
    time_to_best = 0.0

    sweeps_left = budget
    while sweeps_left > 0:
        sweeps = min(sweeps_per_restart, sweeps_left)
        sweeps_left -= sweeps
        z = rng.integers(0, 2, size=n).astype(float)
        field = q @ z
        value = float(z @ field) + instance.constant
        if value < best_value - DEGENERACY_TOL:
            best_value, best_bits = value, z.astype(np.int8).copy()
            time_to_best = time.perf_counter() - t_start
        cooling = (t_cold / t_hot) ** (1.0 / max(sweeps - 1, 1))
        temp = t_hot
        for _ in range(sweeps):
            for k in rng.permutation(n):
                delta = (1.0 - 2.0 * z[k]) * (diag[k] + 2.0 * (field[k] - diag[k] * z[k]))
                if delta <= 0.0 or rng.random() < math.exp(-delta / temp):
                    sign = 1.0 - 2.0 * z[k]
                    z[k] = 1.0 - z[k]
                    field += sign * q[:, k]
                    value += delta
                    if value < best_value - DEGENERACY_TOL:
                        best_value, best_bits = value, z.astype(np.int8).copy()
                        time_to_best = time.perf_counter() - t_start
            temp *= cooling
    return best_bits, float(best_value), time_to_best


def measure_classical_runtime(
    instances_by_n: dict[int, Sequence[QuboInstance]],
    repetitions: int = 5,
    method: str = "brute_force",
    sa_budget: int = 200,
    master_seed: int = 0,
    wall_limit: Optional[float] = None,
    brute_force_limit: int = 24,
) -> list[RuntimeRecord]:
    """Repeated timing of the classical reference on every instance.

    Brute-force records measure the enumeration time (always optimal);
    annealing records measure time-to-best and are labeled optimal against
    the enumeration oracle.  A wall limit marks slower records as unsolved
    timeout sentinels rather than aborting.
    """
    records: list[RuntimeRecord] = []
    for n, instances in sorted(instances_by_n.items()):
        for k, inst in enumerate(instances):
            oracle = (
                brute_force_solve(inst, limit=brute_force_limit)
                if n <= brute_force_limit
                else None
            )
            for rep in range(repetitions):
                if method == "brute_force":
                    t0 = time.perf_counter()
                    brute_force_solve(inst, limit=brute_force_limit)
                    elapsed = time.perf_counter() - t0
                    solved = True
                elif method == "annealing":
                    _, value, elapsed = simulated_annealing_solve(
                        inst, budget=sa_budget, rng_seed=(master_seed, n, k, rep)
                    )
                    solved = (
                        oracle is not None
                        and value <= oracle.optimal_value + DEGENERACY_TOL
                    )
                else:
                    raise ValueError(f"unknown method {method!r}")
                if wall_limit is not None and elapsed > wall_limit:
                    solved = False
                records.append(
                    RuntimeRecord(
                        n=n,
                        instance_label=inst.label or f"n{n}i{k}",
                        runtime=elapsed,
                        solved_optimally=solved,
                        repetition=rep,
                    )
                )
    return records


def theil_sen(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Median of all pairwise slopes; intercept is the median residual."""
    slopes = []
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            if x[j] != x[i]:
                slopes.append((y[j] - y[i]) / (x[j] - x[i]))
    slope = float(np.median(slopes))
    intercept = float(np.median(y - slope * x))
    return slope, intercept


def fit_scaling_robust(records: Sequence[RuntimeRecord]) -> ScalingFit:
    """Theil-Sen fit of log2 per-instance median runtime against n.

    Only optimally solved records enter; the per-instance median over
    repetitions suppresses timing noise before the robust fit.
    """
    solved = [r for r in records if r.solved_optimally and r.runtime > 0]
    per_instance: dict[tuple[int, str], list[float]] = {}
    for r in solved:
        per_instance.setdefault((r.n, r.instance_label), []).append(r.runtime)
    ns = np.array([k[0] for k in per_instance], dtype=float)
    meds = np.array([np.median(v) for v in per_instance.values()])
    if np.unique(ns).size < 3:
        raise ValueError("need records at >= 3 distinct sizes")
    slope, intercept = theil_sen(ns, np.log2(meds))
    return ScalingFit(
        alpha=slope,
        intercept=intercept,
        method=FitMethod.ROBUST_THEIL_SEN,
        points_used=len(ns),
        n_excluded=len(records) - len(solved),
    )


def fit_scaling_geomean(records: Sequence[RuntimeRecord]) -> ScalingFit:
    """OLS on log2 of the per-size geometric mean of total depths.

    Infinite-depth sentinel records are excluded from the geometric mean and
    surfaced in ``n_excluded``.
    """
    finite = [r for r in records if math.isfinite(r.runtime) and r.runtime > 0]
    by_n: dict[int, list[float]] = {}
    for r in finite:
        by_n.setdefault(r.n, []).append(r.runtime)
    if len(by_n) < 3:
        raise ValueError("need records at >= 3 distinct sizes")
    ns = np.array(sorted(by_n), dtype=float)
    log2_geomean = np.array([np.mean(np.log2(by_n[int(n)])) for n in ns])
    slope, intercept = np.polyfit(ns, log2_geomean, 1)
    return ScalingFit(
        alpha=float(slope),
        intercept=float(intercept),
        method=FitMethod.OLS_ON_GEOMEAN,
        points_used=int(ns.size),
        n_excluded=len(records) - len(finite),
    )


def fit_power_law(points: Sequence[tuple[float, float]]) -> PowerLawFit:
    """OLS in log10-log10 space for v = a * n^b."""
    ns = np.array([n for n, _ in points], dtype=float)
    vals = np.array([v for _, v in points], dtype=float)
    if np.any(vals <= 0) or np.any(ns <= 0):
        raise ValueError("power-law fit requires positive sizes and values")
    if np.unique(ns).size < 2:
        raise ValueError("need >= 2 distinct sizes")
    x, y = np.log10(ns), np.log10(vals)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return PowerLawFit(
        a=float(10.0**intercept), b=float(slope), residual=float(resid @ resid)
    )
