"""Log-log trend fits of per-sub-size optima and extrapolation to full size."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class SubSizeOptimum:
    """Fitted landscape optimum for one sub-instance size.

    ``log_p_opt_max`` is log10 of the fitted maximum mean success probability;
    the two parameter coordinates are already base-10 logs.
    """

    size: int
    log_gamma_opt: float
    log_beta_opt: float
    log_p_opt_max: float

    def __post_init__(self):
        if self.size < 2:
            raise ValueError(f"size must be >= 2, got {self.size}")


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    residual: float

    def predict(self, size: float) -> float:
        return self.slope * np.log10(size) + self.intercept


@dataclass(frozen=True)
class ExtrapolationResult:
    """Extrapolated (delta_gamma, delta_beta, P_opt) at full size for one depth."""

    delta_gamma_extr: float
    delta_beta_extr: float
    p_opt_extr: float
    fits: tuple[LogLogFit, LogLogFit, LogLogFit]
    p: int
    clamped: bool = False
    sub_optima: tuple[SubSizeOptimum, ...] = field(default=())


def fit_loglog(points: Sequence[tuple[float, float]]) -> LogLogFit:
    """Ordinary least squares of y against x = log10(size).

    The y values are already logarithmic (log10 of the quantity being
    trended); residual is the sum of squared errors.
    """
    sizes = np.array([s for s, _ in points], dtype=float)
    ys = np.array([y for _, y in points], dtype=float)
    if np.unique(sizes).size < 2:
        raise ValueError("need at least 2 distinct sizes")
    if np.any(sizes <= 0):
        raise ValueError("sizes must be positive")
    x = np.log10(sizes)
    slope, intercept = np.polyfit(x, ys, 1)
    resid = ys - (slope * x + intercept)
    return LogLogFit(
        slope=float(slope),
        intercept=float(intercept),
        residual=float(resid @ resid),
    )


def extrapolate_params(
    optima: Sequence[SubSizeOptimum], target_size: int, p: int
) -> ExtrapolationResult:
    """Evaluate the three fitted log-log lines at the full problem size.

    Returns 10^y for each quantity; an extrapolated success probability above
    1 is clamped to 1 and flagged (the shots model re-clamps below 1).
    """
    if target_size <= max(o.size for o in optima):
        raise ValueError("target_size must exceed the largest sub-size")
    fit_g = fit_loglog([(o.size, o.log_gamma_opt) for o in optima])
    fit_b = fit_loglog([(o.size, o.log_beta_opt) for o in optima])
    fit_p = fit_loglog([(o.size, o.log_p_opt_max) for o in optima])
    p_opt = 10.0 ** fit_p.predict(target_size)
    clamped = p_opt > 1.0
    return ExtrapolationResult(
        delta_gamma_extr=float(10.0 ** fit_g.predict(target_size)),
        delta_beta_extr=float(10.0 ** fit_b.predict(target_size)),
        p_opt_extr=min(p_opt, 1.0),
        fits=(fit_g, fit_b, fit_p),
        p=p,
        clamped=clamped,
        sub_optima=tuple(optima),
    )
