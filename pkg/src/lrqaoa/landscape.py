"""Grid search over (log10 dgamma, log10 dbeta) and skew-Gaussian landscape fit.

All grid coordinates are base-10 logarithms of the two ramp scales.  The
fitted surface is

    f(x) = amp * exp(-(x-mu)^T Sinv (x-mu) / 2)
               * (1 + erf(alpha . (x-mu) / sqrt(2))) / 2 + offset

with Sinv = L L^T kept positive semidefinite through its Cholesky factor and
amp, offset kept nonnegative by squaring the raw fit parameters.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import erf

from .errors import SkewFitError
from .qubo import QuboInstance, brute_force_solve
from .simulate import simulate_batch, success_probability, Statevector

DEFAULT_RESOLUTION = 11

# Paper-default initial window for the smallest sub-size.
DEFAULT_LOG_GAMMA_BOUNDS = (-1.0, 1.0)
DEFAULT_LOG_BETA_BOUNDS = (-1.5, 0.5)

FIT_MAX_ITER = 2000
FIT_N_STARTS = 8
FIT_XTOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Rectangular window in (log10 dgamma, log10 dbeta) with per-axis resolution."""

    log_gamma_min: float = DEFAULT_LOG_GAMMA_BOUNDS[0]
    log_gamma_max: float = DEFAULT_LOG_GAMMA_BOUNDS[1]
    log_beta_min: float = DEFAULT_LOG_BETA_BOUNDS[0]
    log_beta_max: float = DEFAULT_LOG_BETA_BOUNDS[1]
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self):
        if not (self.log_gamma_min < self.log_gamma_max):
            raise ValueError("log_gamma bounds must be ordered")
        if not (self.log_beta_min < self.log_beta_max):
            raise ValueError("log_beta bounds must be ordered")
        if self.resolution < 3:
            raise ValueError(f"resolution must be >= 3, got {self.resolution}")

    def gamma_values(self) -> np.ndarray:
        return np.linspace(self.log_gamma_min, self.log_gamma_max, self.resolution)

    def beta_values(self) -> np.ndarray:
        return np.linspace(self.log_beta_min, self.log_beta_max, self.resolution)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened (log_gamma, log_beta) coordinates of all grid nodes.

        Node (i, j) of the resolution x resolution matrix maps to flat index
        i * resolution + j, with i indexing gamma and j indexing beta.
        """
        gg, bb = np.meshgrid(self.gamma_values(), self.beta_values(), indexing="ij")
        return gg.ravel(), bb.ravel()


@dataclass(frozen=True)
class GridSearchLandscape:
    """Mean success probability over the grid; axis 0 is gamma, axis 1 beta."""

    spec: GridSpec
    mean_p_opt: np.ndarray
    p: int
    per_instance_p_opt: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SkewGaussianParams:
    mu: np.ndarray
    sigma_inv: np.ndarray
    alpha: np.ndarray
    amp: float
    offset: float


@dataclass(frozen=True)
class LandscapeOptimum:
    log_gamma_opt: float
    log_beta_opt: float
    p_opt_max: float
    width_gamma: float
    width_beta: float


def run_grid_search(
    sub_instances: Sequence[QuboInstance],
    spec: GridSpec,
    p: int,
    keep_per_instance: bool = False,
    simulator_limit: int = 26,
) -> GridSearchLandscape:
    """Mean P_opt over sub-instances at every grid node.

    All grid nodes for one instance are simulated in a single batch, reusing
    that instance's cost table and brute-force optimum set.
    """
    if not sub_instances:
        raise ValueError("need at least one sub-instance")
    log_g, log_b = spec.nodes()
    dgs = 10.0 ** log_g
    dbs = 10.0 ** log_b
    r = spec.resolution
    per_instance = np.empty((len(sub_instances), r, r))
    for k, inst in enumerate(sub_instances):
        optima = brute_force_solve(inst)
        amps = simulate_batch(inst, dgs, dbs, p, limit=simulator_limit)
        probs = np.empty(dgs.size)
        for b in range(dgs.size):
            state = Statevector(amplitudes=amps[b], n=inst.n)
            probs[b] = success_probability(state, optima).p_opt
        per_instance[k] = probs.reshape(r, r)
    return GridSearchLandscape(
        spec=spec,
        mean_p_opt=per_instance.mean(axis=0),
        p=p,
        per_instance_p_opt=per_instance if keep_per_instance else None,
    )


def skew_gaussian(x: np.ndarray, params: SkewGaussianParams) -> np.ndarray:
    """Evaluate the skewed-Gaussian surface at points x of shape (..., 2)."""
    d = np.asarray(x, dtype=float) - params.mu
    quad = np.einsum("...i,ij,...j->...", d, params.sigma_inv, d)
    skew = 0.5 * (1.0 + erf(d @ params.alpha / np.sqrt(2.0)))
    return params.amp * np.exp(-0.5 * quad) * skew + params.offset


def _unpack(theta: np.ndarray) -> SkewGaussianParams:
    mu = theta[0:2]
    ell = np.array([[theta[2], 0.0], [theta[3], theta[4]]])
    return SkewGaussianParams(
        mu=mu,
        sigma_inv=ell @ ell.T,
        alpha=theta[5:7],
        amp=theta[7] ** 2,
        offset=theta[8] ** 2,
    )


def _fit_starts(
    landscape: GridSearchLandscape, rng: np.random.Generator
) -> list[np.ndarray]:
    spec = landscape.spec
    z = landscape.mean_p_opt
    gv, bv = spec.gamma_values(), spec.beta_values()
    i0, j0 = np.unravel_index(np.argmax(z), z.shape)
    span_g = spec.log_gamma_max - spec.log_gamma_min
    span_b = spec.log_beta_max - spec.log_beta_min
    lo = float(z.min())
    amp0 = max(float(z.max()) - lo, 1e-12)
    base = np.array(
        [
            gv[i0],
            bv[j0],
            4.0 / span_g,
            0.0,
            4.0 / span_b,
            0.0,
            0.0,
            np.sqrt(amp0),
            np.sqrt(max(lo, 0.0)),
        ]
    )
    centroid = base.copy()
    centroid[0] = 0.5 * (spec.log_gamma_min + spec.log_gamma_max)
    centroid[1] = 0.5 * (spec.log_beta_min + spec.log_beta_max)
    starts = [base, centroid]
    for _ in range(FIT_N_STARTS - 2):
        pert = base.copy()
        pert[0] += rng.normal(0.0, 0.2 * span_g)
        pert[1] += rng.normal(0.0, 0.2 * span_b)
        pert[5:7] = rng.normal(0.0, 2.0, size=2)
        pert[2] *= rng.uniform(0.5, 2.0)
        pert[4] *= rng.uniform(0.5, 2.0)
        starts.append(pert)
    return starts


def fit_skew_gaussian(
    landscape: GridSearchLandscape, rng_seed: int = 0
) -> SkewGaussianParams:
    """Least-squares fit of the skewed Gaussian to all grid nodes.

    Derivative-free simplex descent from FIT_N_STARTS initializations (grid
    argmax, grid centroid, and random perturbations); the best residual wins.
    The constant fit (amp = 0, offset = mean) is always included as a
    candidate, so the returned residual never exceeds the constant-fit one.

    Raises SkewFitError when the landscape is constant or every start
    produces a non-finite residual; callers fall back to the raw grid argmax.
    """
    z = landscape.mean_p_opt
    if np.ptp(z) <= 0.0:
        raise SkewFitError("constant landscape cannot constrain the fit")
    log_g, log_b = landscape.spec.nodes()
    pts = np.column_stack([log_g, log_b])
    target = z.ravel()

    def sse(theta: np.ndarray) -> float:
        resid = skew_gaussian(pts, _unpack(theta)) - target
        return float(resid @ resid)

    rng = np.random.default_rng(rng_seed)
    best_theta = None
    best_sse = np.inf
    for theta0 in _fit_starts(landscape, rng):
        res = minimize(
            sse,
            theta0,
            method="Nelder-Mead",
            options={
                "maxiter": FIT_MAX_ITER,
                "xatol": FIT_XTOL,
                "fatol": FIT_XTOL**2,
                "adaptive": True,
            },
        )
        if np.isfinite(res.fun) and res.fun < best_sse:
            best_sse = res.fun
            best_theta = res.x
    # Constant-fit floor: guarantees residual <= residual of f = mean(z).
    const_theta = np.zeros(9)
    const_theta[2] = const_theta[4] = 1.0
    const_theta[8] = np.sqrt(max(float(target.mean()), 0.0))
    if best_theta is None or sse(const_theta) < best_sse:
        best_theta = const_theta
        best_sse = sse(const_theta)
    if best_theta is None or not np.isfinite(best_sse):
        raise SkewFitError("all fit starts diverged")
    return _unpack(best_theta)


def grid_argmax_optimum(landscape: GridSearchLandscape) -> LandscapeOptimum:
    """Fallback optimum: raw grid argmax with half the grid span as widths."""
    spec = landscape.spec
    z = landscape.mean_p_opt
    i0, j0 = np.unravel_index(np.argmax(z), z.shape)
    return LandscapeOptimum(
        log_gamma_opt=float(spec.gamma_values()[i0]),
        log_beta_opt=float(spec.beta_values()[j0]),
        p_opt_max=float(z[i0, j0]),
        width_gamma=0.5 * (spec.log_gamma_max - spec.log_gamma_min),
        width_beta=0.5 * (spec.log_beta_max - spec.log_beta_min),
    )


def locate_maximum(
    params: SkewGaussianParams,
    landscape: Optional[GridSearchLandscape] = None,
) -> LandscapeOptimum:
    """Numerical maximum of the fitted surface plus widths from its covariance.

    Seeded at mu and, when the landscape is supplied, at its best grid node.
    A singular sigma_inv degrades the widths to half the grid span (or 0.5
    log-units when no grid context is available).
    """
    seeds = [params.mu]
    if landscape is not None:
        fb = grid_argmax_optimum(landscape)
        seeds.append(np.array([fb.log_gamma_opt, fb.log_beta_opt]))

    def neg_f(x: np.ndarray) -> float:
        return -float(skew_gaussian(x, params))

    best_x, best_val = None, np.inf
    for seed in seeds:
        res = minimize(
            neg_f,
            seed,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000},
        )
        if res.fun < best_val:
            best_val, best_x = res.fun, res.x

    if landscape is not None:
        span_g = landscape.spec.log_gamma_max - landscape.spec.log_gamma_min
        span_b = landscape.spec.log_beta_max - landscape.spec.log_beta_min
    else:
        span_g = span_b = 1.0
    try:
        cov = np.linalg.inv(params.sigma_inv)
        if cov[0, 0] <= 0 or cov[1, 1] <= 0:
            raise np.linalg.LinAlgError("non-positive variance")
        width_g = float(np.sqrt(cov[0, 0]))
        width_b = float(np.sqrt(cov[1, 1]))
    except np.linalg.LinAlgError:
        width_g, width_b = 0.5 * span_g, 0.5 * span_b
    return LandscapeOptimum(
        log_gamma_opt=float(best_x[0]),
        log_beta_opt=float(best_x[1]),
        p_opt_max=float(-best_val),
        width_gamma=width_g,
        width_beta=width_b,
    )


def reduce_grid(opt: LandscapeOptimum, resolution: int = DEFAULT_RESOLUTION) -> GridSpec:
    """Recenter the window on the found optimum with +/- one width per axis."""
    if opt.width_gamma <= 0 or opt.width_beta <= 0:
        raise ValueError("widths must be positive")
    return GridSpec(
        log_gamma_min=opt.log_gamma_opt - opt.width_gamma,
        log_gamma_max=opt.log_gamma_opt + opt.width_gamma,
        log_beta_min=opt.log_beta_opt - opt.width_beta,
        log_beta_max=opt.log_beta_opt + opt.width_beta,
        resolution=resolution,
    )


def landscape_to_csv(landscape: GridSearchLandscape, path) -> None:
    """Dump the mean landscape as (log_dgamma, log_dbeta, mean_p_opt) rows."""
    log_g, log_b = landscape.spec.nodes()
    flat = landscape.mean_p_opt.ravel()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["log_dgamma", "log_dbeta", "mean_p_opt"])
        for g, b, v in zip(log_g, log_b, flat):
            writer.writerow([repr(float(g)), repr(float(b)), repr(float(v))])
