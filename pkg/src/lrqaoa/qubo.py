"""QUBO construction, evaluation, sub-sampling, and exact solving.

Minimization convention throughout: every builder returns an instance whose
cost ``z^T Q z + constant`` is to be minimized over binary ``z``.  The
clustering objective (maximize the cut) is stored negated.  Linear terms are
folded onto the diagonal (``z_i^2 = z_i``); additive constants (e.g. the
``A*B^2`` piece of the budget penalty) are tracked so evaluations report the
literal objective value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError, ProblemTooLargeError

#: Absolute tolerance for collecting degenerate optima.
DEGENERACY_TOL = 1e-9

#: Default cap on exact enumeration (2^n states).
DEFAULT_BRUTE_FORCE_LIMIT = 24


class ProblemFamily(Enum):
    PORTFOLIO = "portfolio"
    FEATURE_SELECTION = "feature_selection"
    CLUSTERING = "clustering"
    GENERIC = "generic"


@dataclass(frozen=True)
class CardinalityConstraint:
    """Budget constraint sum(z) = budget, enforced via quadratic penalty."""

    budget: int
    penalty: float

    def __post_init__(self):
        if self.penalty < 0:
            raise ValueError(f"penalty must be >= 0, got {self.penalty}")
        if self.budget < 0:
            raise ValueError(f"budget must be >= 0, got {self.budget}")


@dataclass(frozen=True)
class PortfolioData:
    """Expected returns, covariance and risk preference for asset selection."""

    mu: np.ndarray
    sigma: np.ndarray
    q_risk: float = 1.0

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise DimensionMismatchError(f"sigma must be square, got {sigma.shape}")
        if mu.shape != (sigma.shape[0],):
            raise DimensionMismatchError(
                f"mu length {mu.shape} inconsistent with sigma {sigma.shape}"
            )
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", 0.5 * (sigma + sigma.T))

    @property
    def n_assets(self) -> int:
        return self.mu.shape[0]

    def restrict(self, indices: np.ndarray) -> "PortfolioData":
        """Sub-select assets, keeping returns/covariance consistent."""
        idx = np.asarray(indices, dtype=int)
        return PortfolioData(self.mu[idx], self.sigma[np.ix_(idx, idx)], self.q_risk)


@dataclass(frozen=True)
class FeatureData:
    """Absolute correlation structure for feature selection.

    ``rho_ff`` holds |feature-feature| correlations (symmetric, entries in
    [0,1]); ``rho_fy`` the |feature-target| correlations; ``phi`` weights
    relevance against redundancy.
    """

    rho_ff: np.ndarray
    rho_fy: np.ndarray
    phi: float = 0.9

    def __post_init__(self):
        ff = np.asarray(self.rho_ff, dtype=float)
        fy = np.asarray(self.rho_fy, dtype=float)
        if ff.ndim != 2 or ff.shape[0] != ff.shape[1]:
            raise DimensionMismatchError(f"rho_ff must be square, got {ff.shape}")
        if fy.shape != (ff.shape[0],):
            raise DimensionMismatchError(
                f"rho_fy length {fy.shape} inconsistent with rho_ff {ff.shape}"
            )
        if np.any(ff < 0) or np.any(ff > 1) or np.any(fy < 0) or np.any(fy > 1):
            raise ValueError("correlation magnitudes must lie in [0, 1]")
        if not 0.0 <= self.phi <= 1.0:
            raise ValueError(f"phi must lie in [0, 1], got {self.phi}")
        object.__setattr__(self, "rho_ff", 0.5 * (ff + ff.T))
        object.__setattr__(self, "rho_fy", fy)


@dataclass(frozen=True)
class ClusterData:
    """2-D points and their Euclidean distance matrix."""

    points: np.ndarray
    w_matrix: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.w_matrix, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DimensionMismatchError(f"points must be (n, 2), got {pts.shape}")
        if w.shape != (pts.shape[0], pts.shape[0]):
            raise DimensionMismatchError(
                f"w_matrix {w.shape} inconsistent with {pts.shape[0]} points"
            )
        ref = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        if np.max(np.abs(w - ref)) > 1e-12:
            raise ValueError("w_matrix deviates from pairwise Euclidean distances")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "w_matrix", 0.5 * (w + w.T))

    @classmethod
    def from_points(cls, points: np.ndarray) -> "ClusterData":
        pts = np.asarray(points, dtype=float)
        w = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        return cls(pts, w)


@dataclass(frozen=True)
class QuboInstance:
    """Symmetric coefficient matrix plus problem metadata.

    ``source`` retains the family-specific input data (e.g. PortfolioData) so
    sub-instances can be rebuilt with size-dependent budgets.
    """

    n: int
    q_matrix: np.ndarray
    family: ProblemFamily = ProblemFamily.GENERIC
    label: str = ""
    constant: float = 0.0
    constraint: Optional[CardinalityConstraint] = None
    source: object = None

    def __post_init__(self):
        q = np.asarray(self.q_matrix, dtype=float)
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if q.shape != (self.n, self.n):
            raise DimensionMismatchError(
                f"q_matrix shape {q.shape} does not match n={self.n}"
            )
        q = 0.5 * (q + q.T)
        q.setflags(write=False)
        object.__setattr__(self, "q_matrix", q)


@dataclass(frozen=True)
class BruteForceResult:
    """Exact optimum of a QUBO: value, full degenerate optimum set, work count."""

    optimal_value: float
    optimal_bitstrings: frozenset
    evaluations: int


def default_penalty(unconstrained_q: np.ndarray) -> float:
    """Guaranteed-sufficient budget penalty: 1 + sum of |Q_ij| without penalty."""
    return 1.0 + float(np.abs(unconstrained_q).sum())


def build_portfolio_qubo(
    data: PortfolioData,
    budget: int,
    penalty: Optional[float] = None,
    label: str = "",
) -> QuboInstance:
    """Risk-return asset selection with a quadratic budget penalty.

    Cost over bits z: ``q z^T sigma z - (1-q) mu^T z + A (sum z - B)^2``.
    ``penalty=None`` selects the guaranteed-feasibility default.
    """
    n = data.n_assets
    if not 0 <= budget <= n:
        raise ValueError(f"budget {budget} outside [0, {n}]")
    q = data.q_risk
    base = q * data.sigma.copy()
    base[np.diag_indices(n)] += -(1.0 - q) * data.mu
    if penalty is None:
        penalty = default_penalty(base)
    if penalty < 0:
        raise ValueError(f"penalty must be >= 0, got {penalty}")
    qm = base + penalty * np.ones((n, n))
    qm[np.diag_indices(n)] += -2.0 * penalty * budget
    return QuboInstance(
        n=n,
        q_matrix=qm,
        family=ProblemFamily.PORTFOLIO,
        label=label,
        constant=penalty * budget * budget,
        constraint=CardinalityConstraint(budget=budget, penalty=penalty),
        source=data,
    )


def build_feature_qubo(data: FeatureData, label: str = "") -> QuboInstance:
    """Relevance-vs-redundancy feature selection.

    Cost: ``-(phi sum_i z_i |rho_iY| - (1-phi) sum_{i!=j} z_i z_j |rho_ij|)``.
    """
    n = data.rho_fy.shape[0]
    qm = (1.0 - data.phi) * data.rho_ff.copy()
    np.fill_diagonal(qm, -data.phi * data.rho_fy)
    return QuboInstance(
        n=n,
        q_matrix=qm,
        family=ProblemFamily.FEATURE_SELECTION,
        label=label,
        source=data,
    )


def build_clustering_qubo(data: ClusterData, label: str = "") -> QuboInstance:
    """2-cluster assignment as MaxCut on the distance graph, stored negated.

    Cost: ``-sum_{i,j} w_ij (z_i + z_j - 2 z_i z_j)``, so the minimum is the
    negated maximum cut and the complement symmetry F(z) = F(~z) is exact.
    """
    w = data.w_matrix
    n = w.shape[0]
    qm = 2.0 * w.copy()
    np.fill_diagonal(qm, -2.0 * w.sum(axis=1))
    return QuboInstance(
        n=n,
        q_matrix=qm,
        family=ProblemFamily.CLUSTERING,
        label=label,
        source=data,
    )


def evaluate(instance: QuboInstance, bits) -> float:
    """Objective value z^T Q z + constant for one bit vector."""
    z = np.asarray(bits, dtype=float)
    if z.shape != (instance.n,):
        raise DimensionMismatchError(
            f"bit vector length {z.shape} does not match n={instance.n}"
        )
    return float(z @ instance.q_matrix @ z) + instance.constant


def cost_table(instance: QuboInstance) -> np.ndarray:
    """Objective values for all 2^n bitstrings, index little-endian.

    Bit i of the array index is variable z_i.  Built by bitwise doubling:
    appending variable k adds ``Q_kk + 2 sum_{j<k} Q_jk z_j`` to each existing
    subset value, so the table costs O(n * 2^n) instead of O(4^n).
    """
    n = instance.n
    q = instance.q_matrix
    values = np.array([instance.constant], dtype=float)
    for k in range(n):
        idx = np.arange(values.size)
        cross = np.zeros(values.size)
        for j in range(k):
            cross += q[j, k] * ((idx >> j) & 1)
        values = np.concatenate([values, values + q[k, k] + 2.0 * cross])
    return values


def sample_sub_instance(
    instance: QuboInstance, sub_size: int, rng_seed
) -> QuboInstance:
    """Restrict to ``sub_size`` variables chosen uniformly without replacement.

    Portfolio instances are rebuilt from their source data with budget
    floor(sub_size / 2) and the parent's penalty kept constant; other families
    take the plain principal sub-matrix.
    """
    if sub_size > instance.n:
        raise ValueError(f"sub_size {sub_size} exceeds n={instance.n}")
    rng = np.random.default_rng(rng_seed)
    indices = np.sort(rng.choice(instance.n, size=sub_size, replace=False))
    label = f"{instance.label}/sub{sub_size}" if instance.label else f"sub{sub_size}"

    if instance.family is ProblemFamily.PORTFOLIO:
        if not isinstance(instance.source, PortfolioData):
            raise ValueError(
                "portfolio sub-sampling requires the instance's source data"
            )
        if instance.constraint is None:
            raise ValueError("portfolio instance is missing its constraint")
        return build_portfolio_qubo(
            instance.source.restrict(indices),
            budget=sub_size // 2,
            penalty=instance.constraint.penalty,
            label=label,
        )

    sub_q = instance.q_matrix[np.ix_(indices, indices)]
    return QuboInstance(
        n=sub_size,
        q_matrix=sub_q,
        family=instance.family,
        label=label,
        constant=0.0 if instance.family is not ProblemFamily.GENERIC else instance.constant,
    )


def brute_force_solve(
    instance: QuboInstance, limit: int = DEFAULT_BRUTE_FORCE_LIMIT
) -> BruteForceResult:
    """Exact minimum over all 2^n bitstrings via Gray-code incremental updates.

    Consecutive Gray codes differ in one bit, so each step costs one O(n) flip
    delta instead of a full O(n^2) re-evaluation.  All bitstrings within
    DEGENERACY_TOL of the minimum are returned.
    """
    n = instance.n
    if n > limit:
        raise ProblemTooLargeError(f"n={n} exceeds brute-force limit {limit}")
    q = instance.q_matrix
    z = np.zeros(n)
    value = instance.constant
    best = value
    best_set = [tuple(int(b) for b in z)]
    for g in range(1, 1 << n):
        k = (g & -g).bit_length() - 1
        # Delta of flipping bit k: (1 - 2 z_k) * (Q_kk + 2 sum_{j != k} Q_kj z_j)
        coupling = q[k] @ z - q[k, k] * z[k]
        value += (1.0 - 2.0 * z[k]) * (q[k, k] + 2.0 * coupling)
        z[k] = 1.0 - z[k]
        if value < best - DEGENERACY_TOL:
            best = value
            best_set = [tuple(int(b) for b in z)]
        elif abs(value - best) <= DEGENERACY_TOL:
            best_set.append(tuple(int(b) for b in z))
    return BruteForceResult(
        optimal_value=best,
        optimal_bitstrings=frozenset(best_set),
        evaluations=1 << n,
    )


def bits_to_index(bits) -> int:
    """Little-endian bitstring-to-index map shared by all modules."""
    return int(sum(int(b) << i for i, b in enumerate(bits)))
