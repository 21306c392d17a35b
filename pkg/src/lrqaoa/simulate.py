"""Exact statevector simulation of the linear-ramp QAOA circuit.

Bit order is little-endian everywhere: bit i of a statevector index is
variable z_i.  The cost unitary is a diagonal phase over the precomputed
objective table; the mixer is applied as n independent single-qubit
butterflies per layer (exp(+i beta X) on each qubit, since M = -sum X).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, ProblemTooLargeError
from .qubo import BruteForceResult, QuboInstance, bits_to_index, cost_table

DEFAULT_SIMULATOR_LIMIT = 26


@dataclass(frozen=True)
class LinearRampSchedule:
    """Linear-ramp angle schedule (delta_gamma, delta_beta, p).

    gamma_j = delta_gamma * (j - 1/2) / p rises linearly; beta_j mirrors it
    downwards.  Only build_schedule() enforces positive scales; direct
    construction permits degenerate test schedules (e.g. delta_gamma = 0).
    """

    delta_gamma: float
    delta_beta: float
    p: int
    gammas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        g = np.asarray(self.gammas, dtype=float)
        b = np.asarray(self.betas, dtype=float)
        if g.shape != (self.p,) or b.shape != (self.p,):
            raise DimensionMismatchError("angle vectors must have length p")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "betas", b)


def ramp_positions(p: int) -> np.ndarray:
    """The schedule abscissae x_j = (j - 1/2) / p for j = 1..p."""
    return (np.arange(1, p + 1) - 0.5) / p


def build_schedule(delta_gamma: float, delta_beta: float, p: int) -> LinearRampSchedule:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if delta_gamma <= 0 or delta_beta <= 0:
        raise ValueError("angle scales must be positive")
    x = ramp_positions(p)
    return LinearRampSchedule(
        delta_gamma=float(delta_gamma),
        delta_beta=float(delta_beta),
        p=int(p),
        gammas=delta_gamma * x,
        betas=delta_beta * (1.0 - x),
    )


@dataclass(frozen=True)
class Statevector:
    """2^n complex amplitudes, index little-endian in the variables."""

    amplitudes: np.ndarray
    n: int

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n,):
            raise DimensionMismatchError(
                f"amplitude count {amps.shape} does not match n={self.n}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True)
class SuccessProbability:
    p_opt: float
    optima_count: int


def _apply_mixer_layer(psi: np.ndarray, beta, n: int) -> np.ndarray:
    """exp(+i beta X) on every qubit; psi may carry a leading batch axis.

    ``beta`` is a scalar, or a length-batch array for batched psi.
    """
    lead = psi.shape[:-1]
    dim = psi.shape[-1]
    c = np.cos(beta)
    s = 1j * np.sin(beta)
    if lead:
        c = np.asarray(c).reshape(lead + (1, 1))
        s = np.asarray(s).reshape(lead + (1, 1))
    for q in range(n):
        view = psi.reshape(lead + (dim >> (q + 1), 2, 1 << q))
        a = view[..., 0, :].copy()
        b = view[..., 1, :]
        view[..., 0, :] = c * a + s * b
        view[..., 1, :] = s * a + c * b
        psi = view.reshape(lead + (dim,))
    return psi


def _evolve(
    psi: np.ndarray, costs: np.ndarray, gammas: np.ndarray, betas: np.ndarray, n: int
) -> np.ndarray:
    """Shared layer loop for single and batched simulation.

    For the batched case psi has shape (batch, 2^n) and gammas/betas have
    shape (batch, p); angles then differ per batch element but share p.
    """
    batched = psi.ndim == 2
    p = gammas.shape[-1]
    for j in range(p):
        if batched:
            psi = psi * np.exp(-1j * gammas[:, j, None] * costs[None, :])
            psi = _apply_mixer_layer(psi, betas[:, j], n)
        else:
            psi = psi * np.exp(-1j * gammas[j] * costs)
            psi = _apply_mixer_layer(psi, betas[j], n)
    return psi


def simulate(
    instance: QuboInstance,
    schedule: LinearRampSchedule,
    limit: int = DEFAULT_SIMULATOR_LIMIT,
    cost_values: np.ndarray | None = None,
) -> Statevector:
    """Apply the p alternating cost/mixer layers to the uniform start state.

    ``cost_values`` lets callers reuse the per-instance objective table across
    many schedules (the grid-search hot path).
    """
    n = instance.n
    if n > limit:
        raise ProblemTooLargeError(f"n={n} exceeds simulator limit {limit}")
    costs = cost_table(instance) if cost_values is None else cost_values
    if costs.shape != (1 << n,):
        raise DimensionMismatchError("cost table size does not match instance")
    psi = np.full(1 << n, 1.0 / np.sqrt(1 << n), dtype=complex)
    psi = _evolve(psi, costs, schedule.gammas, schedule.betas, n)
    return Statevector(amplitudes=psi, n=n)


def simulate_batch(
    instance: QuboInstance,
    delta_gammas: np.ndarray,
    delta_betas: np.ndarray,
    p: int,
    limit: int = DEFAULT_SIMULATOR_LIMIT,
    cost_values: np.ndarray | None = None,
) -> np.ndarray:
    """Simulate many (delta_gamma, delta_beta) pairs at one depth at once.

    Returns an (batch, 2^n) amplitude array; row b equals
    simulate(instance, build_schedule(delta_gammas[b], delta_betas[b], p)).
    The batching removes per-gate Python overhead in grid searches.
    """
    n = instance.n
    if n > limit:
        raise ProblemTooLargeError(f"n={n} exceeds simulator limit {limit}")
    dg = np.asarray(delta_gammas, dtype=float)
    db = np.asarray(delta_betas, dtype=float)
    if dg.shape != db.shape or dg.ndim != 1:
        raise DimensionMismatchError("delta_gammas/delta_betas must be equal-length 1-D")
    costs = cost_table(instance) if cost_values is None else cost_values
    x = ramp_positions(p)
    gammas = dg[:, None] * x[None, :]
    betas = db[:, None] * (1.0 - x)[None, :]
    psi = np.full((dg.size, 1 << n), 1.0 / np.sqrt(1 << n), dtype=complex)
    return _evolve(psi, costs, gammas, betas, n)


def success_probability(
    state: Statevector, optima: BruteForceResult
) -> SuccessProbability:
    """Total probability of measuring any optimal bitstring.

    Sums |<z|psi>|^2 over the full degenerate optimum set; degenerate optima
    are unavoidable for MaxCut-type instances, so the count is reported.
    """
    indices = [bits_to_index(bits) for bits in optima.optimal_bitstrings]
    if indices and max(indices) >= state.amplitudes.size:
        raise DimensionMismatchError(
            "optimum bitstrings exceed the statevector dimension"
        )
    if any(len(bits) != state.n for bits in optima.optimal_bitstrings):
        raise DimensionMismatchError("optimum bit length does not match state size")
    p_opt = float(np.sum(np.abs(state.amplitudes[indices]) ** 2))
    return SuccessProbability(p_opt=p_opt, optima_count=len(indices))
