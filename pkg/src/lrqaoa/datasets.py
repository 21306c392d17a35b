"""Dataset generation and CSV ingestion for the three use cases.

CSV formats (all floats as full-precision decimal text):
  * Portfolio: header row of asset names; row 1 = annualized returns;
    rows 2..n+1 = covariance matrix.
  * Features: header row of column names; target column named explicitly or
    taken as the last column; remaining columns are numeric features.
"""
from __future__ import annotations

import csv
import warnings
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataAsymmetryError, DataDimensionError, DataFormatError
from .qubo import ClusterData, FeatureData, PortfolioData
from .seeding import derive_rng, PURPOSE_DATASET


def generate_moons(n_points: int, noise: float, rng_seed) -> ClusterData:
    """Two interleaved half-circles with isotropic Gaussian noise.

    The first ceil(n/2) points lie on the upper arc (cos t, sin t), the rest
    on the lower arc (1 - cos t, 1/2 - sin t), t evenly spaced in [0, pi].
    """
    if n_points < 2:
        raise ValueError(f"need at least 2 points, got {n_points}")
    n_upper = (n_points + 1) // 2
    n_lower = n_points - n_upper
    t_up = np.linspace(0.0, np.pi, n_upper)
    t_lo = np.linspace(0.0, np.pi, max(n_lower, 1))[:n_lower]
    upper = np.column_stack([np.cos(t_up), np.sin(t_up)])
    lower = np.column_stack([1.0 - np.cos(t_lo), 0.5 - np.sin(t_lo)])
    points = np.vstack([upper, lower])
    if noise > 0:
        rng = np.random.default_rng(rng_seed)
        points = points + rng.normal(0.0, noise, size=points.shape)
    return ClusterData.from_points(points)


def generate_blobs(
    n_points: int,
    centers: Sequence[Sequence[float]],
    spread: float,
    rng_seed,
) -> ClusterData:
    """Isotropic Gaussian blobs; points assigned round-robin across centers."""
    ctrs = np.asarray(centers, dtype=float)
    if ctrs.ndim != 2 or ctrs.shape[1] != 2 or ctrs.shape[0] < 1:
        raise ValueError("centers must be a non-empty list of 2-D points")
    rng = np.random.default_rng(rng_seed)
    assignments = np.arange(n_points) % ctrs.shape[0]
    points = ctrs[assignments]
    if spread > 0:
        points = points + rng.normal(0.0, spread, size=points.shape)
    return ClusterData.from_points(points)


def _parse_float(text: str, row: int, col: int) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise DataFormatError(
            f"non-numeric value {text!r} at row {row}, column {col}"
        ) from exc


def ingest_portfolio_csv(path, q_risk: float = 1.0) -> PortfolioData:
    """Parse returns vector and covariance matrix from the documented layout."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DataFormatError(f"{path}: expected header, returns and covariance rows")
    names = [c.strip() for c in rows[0]]
    n = len(names)
    if len(rows) != n + 2:
        raise DataDimensionError(
            f"{path}: expected {n + 2} rows for {n} assets, found {len(rows)}"
        )
    if len(rows[1]) != n:
        raise DataDimensionError(
            f"{path}: returns row has {len(rows[1])} entries, expected {n}"
        )
    mu = np.array([_parse_float(v, 1, j) for j, v in enumerate(rows[1])])
    sigma = np.empty((n, n))
    for i, row in enumerate(rows[2:]):
        if len(row) != n:
            raise DataDimensionError(
                f"{path}: covariance row {i + 2} has {len(row)} entries, expected {n}"
            )
        sigma[i] = [_parse_float(v, i + 2, j) for j, v in enumerate(row)]
    if np.max(np.abs(sigma - sigma.T)) > 1e-9:
        raise DataAsymmetryError(f"{path}: covariance asymmetric beyond 1e-9")
    return PortfolioData(mu=mu, sigma=0.5 * (sigma + sigma.T), q_risk=q_risk)


def export_portfolio_csv(data: PortfolioData, path, names: Optional[Sequence[str]] = None) -> None:
    n = data.n_assets
    if names is None:
        names = [f"asset_{i}" for i in range(n)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        writer.writerow([repr(float(v)) for v in data.mu])
        for row in data.sigma:
            writer.writerow([repr(float(v)) for v in row])


def ingest_feature_csv(
    path, target_column: Optional[str] = None, phi: float = 0.9
) -> FeatureData:
    """Absolute Pearson correlations from a numeric table with a target column.

    Constant columns get correlation 0 with a warning.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3:
        raise DataFormatError(f"{path}: need a header and at least two data rows")
    header = [c.strip() for c in rows[0]]
    if target_column is None:
        target_idx = len(header) - 1
    else:
        if target_column not in header:
            raise DataFormatError(f"{path}: target column {target_column!r} missing")
        target_idx = header.index(target_column)
    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise DataDimensionError(
                f"{path}: row {i + 1} has {len(row)} cells, expected {len(header)}"
            )
        data[i] = [_parse_float(v, i + 1, j) for j, v in enumerate(row)]
    target = data[:, target_idx]
    features = np.delete(data, target_idx, axis=1)
    return feature_data_from_table(features, target, phi=phi)


def feature_data_from_table(
    features: np.ndarray, target: np.ndarray, phi: float = 0.9
) -> FeatureData:
    """Build FeatureData from raw columns via absolute Pearson correlations."""
    features = np.asarray(features, dtype=float)
    target = np.asarray(target, dtype=float)
    n = features.shape[1]
    stds = features.std(axis=0)
    constant = stds == 0
    if np.any(constant) or target.std() == 0:
        warnings.warn("constant column(s) assigned correlation 0", stacklevel=2)
    full = np.corrcoef(np.column_stack([features, target]), rowvar=False)
    full = np.nan_to_num(full, nan=0.0)
    rho_ff = np.abs(full[:n, :n])
    np.fill_diagonal(rho_ff, 0.0)
    rho_fy = np.abs(full[:n, n])
    return FeatureData(rho_ff=rho_ff, rho_fy=rho_fy, phi=phi)


def synthetic_portfolio_universe(
    n_assets: int = 30, master_seed: int = 0, q_risk: float = 1.0
) -> PortfolioData:
    """Random factor-model universe standing in for real market data.

    Covariance from a 5-factor loading matrix plus idiosyncratic variance;
    magnitudes roughly match annualized equity statistics.
    """
    rng = derive_rng(master_seed, PURPOSE_DATASET, 1)
    loadings = rng.normal(0.0, 0.15, size=(n_assets, 5))
    sigma = loadings @ loadings.T + np.diag(rng.uniform(0.01, 0.05, size=n_assets))
    mu = rng.normal(0.08, 0.06, size=n_assets)
    return PortfolioData(mu=mu, sigma=sigma, q_risk=q_risk)


def synthetic_feature_table(
    n_features: int = 48,
    n_rows: int = 1000,
    master_seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Correlated numeric features with a binary target for self-contained runs."""
    rng = derive_rng(master_seed, PURPOSE_DATASET, 2)
    latent = rng.normal(size=(n_rows, max(n_features // 6, 2)))
    mix = rng.normal(0.0, 1.0, size=(latent.shape[1], n_features))
    features = latent @ mix + rng.normal(0.0, 0.8, size=(n_rows, n_features))
    signal = features @ rng.normal(0.0, 1.0, size=n_features)
    target = (signal + rng.normal(0.0, signal.std(), size=n_rows) > 0).astype(float)
    return features, target
