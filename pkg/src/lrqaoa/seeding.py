"""Deterministic counter-based RNG derivation.

Every random draw in the pipeline uses a generator derived from the master
seed plus a fixed tuple of integer keys (size, instance index, purpose code,
...).  Streams therefore never depend on how many other draws happened, so
adding instances or sizes does not perturb earlier results.
"""
from __future__ import annotations

import numpy as np

# Purpose codes for derived streams.
PURPOSE_INSTANCE = 1
PURPOSE_SUBSAMPLE = 2
PURPOSE_ANNEALING = 3
PURPOSE_FIT = 4
PURPOSE_DATASET = 5


def derive_seed(master_seed: int, *keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), *[int(k) for k in keys]])


def derive_rng(master_seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *keys))
