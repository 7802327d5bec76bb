"""Small shared helpers: RNG coercion and dB conversions."""

from __future__ import annotations

import numpy as np


def as_rng(seed) -> np.random.Generator:
    """Return a numpy Generator; ints seed a fresh one, Generators pass through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric unit-variance complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
