"""Natural evolution strategy with rank-based fitness shaping.

Population fitnesses are mapped to fixed utilities by rank, the update
is the utility-weighted sum of the raw perturbations, and the new mean
is shrunk by a weight-decay factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NesConfig:
    population: int = 20
    sigma: float = 0.1
    alpha: float = 0.01
    decay: float = 0.9995


def rank_utilities(population: int) -> np.ndarray:
    """Utility for ranks 1 (best) through P; sums to zero."""
    ranks = np.arange(1, population + 1)
    u = np.maximum(0.0, np.log(population / 2.0 + 1.0) - np.log(ranks))
    return u / u.sum() - 1.0 / population


def sample_perturbations(rng: np.random.Generator, population: int, dim: int) -> np.ndarray:
    return rng.standard_normal((population, dim))


def nes_update(theta: np.ndarray, eps: np.ndarray, fitnesses: np.ndarray,
               cfg: NesConfig) -> np.ndarray:
    """One parameter update from evaluated perturbations.

    Ties rank in sampling order (stable sort), so results do not depend
    on floating-point identical fitnesses being reordered.
    """
    p = cfg.population
    order = np.argsort(-np.asarray(fitnesses), kind="stable")
    utilities = np.empty(p)
    utilities[order] = rank_utilities(p)
    grad = utilities @ eps
    return cfg.decay * (theta + cfg.alpha / (p * cfg.sigma) * grad)
