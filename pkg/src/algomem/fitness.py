"""Batch fitness evaluation of one genome over curriculum samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from algomem.machine import score_episode
from algomem.network import Network

try:
    from algomem.fastscore import ScoreTable, score_table
    _FAST = True
except ImportError:  # pragma: no cover - numba not installed
    ScoreTable = None
    _FAST = False

MAX_FITNESS = 2.0


@dataclass
class BatchResult:
    mean: float
    per_sample: np.ndarray  # fitness per minibatch entry

    @property
    def perfect(self) -> bool:
        return bool(np.all(self.per_sample == MAX_FITNESS))


def sample_fitness(net: Network, task, sample, m_max: float, table=None) -> float:
    """Fitness of one sample.

    Uses the compiled scorer when available; ``table`` may pass a
    precomputed :class:`~algomem.fastscore.ScoreTable` so repeated
    evaluations of the same sample skip re-tabulating it.
    """
    if _FAST:
        if table is None:
            table = ScoreTable.build(task, sample, net.config)
        return score_table(net, table, m_max)
    module = task.make_module(sample)
    fitness, _ = score_episode(net, module, task.oracle_steps(sample),
                               sample.t_max, m_max)
    return fitness


def make_tables(task, samples, config):
    """Tabulate a minibatch once for evaluation under many genomes."""
    if not _FAST:
        return None
    return [ScoreTable.build(task, s, config) for s in samples]


def evaluate_batch(theta, config, task, samples, m_max: float,
                   tables=None) -> BatchResult:
    net = Network(theta, config)
    if tables is None:
        tables = make_tables(task, samples, config)
    scores = np.empty(len(samples))
    for k, sample in enumerate(samples):
        table = tables[k] if tables is not None else None
        scores[k] = sample_fitness(net, task, sample, m_max, table)
    return BatchResult(mean=float(scores.mean()), per_sample=scores)


def make_samples(task, pairs, variant):
    """Regenerate the minibatch from (level, seed) pairs; bad-memory
    replay therefore only needs to store seeds, not sequences."""
    return [task.generate(level, seed, variant) for level, seed in pairs]
