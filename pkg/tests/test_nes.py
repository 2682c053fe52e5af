"""Optimizer update rule and rank shaping."""

import numpy as np
import pytest

from algomem.nes import NesConfig, nes_update, rank_utilities, sample_perturbations
from algomem.selftest import nes_sphere_suite


class TestUtilities:
    def test_sum_to_zero(self):
        for p in (2, 5, 20, 51):
            assert abs(rank_utilities(p).sum()) < 1e-12

    def test_monotone_best_first(self):
        u = rank_utilities(20)
        assert all(a >= b for a, b in zip(u, u[1:]))
        assert u[0] > 0 > u[-1]

    def test_bottom_half_flat(self):
        # ranks past P/2+1 all get the same (negative) utility
        u = rank_utilities(20)
        assert np.allclose(u[11:], u[11])


class TestUpdate:
    CFG = NesConfig(population=4, sigma=0.5, alpha=0.1, decay=1.0)

    def test_moves_toward_better_perturbation(self):
        theta = np.zeros(2)
        eps = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        fit = np.array([1.0, 0.0, 0.5, 0.4])
        new = nes_update(theta, eps, fit, self.CFG)
        assert new[0] > 0  # pulled toward the winning direction

    def test_tie_ranks_in_sampling_order(self):
        theta = np.zeros(1)
        eps = np.array([[1.0], [-1.0]])
        cfg = NesConfig(population=2, sigma=1.0, alpha=1.0, decay=1.0)
        new = nes_update(theta, eps, np.array([0.5, 0.5]), cfg)
        # the first sample wins the tie, so the update follows +1
        assert new[0] > 0

    def test_decay_shrinks(self):
        cfg = NesConfig(population=2, sigma=1.0, alpha=0.0, decay=0.9)
        theta = np.ones(3)
        new = nes_update(theta, np.zeros((2, 3)), np.zeros(2), cfg)
        assert np.allclose(new, 0.9)

    def test_matches_manual_formula(self):
        rng = np.random.default_rng(0)
        cfg = NesConfig(population=6, sigma=0.2, alpha=0.05, decay=0.99)
        theta = rng.normal(size=4)
        eps = sample_perturbations(rng, 6, 4)
        fit = rng.normal(size=6)
        order = np.argsort(-fit, kind="stable")
        util = np.empty(6)
        util[order] = rank_utilities(6)
        expect = cfg.decay * (theta + cfg.alpha / (6 * cfg.sigma) * (util @ eps))
        assert np.allclose(nes_update(theta, eps, fit, cfg), expect, atol=1e-15)


def test_sphere_convergence_two_seeds():
    # quick version; the full 5-seed criterion lives in the acceptance tests
    assert nes_sphere_suite(seeds=(0, 1))
