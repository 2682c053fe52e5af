"""Batch fitness evaluation and its step-level scoring contract."""

import numpy as np
import pytest

from algomem.fitness import (MAX_FITNESS, evaluate_batch, make_samples,
                             sample_fitness)
from algomem.genome import init_genome
from algomem.machine import run_episode, score_episode
from algomem.network import Network
from algomem.selftest import fitness_suite
from algomem.tasks import get_task


def make_net(task, seed=0):
    cfg = task.config()
    return Network(init_genome(cfg, np.random.default_rng(seed)), cfg)


class TestSampleFitness:
    def test_in_range(self):
        task = get_task("copy")
        net = make_net(task)
        for seed in range(5):
            f = sample_fitness(net, task, task.generate(2, seed), 0.1)
            assert 0.0 <= f <= MAX_FITNESS

    def test_zero_when_first_step_wrong(self):
        # drive the bus bias so every step picks a wrong operation; the
        # episode breaks at step one with at most the data point
        task = get_task("copy")
        cfg = task.config()
        theta = np.zeros_like(init_genome(cfg, np.random.default_rng(0)))
        net = Network(theta, cfg)
        sample = task.generate(3, 0)
        f = sample_fitness(net, task, sample, 0.1)
        assert 0.0 <= f <= 2.0 / sample.t_max

    def test_normalized_by_t_max(self):
        task = get_task("copy")
        net = make_net(task, seed=3)
        sample = task.generate(4, 1)
        module = task.make_module(sample)
        total, t_e = score_episode(net, module, task.oracle_steps(sample),
                                   sample.t_max, 0.1)
        assert total * sample.t_max == pytest.approx(
            sample_fitness(net, task, sample, 0.1) * sample.t_max)
        assert 0 <= t_e <= sample.t_max


class TestBatch:
    def test_mean_and_perfect_flag(self):
        task = get_task("copy")
        cfg = task.config()
        theta = init_genome(cfg, np.random.default_rng(0))
        samples = make_samples(task, [(1, s) for s in range(4)], "binary")
        res = evaluate_batch(theta, cfg, task, samples, 0.1)
        assert res.mean == pytest.approx(float(res.per_sample.mean()))
        assert res.perfect == bool(np.all(res.per_sample == MAX_FITNESS))

    def test_make_samples_regenerates_identically(self):
        task = get_task("reverse")
        a = make_samples(task, [(2, 5)], "binary")[0]
        b = task.generate(2, 5, "binary")
        assert np.array_equal(a.payload["objects"], b.payload["objects"])


def test_brute_force_equivalence_fast():
    # reduced version of the acceptance criterion (10^4 traces there)
    fitness_suite(traces=300, seed=11)


def test_score_stops_at_first_fault():
    # fitness must ignore everything after the breaking step even if the
    # machine recovers later
    task = get_task("copy")
    net = make_net(task, seed=1)
    sample = task.generate(5, 2)
    module = task.make_module(sample)
    fitness, t_e = score_episode(net, module, task.oracle_steps(sample),
                                 sample.t_max, 0.1)
    if t_e == 0:
        assert fitness == MAX_FITNESS
    else:
        trace = run_episode(net, task.make_module(sample), sample.t_max)
        expected = list(task.oracle_steps(sample))
        data_ok = np.array_equal(trace.reads[t_e - 1], expected[t_e - 1][0])
        op_ok = len(trace.ops) >= t_e and trace.ops[t_e - 1] == expected[t_e - 1][1]
        assert not (data_ok and op_ok)
