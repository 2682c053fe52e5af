"""Evolutionary training loop with curriculum, restarts and checkpoints.

One iteration scores the current genome on a fresh minibatch.  Perfect
iterations (every sample at maximum fitness) skip the expensive
population evaluation and leave the genome untouched; otherwise the
population is sampled, evaluated on the same minibatch and the genome
updated.  All randomness flows through a single generator whose state
is checkpointed, so interrupted runs resume bit-exactly.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from algomem.curriculum import (BATCH_SIZE, BadMemories, CurriculumState,
                                compose_minibatch, curriculum_advance)
from algomem.fitness import (MAX_FITNESS, evaluate_batch, make_samples,
                             make_tables)
from algomem.genome import ablated, genome_size, init_genome
from algomem.nes import NesConfig, nes_update, sample_perturbations
from algomem.tasks import get_task

MAX_ITERATIONS = 20000
RESTART_ITERATIONS = 2000
CHECKPOINT_VERSION = 1

METRICS_FIELDS = ["iteration", "level", "best_fitness", "mean_fitness",
                  "learning_triggered", "restarts"]


@dataclass
class TrainConfig:
    task: str
    variant: str = ""
    seed: int = 0
    batch: int = BATCH_SIZE
    max_iterations: int = MAX_ITERATIONS
    restart_iterations: int = RESTART_ITERATIONS
    m_max: float = 0.1
    init_scale: float = 0.1
    ablation: str = ""  # "", "no-ancestry" or "no-prev-update"
    workers: int = 1
    checkpoint_every: int = 500


def _worker_eval(args):
    theta, config, task_name, variant, pairs, m_max = args
    task = get_task(task_name)
    samples = make_samples(task, pairs, variant)
    return evaluate_batch(theta, config, task, samples, m_max)


class Trainer:
    def __init__(self, cfg: TrainConfig, nes: NesConfig = NesConfig(),
                 out_dir: str = "runs"):
        self.cfg = cfg
        self.nes = nes
        self.out_dir = out_dir
        self.task = get_task(cfg.task)
        self.variant = cfg.variant or self.task.default_variant
        arch = self.task.config(self.variant)
        if cfg.ablation == "no-ancestry":
            arch = ablated(arch, ancestry=False)
        elif cfg.ablation == "no-prev-update":
            arch = ablated(arch, prev_update=False)
        elif cfg.ablation:
            raise ValueError(f"unknown ablation {cfg.ablation!r}")
        self.arch = arch
        self.rng = np.random.default_rng(cfg.seed)
        self.theta = init_genome(arch, self.rng, cfg.init_scale)
        self.state = CurriculumState()
        self.bad = BadMemories()
        self.iteration = 0
        self.restarts = 0
        self.learning_iterations = 0
        self.stuck = 0
        self.best_level_fitness = -np.inf
        os.makedirs(out_dir, exist_ok=True)
        self.metrics_path = os.path.join(out_dir, "metrics.csv")
        self.timings_path = os.path.join(out_dir, "timings.csv")
        self.checkpoint_path = os.path.join(out_dir, "checkpoint.json")
        self._metrics_file = None
        self._pool = None

    # -- persistence -------------------------------------------------------

    def save_checkpoint(self, path=None):
        data = {
            "version": CHECKPOINT_VERSION,
            "train_config": asdict(self.cfg),
            "nes_config": asdict(self.nes),
            "task": self.cfg.task,
            "variant": self.variant,
            "theta": self.theta.tolist(),
            "rng_state": self.rng.bit_generator.state,
            "curriculum": asdict(self.state),
            "bad_memories": self.bad.dump(),
            "iteration": self.iteration,
            "restarts": self.restarts,
            "learning_iterations": self.learning_iterations,
            "stuck": self.stuck,
            "best_level_fitness": self.best_level_fitness,
        }
        path = path or self.checkpoint_path
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(data, fh)
        os.replace(tmp, path)

    @classmethod
    def load_checkpoint(cls, path, out_dir=None):
        with open(path) as fh:
            data = json.load(fh)
        if data.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {data.get('version')!r}")
        cfg = TrainConfig(**data["train_config"])
        nes = NesConfig(**data["nes_config"])
        trainer = cls(cfg, nes, out_dir or os.path.dirname(path) or ".")
        trainer.theta = np.array(data["theta"])
        trainer.rng.bit_generator.state = data["rng_state"]
        trainer.state = CurriculumState(**data["curriculum"])
        trainer.bad.load(data["bad_memories"])
        trainer.iteration = data["iteration"]
        trainer.restarts = data["restarts"]
        trainer.learning_iterations = data["learning_iterations"]
        trainer.stuck = data["stuck"]
        trainer.best_level_fitness = data["best_level_fitness"]
        return trainer

    # -- evaluation --------------------------------------------------------

    def _eval(self, theta, samples, tables=None):
        return evaluate_batch(theta, self.arch, self.task, samples,
                              self.cfg.m_max, tables)

    def _eval_population(self, thetas, pairs, samples, tables=None):
        if self.cfg.workers > 1:
            if self._pool is None:
                self._pool = ProcessPoolExecutor(self.cfg.workers)
            args = [(t, self.arch, self.cfg.task, self.variant, pairs, self.cfg.m_max)
                    for t in thetas]
            return list(self._pool.map(_worker_eval, args))
        return [self._eval(t, samples, tables) for t in thetas]

    def _record_mistakes(self, pairs, result):
        for (level, seed), f in zip(pairs, result.per_sample):
            if f < MAX_FITNESS:
                self.bad.record(level, seed)

    # -- main loop ---------------------------------------------------------

    def _restart(self):
        self.restarts += 1
        self.theta = init_genome(self.arch, self.rng, self.cfg.init_scale)
        self.state = CurriculumState()
        self.bad.clear()
        self.stuck = 0
        self.best_level_fitness = -np.inf

    def step(self):
        """One training iteration; returns the metrics row."""
        self.iteration += 1
        pairs = compose_minibatch(self.state, self.bad, self.rng, self.cfg.batch)
        samples = make_samples(self.task, pairs, self.variant)
        tables = make_tables(self.task, samples, self.arch)
        center = self._eval(self.theta, samples, tables)
        self._record_mistakes(pairs, center)
        learning = not center.perfect
        best = mean = center.mean
        if learning:
            self.learning_iterations += 1
            eps = sample_perturbations(self.rng, self.nes.population, len(self.theta))
            results = self._eval_population(
                [self.theta + self.nes.sigma * e for e in eps], pairs, samples,
                tables)
            for r in results:
                self._record_mistakes(pairs, r)
            fitnesses = np.array([r.mean for r in results])
            self.theta = nes_update(self.theta, eps, fitnesses, self.nes)
            best = max(best, float(fitnesses.max()))
            mean = float(np.mean(np.append(fitnesses, center.mean)))
            if center.mean > self.best_level_fitness:
                self.best_level_fitness = center.mean
                self.stuck = 0
            else:
                self.stuck += 1
        else:
            self.stuck = 0
        if self.stuck >= self.cfg.restart_iterations:
            self._restart()
        elif curriculum_advance(self.state, not learning, learning):
            self.best_level_fitness = -np.inf
            self.stuck = 0
        return {
            "iteration": self.iteration,
            "level": self.state.level,
            "best_fitness": f"{best:.12g}",
            "mean_fitness": f"{mean:.12g}",
            "learning_triggered": int(learning),
            "restarts": self.restarts,
        }

    def run(self, max_iterations=None, metrics=True):
        limit = max_iterations or self.cfg.max_iterations
        metrics_fh = timings_fh = None
        writer = twriter = None
        if metrics:
            fresh = self.iteration == 0
            metrics_fh = open(self.metrics_path, "a" if not fresh else "w", newline="")
            writer = csv.DictWriter(metrics_fh, METRICS_FIELDS)
            timings_fh = open(self.timings_path, "a" if not fresh else "w", newline="")
            twriter = csv.writer(timings_fh)
            if fresh:
                writer.writeheader()
                twriter.writerow(["iteration", "wall_ms"])
        try:
            level = self.state.level
            while self.iteration < limit and not self.state.completed:
                t0 = time.perf_counter()
                row = self.step()
                if metrics:
                    writer.writerow(row)
                    twriter.writerow([row["iteration"],
                                      f"{(time.perf_counter() - t0) * 1e3:.3f}"])
                if self.state.level != level:
                    level = self.state.level
                    self.save_checkpoint()
                if self.iteration % self.cfg.checkpoint_every == 0:
                    if metrics:
                        metrics_fh.flush()
                        timings_fh.flush()
                    self.save_checkpoint()
            self.save_checkpoint()
        finally:
            if metrics_fh:
                metrics_fh.close()
                timings_fh.close()
            if self._pool is not None:
                self._pool.shutdown()
                self._pool = None
        return self.state.completed


def train(cfg: TrainConfig, nes: NesConfig = NesConfig(), out_dir: str = "runs"):
    trainer = Trainer(cfg, nes, out_dir)
    solved = trainer.run()
    return trainer, solved
