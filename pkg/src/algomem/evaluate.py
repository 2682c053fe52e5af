"""Generalization and transfer evaluation of frozen genomes.

A sample counts as solved only at maximum fitness: every step, every
bit correct, full operation margin.  Transfer swaps the data module
variant under an unchanged genome; the architecture check refuses any
variant that would alter the control interface or operation count.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from algomem.fitness import MAX_FITNESS, sample_fitness
from algomem.genome import ablated
from algomem.network import Network
from algomem.tasks import get_task

EVAL_SEED_BASE = 10 ** 6  # disjoint from training seeds by convention


@dataclass
class Checkpoint:
    task: str
    variant: str
    theta: np.ndarray
    ablation: str = ""

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        return cls(task=data["task"], variant=data["variant"],
                   theta=np.array(data["theta"]),
                   ablation=data.get("train_config", {}).get("ablation", ""))

    def arch(self, variant=None):
        cfg = get_task(self.task).config(variant or self.variant)
        if self.ablation == "no-ancestry":
            cfg = ablated(cfg, ancestry=False)
        elif self.ablation == "no-prev-update":
            cfg = ablated(cfg, prev_update=False)
        return cfg


@dataclass
class LevelReport:
    level: int
    solved: int
    total: int
    generator_errors: int = 0

    @property
    def percent(self):
        return 100.0 * self.solved / self.total if self.total else 0.0


@dataclass
class EvalReport:
    task: str
    variant: str
    levels: list = field(default_factory=list)

    @property
    def all_solved(self):
        return all(l.solved == l.total for l in self.levels)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["task", "variant", "level", "solved", "total",
                        "percent", "generator_errors"])
            for l in self.levels:
                w.writerow([self.task, self.variant, l.level, l.solved,
                            l.total, f"{l.percent:.2f}", l.generator_errors])

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump({
                "task": self.task,
                "variant": self.variant,
                "all_solved": self.all_solved,
                "levels": [vars(l) for l in self.levels],
            }, fh, indent=2)


def build_manifest(task, variant, levels, count, seed_base=EVAL_SEED_BASE):
    """Deterministic sample list: (task, variant, level, seed) quadruples."""
    return [(task, variant, level, seed_base + k)
            for level in levels for k in range(count)]


def _check_transfer(base, target):
    """Transfer may change the data representation, nothing else."""
    if replace(base, data_word=target.data_word) != target:
        raise ValueError(
            "transfer variant changes the control interface, not just the "
            "data representation; refusing to run")


def evaluate_manifest(checkpoint: Checkpoint, manifest, m_max=0.1,
                      variant=None) -> EvalReport:
    variant = variant or checkpoint.variant
    task = get_task(checkpoint.task)
    arch = checkpoint.arch(variant)
    _check_transfer(checkpoint.arch(), arch)
    net = Network(checkpoint.theta, arch)
    by_level = {}
    for task_name, var, level, seed in manifest:
        if task_name != checkpoint.task or var != variant:
            raise ValueError("manifest entry does not match checkpoint task")
        rep = by_level.setdefault(level, LevelReport(level, 0, 0))
        try:
            sample = task.generate(level, seed, variant)
        except RuntimeError:
            rep.generator_errors += 1
            continue
        rep.total += 1
        if sample_fitness(net, task, sample, m_max) == MAX_FITNESS:
            rep.solved += 1
    report = EvalReport(checkpoint.task, variant)
    report.levels = [by_level[k] for k in sorted(by_level)]
    return report


def evaluate_generalization(checkpoint: Checkpoint, levels=(100, 500, 1000),
                            count=50, m_max=0.1) -> EvalReport:
    manifest = build_manifest(checkpoint.task, checkpoint.variant, levels, count)
    return evaluate_manifest(checkpoint, manifest, m_max)


def run_transfer(checkpoint: Checkpoint, variant, levels=tuple(range(1, 12)),
                 count=32, m_max=0.1) -> EvalReport:
    """Replay the curriculum under a new data representation."""
    manifest = build_manifest(checkpoint.task, variant, levels, count)
    return evaluate_manifest(checkpoint, manifest, m_max, variant=variant)
