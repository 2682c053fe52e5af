"""Shared task plumbing: samples, data-module protocol, oracle traces."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from algomem.genome import ArchitectureConfig


@dataclass
class TaskSample:
    """One problem instance, fully determined by (task, variant, level, seed)."""

    task: str
    variant: str
    level: int
    seed: int
    t_max: int
    payload: dict = field(default_factory=dict)


@dataclass
class OracleTrace:
    """Expected (data readout, operation) per step for one sample."""

    reads: np.ndarray  # (T, h_r * D)
    ops: np.ndarray  # (T,)

    def __len__(self):
        return len(self.ops)

    def steps(self):
        return zip(self.reads, self.ops)


class DataModule:
    """Task specific input/ALU pair; stateful, one instance per episode.

    ``input_step`` returns ``(d_i, c_ctrl, c_mem, c_bus)`` or ``None`` to
    halt; ``alu`` maps the memory data readout and the chosen operation
    index to ``(d_out, c_a)``.
    """

    config: ArchitectureConfig

    def input_step(self, d_out_prev):
        raise NotImplementedError

    def alu(self, d_m, op):
        raise NotImplementedError


class Task:
    """Generator, data modules and oracle for one algorithm."""

    name: str
    variants: tuple = ("binary",)
    default_variant: str = "binary"

    def config(self, variant=None) -> ArchitectureConfig:
        """Cached per variant; episode evaluation calls this constantly."""
        variant = self._variant(variant)
        try:
            cache = self._config_cache
        except AttributeError:
            cache = self._config_cache = {}
        if variant not in cache:
            cache[variant] = self._build_config(variant)
        return cache[variant]

    def _build_config(self, variant: str) -> ArchitectureConfig:
        raise NotImplementedError

    def generate(self, level: int, seed: int, variant=None) -> TaskSample:
        raise NotImplementedError

    def make_module(self, sample: TaskSample) -> DataModule:
        raise NotImplementedError

    def oracle_steps(self, sample: TaskSample):
        """Yield (expected data readout, expected operation) per step."""
        raise NotImplementedError

    def oracle_trace(self, sample: TaskSample) -> OracleTrace:
        reads, ops = [], []
        for r, op in self.oracle_steps(sample):
            reads.append(r)
            ops.append(op)
        return OracleTrace(reads=np.array(reads), ops=np.array(ops, dtype=np.int64))

    # -- helpers -----------------------------------------------------------

    def _variant(self, variant):
        variant = variant or self.default_variant
        if variant not in self.variants:
            raise ValueError(f"task {self.name!r} has no variant {variant!r}")
        return variant

    def rng(self, level: int, seed: int, variant: str, salt: int = 0) -> np.random.Generator:
        from algomem.tasks import TASK_IDS

        vid = self.variants.index(variant)
        return np.random.default_rng([TASK_IDS[self.name], vid, level, seed, salt])


def onehot(index: int, width: int) -> np.ndarray:
    v = np.zeros(width)
    v[index] = 1.0
    return v


def flags(*values) -> np.ndarray:
    return np.array(values, dtype=np.float64)
