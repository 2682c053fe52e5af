"""Sequence retrieval tasks: copy, repeat-copy, reverse, duplicated.

No data manipulation happens here; the ALU forwards the read word and
the two operations only mark what the machine is doing (O marks data,
M marks phase boundaries).  The whole difficulty is data management in
the memory.
"""

from __future__ import annotations

import numpy as np

from algomem.genome import ArchitectureConfig
from algomem.tasks.base import DataModule, Task, TaskSample, flags, onehot

OP_O = 0
OP_M = 1


def _objects(rng, count, variant, distinct=False):
    if variant == "decimal":
        if distinct:
            digits = rng.permutation(10)[:count]
        else:
            digits = rng.integers(0, 10, count)
        return np.array([onehot(int(d), 10) for d in digits])
    if distinct:
        codes = rng.choice(64, count, replace=False)
        return np.array([[float((c >> b) & 1) for b in range(6)] for c in codes])
    return rng.integers(0, 2, (count, 6)).astype(np.float64)


class _CopyFamilyModule(DataModule):
    def __init__(self, config, objects, presented, copies, duplicated):
        self.config = config
        self.objects = objects  # distinct objects, in first-occurrence order
        self.presented = presented  # full presentation sequence
        self.copies = copies
        self.duplicated = duplicated
        self.t = 0
        self.marks = 0
        self._zero = np.zeros(config.data_word)
        self._seen = []

    def input_step(self, d_out_prev):
        self.t += 1
        t, t_p = self.t, len(self.presented)
        n = len(self.objects)
        if t <= t_p:
            word = self.presented[t - 1]
            if self.duplicated:
                first = not any(np.array_equal(word, s) for s in self._seen)
                if first:
                    self._seen.append(word)
                ctrl = flags(float(first), float(not first), 0.0)
            else:
                ctrl = flags(float(t == 1), float(1 < t < t_p), float(t == t_p), 0.0)
            return word, ctrl, ctrl, ctrl
        limit = 1 if self.duplicated else self.copies * n
        if self.marks >= limit:
            return None
        ctrl = flags(0.0, 0.0, 1.0) if self.duplicated else flags(0.0, 0.0, 0.0, 1.0)
        return self._zero, ctrl, ctrl, ctrl

    def alu(self, d_m, op):
        if op == OP_M and self.t > len(self.presented):
            self.marks += 1
        return d_m, onehot(op, 2)


class CopyFamilyTask(Task):
    variants = ("binary", "decimal")
    default_variant = "binary"

    def __init__(self, name):
        self.name = name
        self.duplicated = name == "duplicated"

    def _build_config(self, variant):
        variant = self._variant(variant)
        width = 3 if self.duplicated else 4
        return ArchitectureConfig(
            data_word=10 if variant == "decimal" else 6,
            bus_width=2,
            ctrl_in_width=width,
            mem_in_width=width,
            bus_in_width=width,
            alu_ctrl_width=2,
            feedback_bus=True,
            feedback_alu=self.duplicated,
            free_gates=True,
        )

    def generate(self, level, seed, variant=None):
        variant = self._variant(variant)
        rng = self.rng(level, seed, variant)
        if self.name in ("copy", "reverse"):
            objects = _objects(rng, level, variant)
            presented = objects
            copies = 1
            t_max = 2 * level
        elif self.name == "repeat-copy":
            n = int(rng.integers(1, 7))
            objects = _objects(rng, n, variant)
            presented = objects
            copies = level
            t_max = n + copies * n
        else:  # duplicated: each object appears level + 1 times
            n = int(rng.integers(1, 7))
            objects = _objects(rng, n, variant, distinct=True)
            presented = np.repeat(objects, level + 1, axis=0)
            copies = 1
            t_max = len(presented) + n + 1
        return TaskSample(self.name, variant, level, seed, t_max, {
            "objects": objects, "presented": presented, "copies": copies,
        })

    def make_module(self, sample):
        return _CopyFamilyModule(
            self.config(sample.variant),
            sample.payload["objects"],
            sample.payload["presented"],
            sample.payload["copies"],
            self.duplicated,
        )

    def oracle_steps(self, sample):
        objects = sample.payload["objects"]
        presented = sample.payload["presented"]
        n = len(objects)
        if self.duplicated:
            # Read head parks at the first object during presentation;
            # the final M fires on the repeated read past the chain end.
            for _ in range(len(presented)):
                yield objects[0], OP_M
            for k in range(n):
                yield objects[k], OP_O
            yield objects[n - 1], OP_M
            return
        for k in range(n):
            # reverse follows the writes, the others park at the start
            yield (presented[k] if self.name == "reverse" else presented[0]), OP_O
        for _ in range(sample.payload["copies"]):
            for k in range(n):
                idx = n - 1 - k if self.name == "reverse" else k
                yield presented[idx], OP_M
