"""Stable ascending sort of a presented sequence of objects.

The ALU compares the two read objects (C), skips (S) or emits (O) the
first one; its control output reports the comparison outcome.  Objects
are 8-bit binary numbers or decimal digits depending on the variant.
"""

from __future__ import annotations

import numpy as np

from algomem.genome import ArchitectureConfig
from algomem.tasks.base import DataModule, Task, TaskSample, flags, onehot

OP_C = 0
OP_S = 1
OP_O = 2


def _value(word, variant):
    if variant == "decimal":
        return int(np.argmax(word))
    return int(sum(int(b) << k for k, b in enumerate(word)))


class _SortModule(DataModule):
    def __init__(self, config, words, variant):
        self.config = config
        self.words = words
        self.variant = variant
        self.t = 0
        self.emitted = 0
        self._zero = np.zeros(config.data_word)

    def input_step(self, d_out_prev):
        self.t += 1
        n = len(self.words)
        if self.t <= n:
            k = self.t
            ctrl = flags(float(k == 1), float(1 < k < n), float(k == n), 0.0)
            return self.words[k - 1], ctrl, ctrl, ctrl
        if self.emitted >= n:
            return None
        ctrl = flags(0.0, 0.0, 0.0, 1.0)
        return self._zero, ctrl, ctrl, ctrl

    def alu(self, d_m, op):
        d = self.config.data_word
        o1, o2 = d_m[:d], d_m[d:]
        c = 1.0 if _value(o1, self.variant) <= _value(o2, self.variant) else 0.0
        if op == OP_O and self.t > len(self.words):
            self.emitted += 1
        return o1.copy(), flags(c, 1.0 - c, float(op == OP_S), float(op == OP_O))


class SortTask(Task):
    name = "sort"
    variants = ("binary", "decimal")
    default_variant = "binary"

    def _build_config(self, variant):
        variant = self._variant(variant)
        return ArchitectureConfig(
            data_word=10 if variant == "decimal" else 8,
            bus_width=3,
            num_read_heads=2,
            alu_ctrl_width=4,
            feedback_alu=True,
        )

    def generate(self, level, seed, variant=None):
        variant = self._variant(variant)
        rng = self.rng(level, seed, variant)
        n = level + 1
        if variant == "decimal":
            words = np.array([onehot(int(d), 10) for d in rng.integers(0, 10, n)])
        else:
            words = rng.integers(0, 2, (n, 8)).astype(np.float64)
        return TaskSample(self.name, variant, level, seed, n + n * n, {"words": words})

    def make_module(self, sample):
        return _SortModule(self.config(sample.variant), sample.payload["words"],
                           sample.variant)

    def oracle_steps(self, sample):
        words = sample.payload["words"]
        variant = sample.variant
        n = len(words)
        vals = [_value(w, variant) for w in words]
        # presentation: both heads parked at the first object
        for _ in range(n):
            yield np.concatenate([words[0], words[0]]), OP_S
        # n selection passes; head 2 scans, head 1 tracks the running
        # minimum one step behind, the pass ends with an emit at the
        # minimum while head 2 jumps back to the start
        done = [False] * n
        for _ in range(n):
            m = 0
            for j in range(1, n):
                yield np.concatenate([words[m], words[j]]), (OP_S if done[j] else OP_C)
                if not done[j] and (done[m] or vals[j] < vals[m]):
                    m = j
            yield np.concatenate([words[m], words[0]]), OP_O
            done[m] = True
