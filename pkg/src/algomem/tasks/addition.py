"""Addition of two numbers presented digit-wise in big-endian order.

Both numbers carry an extra leading zero so the final carry always has
room.  The ALU adds two read digits, either without (A) or with (C) an
incoming carry, and reports the produced carry on its control output.
"""

from __future__ import annotations

import numpy as np

from algomem.genome import ArchitectureConfig
from algomem.tasks.base import DataModule, Task, TaskSample, flags, onehot

OP_A = 0
OP_C = 1
OP_N = 2


def _encode(digit, variant):
    if variant == "decimal":
        return onehot(int(digit), 10)
    return np.array([float(digit)])


class _AdditionModule(DataModule):
    def __init__(self, config, a, b, variant):
        self.config = config
        self.a = a
        self.b = b
        self.variant = variant
        self.base = 10 if variant == "decimal" else 2
        self.t = 0
        self.sum_steps = 0
        self._zero = np.zeros(config.data_word)

    def input_step(self, d_out_prev):
        self.t += 1
        t, t_l = self.t, len(self.a)
        if t <= t_l:
            return _encode(self.a[t - 1], self.variant), *([flags(1.0, 0.0, 0.0)] * 3)
        if t <= 2 * t_l:
            return _encode(self.b[t - t_l - 1], self.variant), *([flags(0.0, 1.0, 0.0)] * 3)
        if self.sum_steps >= t_l:
            return None
        self.sum_steps += 1
        return self._zero, *([flags(0.0, 0.0, 1.0)] * 3)

    def _digit(self, word):
        if self.variant == "decimal":
            return int(np.argmax(word))
        return int(word[0])

    def alu(self, d_m, op):
        d = self.config.data_word
        if op == OP_N:
            return d_m[:d].copy(), flags(0.0, 1.0, 1.0)
        total = self._digit(d_m[:d]) + self._digit(d_m[d:]) + (1 if op == OP_C else 0)
        carry = 1.0 if total >= self.base else 0.0
        return _encode(total % self.base, self.variant), flags(carry, 1.0 - carry, 0.0)


class AdditionTask(Task):
    name = "addition"
    variants = ("binary", "decimal")
    default_variant = "binary"

    def _build_config(self, variant):
        variant = self._variant(variant)
        return ArchitectureConfig(
            data_word=10 if variant == "decimal" else 1,
            bus_width=3,
            num_read_heads=2,
            ctrl_in_width=3,
            mem_in_width=3,
            bus_in_width=3,
            alu_ctrl_width=3,
            feedback_alu=True,
        )

    def generate(self, level, seed, variant=None):
        variant = self._variant(variant)
        rng = self.rng(level, seed, variant)
        base = 10 if variant == "decimal" else 2
        # leading zero, then `level` random digits, big-endian
        a = np.concatenate([[0], rng.integers(0, base, level)])
        b = np.concatenate([[0], rng.integers(0, base, level)])
        return TaskSample(self.name, variant, level, seed, 3 * (level + 1),
                          {"a": a, "b": b})

    def make_module(self, sample):
        return _AdditionModule(self.config(sample.variant),
                               sample.payload["a"], sample.payload["b"], sample.variant)

    def oracle_steps(self, sample):
        a, b = sample.payload["a"], sample.payload["b"]
        variant = sample.variant
        base = 10 if variant == "decimal" else 2
        t_l = len(a)
        # presentation of a: both heads follow the writes
        for t in range(t_l):
            w = _encode(a[t], variant)
            yield np.concatenate([w, w]), OP_N
        # presentation of b: head 1 parks on a's least significant digit
        parked = _encode(a[t_l - 1], variant)
        for t in range(t_l):
            yield np.concatenate([parked, _encode(b[t], variant)]), OP_N
        # addition, least significant digit first, ripple carry
        carry = 0
        for k in range(t_l - 1, -1, -1):
            yield np.concatenate([_encode(a[k], variant), _encode(b[k], variant)]), \
                (OP_C if carry else OP_A)
            carry = 1 if int(a[k]) + int(b[k]) + carry >= base else 0
