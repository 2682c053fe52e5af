"""Expression evaluation over a postfix token stream.

Tokens arrive one per step; after every operator token the machine gets
one extra step to store the intermediate result (the ALU output is fed
back as the next input word).  Operators are coded as negative numbers
so they can share the single-number data word with the operands.
"""

from __future__ import annotations

import numpy as np

from algomem.genome import ArchitectureConfig
from algomem.tasks.base import DataModule, Task, TaskSample, flags

OP_C = 0
OP_R = 1

MODULUS = 10000

_DECIMAL_OPS = (-1, -2, -3, -4)  # + - * /
_BOOLEAN_OPS = (-1, -2)  # and or


def _apply(code, a, b, variant):
    a, b = int(a), int(b)
    if variant == "boolean":
        return a & b if code == -1 else a | b
    if code == -1:
        r = a + b
    elif code == -2:
        r = a - b
    elif code == -3:
        r = a * b
    else:
        r = a // b if b != 0 else 0
    return r % MODULUS


def _postfix(rng, num_ops, variant):
    """Random expression tree with ``num_ops`` operators, in postfix order."""
    ops = _BOOLEAN_OPS if variant == "boolean" else _DECIMAL_OPS
    if num_ops == 0:
        return [int(rng.integers(0, 2) if variant == "boolean" else rng.integers(1, 11))]
    left = int(rng.integers(0, num_ops))
    code = int(ops[rng.integers(0, len(ops))])
    return (_postfix(rng, left, variant)
            + _postfix(rng, num_ops - 1 - left, variant)
            + [code])


class _ArithmeticModule(DataModule):
    def __init__(self, config, tokens, variant):
        self.config = config
        self.tokens = tokens
        self.variant = variant
        self.cursor = 0
        self.prev_was_value = True  # first step consumes a token
        self.final_shown = False

    def input_step(self, d_out_prev):
        if self.prev_was_value:
            token = self.tokens[self.cursor]
            self.cursor += 1
            if self.cursor == len(self.tokens):
                self.final_shown = True
            value = token >= 0
        else:
            if self.final_shown:
                return None  # the last operator just ran
            token = float(d_out_prev[0])  # intermediate result push
            value = True
        self.prev_was_value = value
        ctrl = flags(float(value), float(not value))
        return np.array([float(token)]), ctrl, ctrl, ctrl

    def alu(self, d_m, op):
        if op == OP_C:
            r = _apply(d_m[0], d_m[1], d_m[2], self.variant)
            return np.array([float(r)]), flags(1.0, 0.0)
        return np.array([d_m[1]]), flags(0.0, 1.0)


class ArithmeticTask(Task):
    name = "arithmetic"
    variants = ("decimal", "boolean")
    default_variant = "decimal"

    def _build_config(self, variant):
        self._variant(variant)
        return ArchitectureConfig(
            data_word=1,
            bus_width=2,
            num_read_heads=3,
            ctrl_in_width=2,
            mem_in_width=2,
            bus_in_width=2,
            alu_ctrl_width=2,
            feedback_alu=True,
            free_gates=True,
        )

    def generate(self, level, seed, variant=None):
        variant = self._variant(variant)
        rng = self.rng(level, seed, variant)
        tokens = _postfix(rng, level, variant)
        return TaskSample(self.name, variant, level, seed, 3 * level,
                          {"tokens": tokens})

    def make_module(self, sample):
        return _ArithmeticModule(self.config(sample.variant),
                                 sample.payload["tokens"], sample.variant)

    def evaluate(self, sample):
        """Reference value of the expression (independent of the oracle)."""
        stack = []
        for tok in sample.payload["tokens"]:
            if tok >= 0:
                stack.append(tok)
            else:
                b, a = stack.pop(), stack.pop()
                stack.append(_apply(tok, a, b, sample.variant))
        return stack[-1]

    def oracle_steps(self, sample):
        variant = sample.variant
        stack = []

        def word(v):
            return float(v)

        def push_read(v):
            # heads 2 and 3 look one and two below the pushed top;
            # missing entries repeat the pushed value
            d2 = stack[-2] if len(stack) >= 2 else v
            d3 = stack[-3] if len(stack) >= 3 else v
            return np.array([word(v), word(d2), word(d3)])

        tokens = sample.payload["tokens"]
        for idx, tok in enumerate(tokens):
            if tok >= 0:
                stack.append(tok)
                yield push_read(tok), OP_R
            else:
                a, b = stack[-2], stack[-1]
                yield np.array([word(tok), word(a), word(b)]), OP_C
                r = _apply(tok, a, b, variant)
                stack = stack[:-2]
                if idx + 1 < len(tokens):
                    stack.append(r)
                    yield push_read(r), OP_R
