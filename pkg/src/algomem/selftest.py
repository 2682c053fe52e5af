"""Built-in property suites runnable from the command line.

Each suite checks one subsystem against an independently written
reference: the memory against a linked-list/parent-tree model kept in
plain Python containers, episode scoring against a brute-force trace
scorer, task oracles against direct reference algorithms, and the
optimizer against a convex objective.
"""

from __future__ import annotations

import math
import time

import numpy as np

from algomem.machine import run_episode, score_episode
from algomem.memory import ExternalMemory, InterfaceSignals, mode_layout
from algomem.nes import NesConfig, nes_update, sample_perturbations
from algomem.network import Network
from algomem.genome import init_genome
from algomem.tasks import get_task
from algomem.tasks.sokoban import _World, ACT_U, ACT_R, ACT_D, ACT_L, ACT_N


# -- reference memory model -------------------------------------------------

class ReferenceMemory:
    """Slow but obviously correct memory model (dicts and linked lists)."""

    def __init__(self, n, c_width, d_width, h_w, h_r, ancestry=True):
        self.n = n
        self.h_w = h_w
        self.h_r = h_r
        self.modes = mode_layout(h_r, h_w, ancestry)
        self.control = {k: [0.0] * c_width for k in range(n)}
        self.data = {k: [0.0] * d_width for k in range(n)}
        self.used = set()
        self.order = [[] for _ in range(h_w)]  # write order per head, a list
        self.parents = {(i, j): {} for i in range(h_w) for j in range(h_r)}
        self.birth = {}
        self.prev_read = [None] * h_r
        self.prev_write = [None] * h_w
        self.step = 0

    def _first_free(self):
        for k in range(self.n):
            if k not in self.used:
                return k
        return None

    def update_previous(self, s: InterfaceSignals):
        for j in range(self.h_r):
            loc = self.prev_read[j]
            if not s.prev_gates[j] or loc is None or loc not in self.used:
                continue
            self.control[loc] = [
                v * (1.0 - e) + w
                for v, e, w in zip(self.control[loc], s.prev_erase_vecs[j],
                                   s.prev_write_vecs[j])]

    def write_step(self, s: InterfaceSignals, data_word):
        self.step += 1
        written = []
        for i in range(self.h_w):
            loc = self._first_free()
            if loc is None:
                raise MemoryError("full")
            self.control[loc] = [float(v) for v in s.write_vecs[i]]
            self.data[loc] = [float(v) for v in data_word]
            written.append(loc)
            if s.free_write[i]:
                continue
            self.used.add(loc)
            self.order[i].append(loc)
            for j in range(self.h_r):
                r = self.prev_read[j]
                if r is not None and r in self.used:
                    self.parents[i, j][loc] = r
            self.birth[loc] = self.step
            self.prev_write[i] = loc
        return written

    def _neighbour(self, i, loc, offset):
        chain = self.order[i]
        if loc not in chain:
            return None
        k = chain.index(loc) + offset
        if 0 <= k < len(chain):
            return chain[k]
        return None

    def resolve_read(self, head, mode_index, fallback):
        family, idx = self.modes[mode_index]
        start = self.prev_read[idx if family == "halt" else head]
        if start is None:
            return 0 if self.used else fallback
        if family == "halt":
            return start
        if family == "back":
            link = self._neighbour(idx, start, -1)
        elif family == "fwd":
            link = self._neighbour(idx, start, +1)
        elif family == "parent":
            link = self.parents[idx, head].get(start)
        else:  # newest child, lowest index on equal birth
            link = None
            for c in range(self.n):
                if self.parents[idx, head].get(c) != start:
                    continue
                if link is None or self.birth[c] > self.birth[link]:
                    link = c
        return start if link is None else link

    def read_step(self, locations, free_read):
        c_out = [v for loc in locations for v in self.control[loc]]
        d_out = [v for loc in locations for v in self.data[loc]]
        self.prev_read = [int(l) for l in locations]
        for j, loc in enumerate(locations):
            if free_read[j]:
                self.free_location(int(loc))
        return c_out, d_out

    def free_location(self, loc):
        if loc not in self.used:
            return
        self.used.discard(loc)
        for i in range(self.h_w):
            if loc in self.order[i]:
                k = self.order[i].index(loc)
                if self.prev_write[i] == loc:
                    self.prev_write[i] = self.order[i][k - 1] if k > 0 else None
                self.order[i].remove(loc)
            for j in range(self.h_r):
                grand = self.parents[i, j].pop(loc, None)
                for child, par in list(self.parents[i, j].items()):
                    if par == loc:
                        if grand is None:
                            del self.parents[i, j][child]
                        else:
                            self.parents[i, j][child] = grand
        self.birth.pop(loc, None)


def _random_signals(rng, h_w, h_r, c_width, n_modes, ops):
    """Pre-draw all signals for ``ops`` steps in one batch."""
    write = rng.normal(size=(ops, h_w, c_width))
    prev_write = rng.normal(size=(ops, h_r, c_width))
    prev_erase = rng.uniform(0.05, 0.95, size=(ops, h_r, c_width))
    gates = rng.integers(0, 2, (ops, h_r))
    modes = rng.integers(0, n_modes, (ops, h_r))
    free_w = (rng.random((ops, h_w)) < 0.25).astype(np.int64)
    free_r = (rng.random((ops, h_r)) < 0.25).astype(np.int64)
    return [InterfaceSignals(write[k], prev_write[k], prev_erase[k], gates[k],
                             modes[k], free_w[k], free_r[k]) for k in range(ops)]


def _compare_memories(mem: ExternalMemory, ref: ReferenceMemory):
    assert np.array_equal(mem.mc, [ref.control[k] for k in range(mem.n)]), "control"
    assert np.array_equal(mem.md, [ref.data[k] for k in range(mem.n)]), "data"
    assert set(np.flatnonzero(mem.usage)) == ref.used, "usage"
    for i in range(mem.h_w):
        succ = np.full(mem.n, -1, dtype=np.int64)
        pred = np.full(mem.n, -1, dtype=np.int64)
        chain = ref.order[i]
        for a, b in zip(chain, chain[1:]):
            succ[a] = b
            pred[b] = a
        assert np.array_equal(mem.succ[i], succ), "successor links"
        assert np.array_equal(mem.pred[i], pred), "predecessor links"
        for j in range(mem.h_r):
            parent = np.full(mem.n, -1, dtype=np.int64)
            for child, par in ref.parents[i, j].items():
                parent[child] = par
            assert np.array_equal(mem.parent[i, j], parent), f"parents {(i, j)}"
    assert mem.prev_write == ref.prev_write
    assert mem.prev_read == ref.prev_read


def memory_suite(sequences=1000, ops=200, seed=0):
    """Random op sequences against the reference model; exact equality."""
    rng = np.random.default_rng(seed)
    for s in range(sequences):
        h_w = int(rng.integers(1, 3))
        h_r = int(rng.integers(1, 4))
        ancestry = bool(rng.integers(0, 2))
        n = int(rng.integers(8, 20))
        c_width, d_width = 3, 2
        mem = ExternalMemory(n, c_width, d_width, h_w, h_r, ancestry)
        ref = ReferenceMemory(n, c_width, d_width, h_w, h_r, ancestry)
        n_modes = len(mem.modes)
        sigs = _random_signals(rng, h_w, h_r, c_width, n_modes, ops)
        words = rng.normal(size=(ops, d_width))
        for k, (sig, data_word) in enumerate(zip(sigs, words)):
            mem.update_previous(sig)
            ref.update_previous(sig)
            try:
                w1 = mem.write_step(sig, data_word)
                full1 = False
            except Exception:
                full1 = True
            try:
                w2 = ref.write_step(sig, data_word)
                full2 = False
            except Exception:
                full2 = True
            assert full1 == full2, "allocation disagrees on fullness"
            if full1:
                break
            assert w1 == w2, "allocated locations differ"
            locs1 = [mem.resolve_read(j, int(sig.read_modes[j]), w1[0])
                     for j in range(h_r)]
            locs2 = [ref.resolve_read(j, int(sig.read_modes[j]), w2[0])
                     for j in range(h_r)]
            assert locs1 == locs2, f"read resolution differs {locs1} {locs2}"
            r1 = mem.read_step(locs1, sig.free_read)
            r2 = ref.read_step(locs2, sig.free_read)
            assert np.array_equal(np.concatenate(r1), np.array(r2[0] + r2[1]))
            # allocations, head positions and readouts are exact every
            # op; the cumulative link/usage structures are checked at
            # checkpoints (divergence cannot cancel out in between)
            if (k + 1) % 10 == 0:
                _compare_memories(mem, ref)
        else:
            _compare_memories(mem, ref)
    return True


# -- fitness against a brute-force trace scorer -----------------------------

def _brute_margin(raw, m_max):
    vals = sorted((float(v) for v in raw), reverse=True)
    first, second = vals[0], vals[1]
    if first <= 0.0:
        return 0.0
    if second <= 0.0:
        return 1.0
    return min(1.0, max(0.0, (first / second - 1.0) / m_max))


def _brute_score(trace, oracle, t_max, m_max):
    """Walk the full recorded trace with plain Python math."""
    total = 0.0
    for k, (expected_read, expected_op) in enumerate(oracle):
        if k >= len(trace.ops) or k >= t_max:
            break
        data_ok = list(map(float, trace.reads[k])) == list(map(float, expected_read))
        op_ok = trace.ops[k] == expected_op
        if data_ok:
            total += 1.0
        if op_ok:
            total += _brute_margin(trace.raw_bus[k], m_max)
        if not (data_ok and op_ok):
            break
    return total / t_max


def fitness_suite(traces=10000, seed=0, tol=1e-12):
    """Production fitness (compiled path) and the stepwise reference
    scorer against full-trace brute scoring in plain Python."""
    from algomem.fitness import sample_fitness
    rng = np.random.default_rng(seed)
    names = ["copy", "reverse", "addition", "sort", "arithmetic"]
    for k in range(traces):
        task = get_task(names[int(rng.integers(0, len(names)))])
        level = int(rng.integers(1, 5))
        sample = task.generate(level, int(rng.integers(0, 10000)))
        arch = task.config(sample.variant)
        net = Network(init_genome(arch, rng, scale=float(rng.uniform(0.05, 1.0))), arch)
        m_max = float(rng.uniform(0.05, 0.5))
        fast = sample_fitness(net, task, sample, m_max)
        ref, _ = score_episode(net, task.make_module(sample),
                               task.oracle_steps(sample), sample.t_max, m_max)
        trace = run_episode(net, task.make_module(sample), sample.t_max)
        brute = _brute_score(trace, task.oracle_steps(sample), sample.t_max, m_max)
        assert abs(fast - brute) <= tol, (task.name, level, fast, brute)
        assert abs(ref - brute) <= tol, (task.name, level, ref, brute)
    return True


# -- task oracles -----------------------------------------------------------

def replay_oracle(task, sample):
    """Run the oracle trace through the task's own data module.

    Asserts the module halts exactly when the trace ends and returns the
    per-step ALU outputs and operations (closing-the-loop check).
    """
    module = task.make_module(sample)
    d_out = np.zeros(task.config(sample.variant).data_word)
    outs, ops = [], []
    for d_m, op in task.oracle_steps(sample):
        assert module.input_step(d_out) is not None, "module halted early"
        d_out, _ = module.alu(np.asarray(d_m, dtype=np.float64), int(op))
        outs.append(d_out)
        ops.append(int(op))
    assert module.input_step(d_out) is None, "module failed to halt"
    return outs, ops


def _addition_value(words, variant, base):
    def digit(w):
        return int(np.argmax(w)) if variant == "decimal" else int(w[0])
    return sum(digit(w) * base ** k for k, w in enumerate(words))


def addition_suite(max_bits=8, mutate=False):
    """Exhaustive check of the addition oracle against integer addition."""
    from algomem.tasks.base import TaskSample
    task = get_task("addition")
    for bits in range(1, max_bits + 1):
        for a in range(2 ** bits):
            for b in range(2 ** bits):
                a_digits = [0] + [(a >> (bits - 1 - k)) & 1 for k in range(bits)]
                b_digits = [0] + [(b >> (bits - 1 - k)) & 1 for k in range(bits)]
                sample = TaskSample("addition", "binary", bits, 0, 3 * (bits + 1),
                                    {"a": np.array(a_digits), "b": np.array(b_digits)})
                outs, _ = replay_oracle(task, sample)
                total = _addition_value(outs[2 * (bits + 1):], "binary", 2)
                expect = a + b + (1 if mutate else 0)
                if total != expect:
                    raise AssertionError(f"addition {a}+{b} -> {total}")
    return True


def sort_suite(sequences=10000, seed=0):
    from algomem.tasks.sort import OP_O, _value
    task = get_task("sort")
    rng = np.random.default_rng(seed)
    for k in range(sequences):
        level = int(rng.integers(1, 10))
        sample = task.generate(level, int(rng.integers(0, 10 ** 8)))
        outs, ops = replay_oracle(task, sample)
        n = len(sample.payload["words"])
        got = [_value(o, "binary") for o, op in zip(outs[n:], ops[n:]) if op == OP_O]
        expect = sorted(_value(w, "binary") for w in sample.payload["words"])
        assert got == expect, f"sort mismatch at {k}"
    return True


def arithmetic_suite(expressions=10000, seed=0):
    task = get_task("arithmetic")
    rng = np.random.default_rng(seed)
    for k in range(expressions):
        level = int(rng.integers(1, 11))
        sample = task.generate(level, int(rng.integers(0, 10 ** 8)))
        outs, _ = replay_oracle(task, sample)
        assert float(outs[-1][0]) == float(task.evaluate(sample)), f"expr {k}"
    return True


def search_plan_suite(worlds=1000, seed=0):
    """Plans are executable action sequences from start to goal; search
    produces the goal as its final expansion result."""
    rng = np.random.default_rng(seed)
    names = ["search", "plan", "search-plus", "plan-plus"]
    for k in range(worlds):
        task = get_task(names[k % 4])
        level = int(rng.integers(1, 6))
        sample = task.generate(level, int(rng.integers(0, 10 ** 8)))
        world = _World(sample.variant)
        outs, ops = replay_oracle(task, sample)
        if task.plan:
            path = [world.decode(np.asarray(d_m))
                    for (d_m, op) in task.oracle_steps(sample) if op == ACT_N][::-1]
            assert np.array_equal(path[0], sample.payload["start"])
            assert np.array_equal(path[-1], sample.payload["goal"])
            for a, b in zip(path, path[1:]):
                assert any(np.array_equal(world.step(a, act), b)
                           for act in (ACT_U, ACT_R, ACT_D, ACT_L)), f"gap {k}"
        else:
            assert np.array_equal(world.decode(outs[-1].astype(float)),
                                  sample.payload["goal"]), f"goal {k}"
    return True


# -- optimizer sanity -------------------------------------------------------

def nes_sphere_suite(seeds=(0, 1, 2, 3, 4), dim=10, iterations=2000,
                     target=0.05):
    cfg = NesConfig()
    for seed in seeds:
        rng = np.random.default_rng(seed)
        theta = rng.normal(size=dim)
        ok = False
        for _ in range(iterations):
            eps = sample_perturbations(rng, cfg.population, dim)
            fitnesses = -np.sum((theta + cfg.sigma * eps) ** 2, axis=1)
            theta = nes_update(theta, eps, fitnesses, cfg)
            if math.sqrt(float(theta @ theta)) < target:
                ok = True
                break
        assert ok, f"sphere did not converge for seed {seed}"
    return True


# -- runner -----------------------------------------------------------------

SUITES = {
    "memory": lambda mutate: memory_suite(),
    "fitness": lambda mutate: fitness_suite(traces=2000),
    "addition": lambda mutate: addition_suite(max_bits=6, mutate=mutate),
    "sort": lambda mutate: sort_suite(sequences=1000),
    "arithmetic": lambda mutate: arithmetic_suite(expressions=1000),
    "search-plan": lambda mutate: search_plan_suite(worlds=200),
    "nes": lambda mutate: nes_sphere_suite(),
}


def run_selftest(mutate_addition=False, out=print):
    """Run the reduced property suites; returns True when all pass."""
    all_ok = True
    for name, fn in SUITES.items():
        t0 = time.perf_counter()
        try:
            fn(mutate_addition if name == "addition" else False)
            status = "pass"
        except AssertionError as exc:
            status = f"FAIL ({exc})"
            all_ok = False
        out(f"{name:12s} {status:40s} {time.perf_counter() - t0:7.1f}s")
    return all_ok
