"""Graph search and path planning in grid worlds.

States are whole grids, one-hot encoded per cell.  The ALU is the world
simulator: it applies the chosen move to the read state.  The machine
explores breadth-first by expanding stored states; the planning tasks
additionally walk the ancestry chain back from the goal, emitting an
executable path.  The extended (+) tasks get an action-applicability
mask on the memory control input and only expand applicable moves.
"""

from __future__ import annotations

import numpy as np

from algomem.genome import ArchitectureConfig
from algomem.tasks.base import DataModule, Task, TaskSample, flags

ACT_U = 0
ACT_R = 1
ACT_D = 2
ACT_L = 3
ACT_N = 4

_DIRS = {ACT_U: (-1, 0), ACT_R: (0, 1), ACT_D: (1, 0), ACT_L: (0, -1)}

EMPTY, WALL, BOX, AGENT = 0, 1, 2, 3
_RECODE = (1, 2, 3, 0)  # class -> channel for the recoded variant

_MAX_ATTEMPTS = 10000


class _World:
    """Dynamics plus encoding for one variant."""

    def __init__(self, variant):
        self.variant = variant
        if variant == "sliding-puzzle":
            self.side = 3
            self.classes = 9
        else:
            self.side = 8 if variant == "sokoban-8x8" else 6
            self.classes = 4

    @property
    def data_word(self):
        return self.side * self.side * self.classes

    def sample(self, rng):
        side = self.side
        if self.variant == "sliding-puzzle":
            return rng.permutation(9).reshape(3, 3)
        grid = np.zeros((side, side), dtype=np.int64)
        grid[0, :] = grid[-1, :] = grid[:, 0] = grid[:, -1] = WALL
        inner = [(r, c) for r in range(1, side - 1) for c in range(1, side - 1)]
        n_walls = int(rng.integers(0, 3))
        n_boxes = int(rng.integers(1, 6))
        order = rng.permutation(len(inner))
        for k in order[:n_walls]:
            grid[inner[k]] = WALL
        for k in order[n_walls:n_walls + n_boxes]:
            grid[inner[k]] = BOX
        grid[inner[order[n_walls + n_boxes]]] = AGENT
        return grid

    def step(self, grid, action):
        if action == ACT_N:
            return grid
        dr, dc = _DIRS[action]
        if self.variant == "sliding-puzzle":
            r, c = [int(v[0]) for v in np.where(grid == 0)]
            tr, tc = r + dr, c + dc
            if not (0 <= tr < 3 and 0 <= tc < 3):
                return grid
            out = grid.copy()
            out[r, c], out[tr, tc] = out[tr, tc], out[r, c]
            return out
        r, c = [int(v[0]) for v in np.where(grid == AGENT)]
        tr, tc = r + dr, c + dc
        if grid[tr, tc] == WALL:
            return grid
        out = grid.copy()
        if grid[tr, tc] == BOX:
            br, bc = tr + dr, tc + dc
            if grid[br, bc] != EMPTY:
                return grid
            out[br, bc] = BOX
        out[tr, tc] = AGENT
        out[r, c] = EMPTY
        return out

    def applicable(self, grid):
        """Moves that change the state (the nop never does)."""
        return [a for a in (ACT_U, ACT_R, ACT_D, ACT_L)
                if not np.array_equal(self.step(grid, a), grid)]

    def mask(self, grid):
        app = set(self.applicable(grid))
        return flags(*[1.0 if a in app else 0.0 for a in range(4)], 1.0)

    def encode(self, grid):
        flat = grid.reshape(-1)
        if self.variant == "sokoban-recoded":
            flat = np.array([_RECODE[v] for v in flat])
        out = np.zeros((flat.size, self.classes))
        out[np.arange(flat.size), flat] = 1.0
        return out.reshape(-1)

    def decode(self, word):
        cells = np.argmax(word.reshape(-1, self.classes), axis=1)
        if self.variant == "sokoban-recoded":
            inverse = np.argsort(np.array(_RECODE))
            cells = inverse[cells]
        return cells.reshape(self.side, self.side)


class _SearchModule(DataModule):
    def __init__(self, config, world, start, goal, plan, extended):
        self.config = config
        self.world = world
        self.start = world.encode(start)
        self.goal = world.encode(goal)
        self.plan = plan
        self.extended = extended
        self.t = 0
        self.c2 = 0.0
        self._run_key = None
        self._run_count = 0

    def input_step(self, d_out_prev):
        self.t += 1
        d_i = self.start if self.t == 1 else d_out_prev
        target = self.start if self.c2 else self.goal
        e = 1.0 if np.array_equal(d_i, target) else 0.0
        c1 = max(0.0, (1.0 - e) - self.c2)
        c2 = min(1.0, e + self.c2)
        c3 = (1.0 - e) * c2
        c4 = e * self.c2
        if not self.plan and c2 == 1.0:
            return None
        if self.plan and c4 == 1.0:
            return None
        self.c2 = c2
        ctrl = flags(c1, c2, c3, c4)
        if self.extended:
            c_mem = np.concatenate([self.world.mask(self.world.decode(d_i)), ctrl])
        else:
            c_mem = ctrl
        return d_i, ctrl, c_mem, ctrl

    def alu(self, d_m, op):
        state = self.world.decode(d_m)
        key = d_m.tobytes()
        if key != self._run_key:
            self._run_key = key
            self._run_count = 0
        self._run_count += 1
        avail = len(self.world.applicable(state)) if self.extended else 4
        last = 1.0 if self._run_count >= max(avail, 1) else 0.0
        nop = 1.0 if op == ACT_N else 0.0
        out = state if op == ACT_N else self.world.step(state, op)
        return self.world.encode(out), flags(last, 1.0 - last, nop)


def _expand_tree(world, start, level, extended):
    """Breadth-first expansion of ``level`` nodes in machine write order.

    Returns (states, parents, actions, goal) where ``actions`` is the
    flat list of (expanded node index, action) in application order and
    ``goal`` is the successor of the very last action.  Returns None if
    the run is infeasible or the goal is not novel.
    """
    states = [start]
    keys = {start.tobytes()}
    parents = [-1]
    actions = []
    pending = None
    for k in range(level):
        if k >= len(states):
            return None
        s = states[k]
        acts = world.applicable(s) if extended else [ACT_U, ACT_R, ACT_D, ACT_L]
        if not acts:
            return None
        for a in acts:
            if pending is not None:
                states.append(pending[0])
                parents.append(pending[1])
                keys.add(pending[0].tobytes())
            actions.append((k, a))
            pending = (world.step(s, a), k)
    goal = pending[0]
    if goal.tobytes() in keys:
        return None
    return states, parents, actions, goal


class SearchTask(Task):
    variants = ("sokoban", "sokoban-8x8", "sokoban-recoded", "sliding-puzzle")
    default_variant = "sokoban"

    def __init__(self, name):
        self.name = name
        self.plan = name.startswith("plan")
        self.extended = name.endswith("-plus")

    def _build_config(self, variant):
        variant = self._variant(variant)
        return ArchitectureConfig(
            data_word=_World(variant).data_word,
            bus_width=5,
            mem_in_width=9 if self.extended else 4,
            alu_ctrl_width=3,
            feedback_alu=True,
        )

    def generate(self, level, seed, variant=None):
        variant = self._variant(variant)
        world = _World(variant)
        for attempt in range(_MAX_ATTEMPTS):
            rng = self.rng(level, seed, variant, salt=attempt)
            start = world.sample(rng)
            built = _expand_tree(world, start, level, self.extended)
            if built is None:
                continue
            sample = TaskSample(self.name, variant, level, seed, 0,
                                {"start": start, "goal": built[3]})
            sample.t_max = sum(1 for _ in self.oracle_steps(sample))
            return sample
        raise RuntimeError(
            f"no solvable {self.name} instance at level {level}, seed {seed}")

    def make_module(self, sample):
        world = _World(sample.variant)
        return _SearchModule(self.config(sample.variant), world,
                             sample.payload["start"], sample.payload["goal"],
                             self.plan, self.extended)

    def oracle_steps(self, sample):
        world = _World(sample.variant)
        start, goal = sample.payload["start"], sample.payload["goal"]
        goal_key = goal.tobytes()
        states = [start]
        parents = [-1]
        pending = None
        exp = 0
        acts = iter(world.applicable(start) if self.extended
                    else [ACT_U, ACT_R, ACT_D, ACT_L])
        while True:
            if pending is not None:
                states.append(pending[0])
                parents.append(pending[1])
            a = next(acts, None)
            if a is None:
                exp += 1
                acts = iter(world.applicable(states[exp]) if self.extended
                            else [ACT_U, ACT_R, ACT_D, ACT_L])
                a = next(acts)
            yield world.encode(states[exp]), a
            pending = (world.step(states[exp], a), exp)
            if pending[0].tobytes() == goal_key:
                break
        if not self.plan:
            return
        # goal write step: the head jumps to the newest child of the
        # expanded node, then walks parents until the start reappears
        states.append(goal)
        parents.append(exp)
        yield world.encode(goal), ACT_N
        cur = len(states) - 1
        start_key = start.tobytes()
        while True:
            cur = parents[cur]
            yield world.encode(states[cur]), ACT_N
            if states[cur].tobytes() == start_key:
                return
