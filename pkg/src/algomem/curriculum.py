"""Curriculum state, minibatch composition and the mistake buffer."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

MAX_LEVEL = 11
BATCH_SIZE = 32
PERFECT_STREAK = 750
PERFECT_STREAK_AFTER_LEARNING = 1500
BAD_MEMORY_CAPACITY = 200
SEED_RANGE = 2 ** 31


@dataclass
class CurriculumState:
    level: int = 1
    streak: int = 0  # consecutive perfect iterations at this level
    learned_in_level: bool = False
    completed: bool = False


class BadMemories:
    """FIFO of the last failed (level, seed) pairs; duplicates allowed."""

    def __init__(self, capacity: int = BAD_MEMORY_CAPACITY):
        self.buffer = deque(maxlen=capacity)

    def __len__(self):
        return len(self.buffer)

    def record(self, level: int, seed: int):
        self.buffer.append((int(level), int(seed)))

    def sample(self, rng, count: int):
        idx = rng.integers(0, len(self.buffer), count)
        return [self.buffer[int(i)] for i in idx]

    def clear(self):
        self.buffer.clear()

    def dump(self):
        return list(self.buffer)

    def load(self, items):
        self.buffer.clear()
        self.buffer.extend((int(a), int(b)) for a, b in items)


def _draw_level(rng, level: int) -> int:
    # level 11 has no fresh instances of its own; it samples levels 1-10
    if level >= MAX_LEVEL:
        return int(rng.integers(1, MAX_LEVEL))
    return level


def compose_minibatch(state: CurriculumState, bad: BadMemories, rng,
                      batch: int = BATCH_SIZE):
    """(level, seed) pairs: a third previous levels, a third replayed
    mistakes, the rest fresh at the current level."""
    third = batch // 3
    pairs = []
    for _ in range(third):
        if state.level > 1:
            prev = int(rng.integers(1, min(state.level, MAX_LEVEL)))
        else:
            prev = 1
        pairs.append((prev, int(rng.integers(0, SEED_RANGE))))
    if len(bad):
        pairs.extend(bad.sample(rng, third))
    else:
        for _ in range(third):
            pairs.append((_draw_level(rng, state.level), int(rng.integers(0, SEED_RANGE))))
    while len(pairs) < batch:
        pairs.append((_draw_level(rng, state.level), int(rng.integers(0, SEED_RANGE))))
    return pairs


def curriculum_advance(state: CurriculumState, perfect: bool, learned: bool) -> bool:
    """Update streaks after one iteration; returns True on level change."""
    if state.completed:
        return False
    if learned:
        state.learned_in_level = True
    state.streak = state.streak + 1 if perfect else 0
    needed = PERFECT_STREAK_AFTER_LEARNING if state.learned_in_level else PERFECT_STREAK
    if state.streak < needed:
        return False
    if state.level >= MAX_LEVEL:
        state.completed = True
        return False
    state.level += 1
    state.streak = 0
    state.learned_in_level = False
    return True
