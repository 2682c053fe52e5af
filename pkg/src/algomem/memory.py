"""External memory with hard-attention heads and linked addressing.

Two coupled matrices store control and data words; every head touches
exactly one location per step.  Write locations come from a free-list
allocator (lowest unused index).  Two linkage structures are maintained
per write head: a temporal successor chain recording write order, and an
ancestry parent vector (one per read head) recording which location was
being read when a location was written.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


class MemoryFull(Exception):
    """All memory locations are in use; the episode cannot continue."""


@dataclass
class InterfaceSignals:
    """One step worth of control signals steering the memory heads.

    Gate values are exact 0/1 integers, erase vectors lie strictly in
    (0, 1) and read modes are stored as the index of the active mode.
    """

    write_vecs: np.ndarray  # (h_w, C)
    prev_write_vecs: np.ndarray  # (h_r, C)
    prev_erase_vecs: np.ndarray  # (h_r, C)
    prev_gates: np.ndarray  # (h_r,) in {0,1}
    read_modes: np.ndarray  # (h_r,) active mode index per head
    free_write: np.ndarray  # (h_w,) in {0,1}
    free_read: np.ndarray  # (h_r,) in {0,1}


def allocate_write_location(usage) -> int:
    """Return the lowest-indexed unused location.

    Pure function of the usage vector; raises :class:`MemoryFull` when
    every location is marked used.
    """
    for k, used in enumerate(usage):
        if not used:
            return k
    raise MemoryFull("all memory locations are in use")


# Read mode families, in the fixed layout used by the interface layer:
# h_r HALT modes first, then per write head B, F and (when ancestry is
# enabled) P, C.
MODE_HALT = "halt"
MODE_BACK = "back"
MODE_FWD = "fwd"
MODE_PARENT = "parent"
MODE_CHILD = "child"


@lru_cache(maxsize=None)
def mode_layout(num_read_heads: int, num_write_heads: int, ancestry: bool):
    """Return the list of (family, head_index) pairs per mode slot."""
    slots = [(MODE_HALT, k) for k in range(num_read_heads)]
    per_head = (MODE_BACK, MODE_FWD, MODE_PARENT, MODE_CHILD) if ancestry else (MODE_BACK, MODE_FWD)
    for i in range(num_write_heads):
        for fam in per_head:
            slots.append((fam, i))
    return slots


class ExternalMemory:
    """Coupled control/data memory with linked hard-attention addressing."""

    def __init__(self, n_locations, control_width, data_width,
                 num_write_heads=1, num_read_heads=1, ancestry=True):
        self.n = n_locations
        self.c_width = control_width
        self.d_width = data_width
        self.h_w = num_write_heads
        self.h_r = num_read_heads
        self.ancestry = ancestry
        self.modes = mode_layout(num_read_heads, num_write_heads, ancestry)

        self.mc = np.zeros((self.n, control_width))
        self.md = np.zeros((self.n, data_width))
        self.usage = np.zeros(self.n, dtype=bool)
        # -1 encodes "no link" throughout; one backing buffer, filled once
        links = np.empty((2 + self.h_r) * self.h_w * self.n + self.n,
                         dtype=np.int64)
        links.fill(-1)
        hw_n = self.h_w * self.n
        self.succ = links[:hw_n].reshape(self.h_w, self.n)
        self.pred = links[hw_n:2 * hw_n].reshape(self.h_w, self.n)
        self.parent = links[2 * hw_n:-self.n].reshape(self.h_w, self.h_r, self.n)
        self.history = links[-self.n:]
        self.prev_read = [None] * self.h_r
        self.prev_write = [None] * self.h_w
        self.step = 0
        self._free = list(range(self.n))  # heap of unused indices

    # -- writing ----------------------------------------------------------

    def update_previous(self, signals: InterfaceSignals) -> None:
        """Erase-and-rewrite the control rows read in the previous step.

        Gated per read head; freed or never-read locations are left alone.
        """
        for j in range(self.h_r):
            loc = self.prev_read[j]
            if not signals.prev_gates[j] or loc is None or not self.usage[loc]:
                continue
            erase = signals.prev_erase_vecs[j]
            self.mc[loc] = self.mc[loc] * (1.0 - erase) + signals.prev_write_vecs[j]

    def write_step(self, signals: InterfaceSignals, data_word: np.ndarray):
        """Write one control and one data word per write head.

        Both matrices are written at the same freshly allocated location.
        A write with the free gate raised is a scratch write: the rows are
        stored but the location stays unused and enters no linkage, so the
        next allocation reuses it.
        """
        self.step += 1
        written = []
        for i in range(self.h_w):
            if not self._free:
                raise MemoryFull("all memory locations are in use")
            loc = self._free[0]
            if signals.free_write[i]:
                self.mc[loc] = signals.write_vecs[i]
                self.md[loc] = data_word
                written.append(loc)
                continue
            heapq.heappop(self._free)
            self.usage[loc] = True
            self.mc[loc] = signals.write_vecs[i]
            self.md[loc] = data_word
            prev = self.prev_write[i]
            if prev is not None:
                self.succ[i, prev] = loc
                self.pred[i, loc] = prev
            for j in range(self.h_r):
                r = self.prev_read[j]
                if r is not None and self.usage[r]:
                    self.parent[i, j, loc] = r
            self.history[loc] = self.step
            self.prev_write[i] = loc
            written.append(loc)
        return written

    # -- reading ----------------------------------------------------------

    def resolve_read(self, head: int, mode_index: int, fallback: int) -> int:
        """Map a read mode to a concrete location for one head.

        Undefined links resolve to the head's previous location; a head
        without a previous location resolves to location 0 when any
        location is used, otherwise to ``fallback`` (the location written
        this step).
        """
        family, idx = self.modes[mode_index]
        if family == MODE_HALT:
            start = self.prev_read[idx]
        else:
            start = self.prev_read[head]
        if start is None:
            return 0 if self.usage.any() else fallback
        if family == MODE_HALT:
            return start
        if family == MODE_BACK:
            link = self.pred[idx, start]
        elif family == MODE_FWD:
            link = self.succ[idx, start]
        elif family == MODE_PARENT:
            link = self.parent[idx, head, start]
        else:  # MODE_CHILD: newest child, ties broken by lower index
            children = np.flatnonzero(self.parent[idx, head] == start)
            if children.size == 0:
                return start
            link = children[np.argmax(self.history[children])]
        return int(link) if link >= 0 else start

    def read_step(self, locations, free_read):
        """Read both matrices at the given per-head locations.

        Returns concatenated control and data readouts in head order,
        updates the previous-read positions, then frees locations whose
        read free gate is raised.
        """
        c_out = np.concatenate([self.mc[loc] for loc in locations])
        d_out = np.concatenate([self.md[loc] for loc in locations])
        for j, loc in enumerate(locations):
            self.prev_read[j] = int(loc)
        for j, loc in enumerate(locations):
            if free_read[j]:
                self.free_location(int(loc))
        return c_out, d_out

    # -- freeing ----------------------------------------------------------

    def free_location(self, loc: int) -> None:
        """Return a location to the free list and splice it out of all links.

        The temporal chain is re-joined around the location and ancestry
        children are re-attached to its parent.  Freeing an unused
        location is a no-op.
        """
        if not self.usage[loc]:
            return
        self.usage[loc] = False
        heapq.heappush(self._free, loc)
        for i in range(self.h_w):
            p, s = self.pred[i, loc], self.succ[i, loc]
            if p >= 0:
                self.succ[i, p] = s
            if s >= 0:
                self.pred[i, s] = p
            self.succ[i, loc] = -1
            self.pred[i, loc] = -1
            if self.prev_write[i] == loc:
                self.prev_write[i] = int(p) if p >= 0 else None
            for j in range(self.h_r):
                grand = self.parent[i, j, loc]
                children = self.parent[i, j] == loc
                self.parent[i, j, children] = grand
                self.parent[i, j, loc] = -1
        self.history[loc] = -1
