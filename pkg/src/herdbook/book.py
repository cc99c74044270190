"""Array-backed indexed min-heap holding the spread of every active chartist.

Each chartist quotes a bid and an ask the same distance (its spread) from the
shared valuation, so the whole symmetric book is summarized by one spread per
agent with fast access to the minimum (the best quotes).  The jitted
primitives below back both the production Gillespie engine and the
pure-Python reference stepper, which therefore see identical array layouts —
including the slot -> agent mapping used to pick a uniformly random chartist.
"""
from __future__ import annotations

import numpy as np
from numba import njit

NO_SLOT = -1


@njit(cache=True, inline="always")
def heap_sift_up(spread, tag, slot_of, i):
    while i > 0:
        p = (i - 1) >> 1
        if spread[i] < spread[p]:
            spread[i], spread[p] = spread[p], spread[i]
            gi = tag[i]
            gp = tag[p]
            tag[i] = gp
            tag[p] = gi
            slot_of[gi] = p
            slot_of[gp] = i
            i = p
        else:
            break
    return i


@njit(cache=True, inline="always")
def heap_sift_down(spread, tag, slot_of, size, i):
    while True:
        c = 2 * i + 1
        if c >= size:
            break
        r = c + 1
        if r < size and spread[r] < spread[c]:
            c = r
        if spread[c] < spread[i]:
            spread[i], spread[c] = spread[c], spread[i]
            gi = tag[i]
            gc = tag[c]
            tag[i] = gc
            tag[c] = gi
            slot_of[gi] = c
            slot_of[gc] = i
            i = c
        else:
            break
    return i


@njit(cache=True)
def heap_push(spread, tag, slot_of, size, s, g):
    """Insert agent g with spread s; returns the new size."""
    spread[size] = s
    tag[size] = g
    slot_of[g] = size
    heap_sift_up(spread, tag, slot_of, size)
    return size + 1


@njit(cache=True)
def heap_remove(spread, tag, slot_of, size, slot):
    """Remove the entry at a heap slot; returns the new size."""
    g = tag[slot]
    slot_of[g] = NO_SLOT
    last = size - 1
    if slot != last:
        spread[slot] = spread[last]
        tag[slot] = tag[last]
        slot_of[tag[slot]] = slot
        if heap_sift_up(spread, tag, slot_of, slot) == slot:
            heap_sift_down(spread, tag, slot_of, last, slot)
    return last


@njit(cache=True)
def heap_replace_min(spread, tag, slot_of, size, s):
    """Give the minimum-spread agent a new spread (redraw after a fill)."""
    spread[0] = s
    heap_sift_down(spread, tag, slot_of, size, 0)


class SpreadBook:
    """Python view over the heap arrays; used by the reference stepper."""

    def __init__(self, capacity: int):
        self.spread = np.zeros(capacity, dtype=np.float64)
        self.tag = np.full(capacity, -1, dtype=np.int64)
        self.slot_of = np.full(capacity, NO_SLOT, dtype=np.int64)
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def __contains__(self, agent: int) -> bool:
        return self.slot_of[agent] != NO_SLOT

    def push(self, agent: int, s: float) -> None:
        if s <= 0:
            raise ValueError(f"spread must be positive, got {s!r}")
        if agent in self:
            raise ValueError(f"agent {agent} already quotes")
        self.size = heap_push(self.spread, self.tag, self.slot_of, self.size, s, agent)

    def remove_slot(self, slot: int) -> int:
        """Remove by heap slot (uniform over agents); returns the agent tag."""
        if not 0 <= slot < self.size:
            raise IndexError(f"slot {slot} out of range for size {self.size}")
        agent = int(self.tag[slot])
        self.size = heap_remove(self.spread, self.tag, self.slot_of, self.size, slot)
        return agent

    def remove_agent(self, agent: int) -> None:
        slot = int(self.slot_of[agent])
        if slot == NO_SLOT:
            raise KeyError(agent)
        self.size = heap_remove(self.spread, self.tag, self.slot_of, self.size, slot)

    def replace_min(self, s: float) -> None:
        if self.size == 0:
            raise IndexError("book is empty")
        heap_replace_min(self.spread, self.tag, self.slot_of, self.size, s)

    @property
    def min_spread(self) -> float:
        if self.size == 0:
            raise IndexError("book is empty")
        return float(self.spread[0])

    @property
    def min_agent(self) -> int:
        if self.size == 0:
            raise IndexError("book is empty")
        return int(self.tag[0])

    def spread_of(self, agent: int) -> float:
        slot = int(self.slot_of[agent])
        if slot == NO_SLOT:
            raise KeyError(agent)
        return float(self.spread[slot])

    def items(self) -> list[tuple[int, float]]:
        return [(int(self.tag[i]), float(self.spread[i])) for i in range(self.size)]
