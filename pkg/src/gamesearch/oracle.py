"""Ground-truth solvability by exhaustive search over full configurations."""

from __future__ import annotations

from collections import deque

from .agent import TestingTask, atoms_hold
from .world import DIRECTIONS, Level, can_interact_from, chebyshev, is_walkable

MAX_DOORS = 12


class TooLarge(ValueError):
    pass


def oracle_solvable(level: Level, task: TestingTask) -> tuple[bool, int | None]:
    """Is a configuration satisfying the task's goal predicate reachable from the start?

    0-1 BFS over (agent cell, open-door set) with moves costing 0 and
    interactions costing 1, so the second value is the minimal number of
    interactions on a witness (None when unsolvable).
    """
    if len(level.doors) > MAX_DOORS:
        raise TooLarge(f"{len(level.doors)} doors exceeds the oracle bound of {MAX_DOORS}")
    goal = level.object(task.goal)
    buttons = [(b.id, b.cell, frozenset(level.doors_of(b.id))) for b in level.buttons]

    def satisfied(cell, opened) -> bool:
        is_open = (goal.id in opened) if goal.is_door else None
        return atoms_hold(task.phi, is_open, chebyshev(cell, goal.cell) <= 1)

    start = (level.agent_start, frozenset(level.init_open))
    best = {start: 0}
    queue = deque([(0, start)])
    while queue:
        cost, state = queue.popleft()
        if cost > best[state]:
            continue
        cell, opened = state
        if satisfied(cell, opened):
            return True, cost
        for dr, dc in DIRECTIONS.values():
            nxt = (cell[0] + dr, cell[1] + dc)
            if is_walkable(level, opened, nxt):
                ns = (nxt, opened)
                if cost < best.get(ns, 1 << 30):
                    best[ns] = cost
                    queue.appendleft((cost, ns))
        for _, bcell, toggles in buttons:
            if toggles and can_interact_from(level, cell, bcell):
                ns = (cell, opened ^ toggles)
                if cost + 1 < best.get(ns, 1 << 30):
                    best[ns] = cost + 1
                    queue.append((cost + 1, ns))
    return False, None
