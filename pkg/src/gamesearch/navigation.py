"""Agent-side map knowledge, A* pathfinding and frontier exploration."""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Protocol

from .world import DIRECTIONS, Cell, CellKind, GameObject, Observation, chebyshev

# neighbour expansion order; together with (f, cell) heap keys this fixes the tie-break
NEIGHBOURS = (("N", (-1, 0)), ("W", (0, -1)), ("E", (0, 1)), ("S", (1, 0)))


class UnknownCell(KeyError):
    pass


@dataclass
class NavGraph:
    known: dict[Cell, CellKind] = field(default_factory=dict)
    door_cells: dict[Cell, str] = field(default_factory=dict)
    door_open: dict[str, bool] = field(default_factory=dict)
    objects: dict[str, GameObject] = field(default_factory=dict)
    version: int = 0
    _frontier: set[Cell] | None = field(default=None, repr=False)

    def integrate(self, obs: Observation) -> bool:
        """Merge an observation. Returns True if a new cell or object was learned."""
        new = False
        for cell, kind in obs.visible_cells:
            if cell not in self.known:
                self.known[cell] = kind
                new = True
        for obj, state in obs.visible_objects:
            if obj.id not in self.objects:
                self.objects[obj.id] = obj
                new = True
            if obj.is_door:
                self.door_cells[obj.cell] = obj.id
                self.door_open[obj.id] = bool(state)
        if new:
            self._frontier = None
            self.version += 1
        return new

    def door_free_components(self) -> dict[Cell, int]:
        """Label known floor cells into components with every known door treated as wall."""
        cached = getattr(self, "_components", None)
        if cached is not None and cached[0] == self.version:
            return cached[1]
        labels: dict[Cell, int] = {}
        label = 0
        for cell in sorted(self.known):
            if cell in labels or self.known[cell] is not CellKind.FLOOR or cell in self.door_cells:
                continue
            labels[cell] = label
            queue = deque([cell])
            while queue:
                cur = queue.popleft()
                for _, (dr, dc) in NEIGHBOURS:
                    nxt = (cur[0] + dr, cur[1] + dc)
                    if (nxt not in labels and self.known.get(nxt) is CellKind.FLOOR
                            and nxt not in self.door_cells):
                        labels[nxt] = label
                        queue.append(nxt)
            label += 1
        self._components = (self.version, labels)
        return labels

    @property
    def frontier(self) -> set[Cell]:
        if self._frontier is None:
            self._frontier = {
                cell for cell, kind in self.known.items()
                if kind is CellKind.FLOOR
                and any((cell[0] + dr, cell[1] + dc) not in self.known for _, (dr, dc) in NEIGHBOURS)
            }
        return self._frontier

    def walkable(self, cell: Cell, door_states: Mapping[str, bool] | None = None) -> bool:
        if self.known.get(cell) is not CellKind.FLOOR:
            return False
        door = self.door_cells.get(cell)
        if door is None:
            return True
        states = self.door_open if door_states is None else door_states
        return bool(states.get(door, False))

    def passable(self, door_states: Mapping[str, bool] | None = None) -> Callable[[Cell], bool]:
        return lambda cell: self.walkable(cell, door_states)

    def require_known(self, *cells: Cell) -> None:
        for cell in cells:
            if cell not in self.known:
                raise UnknownCell(cell)

    def render(self, agent: Cell | None = None) -> str:
        """ASCII dump of the known map using the level-file glyphs ('?' = unknown)."""
        if not self.known:
            return ""
        rows = [r for r, _ in self.known]
        cols = [c for _, c in self.known]
        by_cell = {o.cell: o for o in self.objects.values()}
        out = []
        for r in range(min(rows), max(rows) + 1):
            line = []
            for c in range(min(cols), max(cols) + 1):
                cell = (r, c)
                if cell == agent:
                    line.append("@")
                elif cell in by_cell:
                    o = by_cell[cell]
                    line.append(("D" if not self.door_open.get(o.id) else "d") if o.is_door else "B")
                elif cell in self.known:
                    line.append(self.known[cell].value)
                else:
                    line.append("?")
            out.append("".join(line))
        return "\n".join(out)


def integrate_observation(nav: NavGraph, obs: Observation) -> NavGraph:
    nav.integrate(obs)
    return nav


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def astar(start: Cell, goals: Iterable[Cell], passable: Callable[[Cell], bool],
          expanded: list | None = None) -> list[Cell] | None:
    """Shortest 4-connected path from ``start`` to the nearest of ``goals``.

    Goal cells need not be passable themselves only when they equal ``start``.
    Heap keys are ``(f, g, cell)`` so equal-cost ties resolve row-major.
    """
    goals = set(goals)
    if not goals:
        return None
    if start in goals:
        return [start]
    glist = sorted(goals)

    def h(cell: Cell) -> int:
        return min(manhattan(cell, g) for g in glist)

    g_cost = {start: 0}
    parent: dict[Cell, Cell] = {}
    heap = [(h(start), 0, start)]
    closed: set[Cell] = set()
    while heap:
        _, g, cell = heapq.heappop(heap)
        if cell in closed:
            continue
        closed.add(cell)
        if expanded is not None:
            expanded.append(cell)
        if cell in goals:
            path = [cell]
            while cell in parent:
                cell = parent[cell]
                path.append(cell)
            return path[::-1]
        for _, (dr, dc) in NEIGHBOURS:
            nxt = (cell[0] + dr, cell[1] + dc)
            if nxt in closed or not passable(nxt):
                continue
            ng = g + 1
            if ng < g_cost.get(nxt, 1 << 30):
                g_cost[nxt] = ng
                parent[nxt] = cell
                heapq.heappush(heap, (ng + h(nxt), ng, nxt))
    return None


def find_path(nav: NavGraph, start: Cell, goal: Cell, door_states: Mapping[str, bool] | None = None,
              expanded: list | None = None) -> list[Cell] | None:
    """Minimal-length path over known walkable cells; closed (or unseen-state) doors are obstacles."""
    nav.require_known(start, goal)
    if start != goal and not nav.walkable(goal, door_states):
        return None
    return astar(start, [goal], nav.passable(door_states), expanded)


def path_with_blockers_as_walls(nav: NavGraph, a: Cell, b: Cell) -> list[Cell] | None:
    """As :func:`find_path` but every known door cell is an obstacle, open or not."""
    nav.require_known(a, b)

    def passable(cell: Cell) -> bool:
        return nav.known.get(cell) is CellKind.FLOOR and cell not in nav.door_cells

    if a == b:
        return [a]
    if not passable(b):
        return None
    return astar(a, [b], passable)


def bfs_distances(start: Cell, passable: Callable[[Cell], bool]) -> dict[Cell, int]:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        for _, (dr, dc) in NEIGHBOURS:
            nxt = (cell[0] + dr, cell[1] + dc)
            if nxt not in dist and passable(nxt):
                dist[nxt] = dist[cell] + 1
                queue.append(nxt)
    return dist


def direction_to(a: Cell, b: Cell) -> str:
    delta = (b[0] - a[0], b[1] - a[1])
    for name, d in DIRECTIONS.items():
        if d == delta:
            return name
    raise ValueError(f"{a} and {b} are not 4-adjacent")


# --- agent-driven movement ----------------------------------------------------

class Mover(Protocol):
    nav: NavGraph

    @property
    def agent_cell(self) -> Cell: ...

    def move(self, direction: str) -> bool: ...


@dataclass(frozen=True)
class NavResult:
    arrived: bool
    door: str | None = None
    steps: int = 0


def approach_cells(nav: NavGraph, target: Cell, within: int) -> list[Cell]:
    if within == 0:
        return [target]
    # doorways are excluded: nothing can be operated from inside one
    return [(target[0] + dr, target[1] + dc)
            for dr in range(-within, within + 1) for dc in range(-within, within + 1)
            if nav.walkable((target[0] + dr, target[1] + dc))
            and (target[0] + dr, target[1] + dc) not in nav.door_cells]


def _first_closed_door(nav: NavGraph, route: list[Cell] | None) -> str | None:
    if not route:
        return None
    for cell in route[1:]:
        door = nav.door_cells.get(cell)
        if door is not None and not nav.door_open.get(door, False):
            return door
    return None


def navigate_to(ctx: Mover, target: Cell, within: int = 1) -> NavResult:
    """Walk toward ``target`` until within Chebyshev distance ``within``, replanning each step.

    Returns a blocked result naming a closed door on the last believed route when
    no walkable route remains (``door=None`` when no known route exists at all).
    """
    nav = ctx.nav
    nav.require_known(target)
    steps = 0
    route: list[Cell] | None = None
    while chebyshev(ctx.agent_cell, target) > within or (within and ctx.agent_cell in nav.door_cells):
        path = astar(ctx.agent_cell, approach_cells(nav, target, within), nav.passable())
        if path is None:
            door = _first_closed_door(nav, route)
            if door is None:
                optimistic = astar(ctx.agent_cell, approach_cells_any(nav, target, within),
                                   lambda c: nav.known.get(c) is CellKind.FLOOR)
                door = _first_closed_door(nav, optimistic)
            return NavResult(False, door, steps)
        route = path
        ctx.move(direction_to(path[0], path[1]))
        steps += 1
    return NavResult(True, None, steps)


def approach_cells_any(nav: NavGraph, target: Cell, within: int) -> list[Cell]:
    return [(target[0] + dr, target[1] + dc)
            for dr in range(-within, within + 1) for dc in range(-within, within + 1)
            if nav.known.get((target[0] + dr, target[1] + dc)) is CellKind.FLOOR]


def nearest_frontier(nav: NavGraph, start: Cell) -> Cell | None:
    """Nearest frontier cell by known-path length; ties broken row-major."""
    frontier = nav.frontier
    if not frontier:
        return None
    dist = bfs_distances(start, nav.passable())
    best = [(d, cell) for cell, d in dist.items() if cell in frontier]
    return min(best)[1] if best else None


def explore(ctx: Mover) -> bool:
    """Head for the nearest reachable frontier until something new is sighted.

    Returns True on a new sighting (cell or object), False once no frontier is reachable.
    """
    nav = ctx.nav
    while True:
        target = nearest_frontier(nav, ctx.agent_cell)
        if target is None:
            return False
        path = astar(ctx.agent_cell, [target], nav.passable())
        if path is None or len(path) < 2:
            # standing on a frontier cell cannot happen with radius >= 1
            return False
        if ctx.move(direction_to(path[0], path[1])):
            return True
