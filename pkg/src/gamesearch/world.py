"""Deterministic grid maze simulator: buttons toggle doors, doors block movement and sight.

Coordinates are ``(row, col)`` tuples. Configurations are immutable values; the
:class:`Game` wrapper owns one configuration plus its action history and is what
the agents drive.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping

Cell = tuple[int, int]

DIRECTIONS: dict[str, Cell] = {"N": (-1, 0), "S": (1, 0), "E": (0, 1), "W": (0, -1)}
DEFAULT_RADIUS = 4


class CellKind(enum.Enum):
    WALL = "#"
    FLOOR = "."


class ObjectKind(enum.Enum):
    BUTTON = "button"
    DOOR = "door"


class LevelError(Exception):
    pass


class ParseError(LevelError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ValidationError(LevelError):
    pass


class UnknownObject(KeyError):
    pass


class NotInteractable(ValueError):
    pass


@dataclass(frozen=True)
class GameObject:
    id: str
    kind: ObjectKind
    cell: Cell

    @property
    def is_door(self) -> bool:
        return self.kind is ObjectKind.DOOR


@dataclass(frozen=True, eq=False)
class Level:
    name: str
    grid: tuple[tuple[CellKind, ...], ...]
    objects: tuple[GameObject, ...]
    wiring: frozenset[tuple[str, str]]
    agent_start: Cell
    init_open: frozenset[str] = frozenset()
    radius: int = DEFAULT_RADIUS
    markers: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {o.id: o for o in self.objects})
        object.__setattr__(self, "_by_cell", {o.cell: o for o in self.objects})
        object.__setattr__(self, "_vis_cache", {})

    @property
    def height(self) -> int:
        return len(self.grid)

    @property
    def width(self) -> int:
        return len(self.grid[0]) if self.grid else 0

    @property
    def diagonal(self) -> int:
        return math.ceil(math.hypot(self.height, self.width))

    def cells(self) -> Iterable[Cell]:
        for r in range(self.height):
            for c in range(self.width):
                yield (r, c)

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width

    def kind_at(self, cell: Cell) -> CellKind:
        if not self.in_bounds(cell):
            return CellKind.WALL
        return self.grid[cell[0]][cell[1]]

    def object(self, obj_id: str) -> GameObject:
        try:
            return self._by_id[obj_id]
        except KeyError:
            raise UnknownObject(obj_id) from None

    def object_at(self, cell: Cell) -> GameObject | None:
        return self._by_cell.get(cell)

    @property
    def buttons(self) -> list[GameObject]:
        return [o for o in self.objects if o.kind is ObjectKind.BUTTON]

    @property
    def doors(self) -> list[GameObject]:
        return [o for o in self.objects if o.kind is ObjectKind.DOOR]

    def doors_of(self, button_id: str) -> list[str]:
        return sorted(d for b, d in self.wiring if b == button_id)

    def buttons_of(self, door_id: str) -> list[str]:
        return sorted(b for b, d in self.wiring if d == door_id)

    def validate(self) -> None:
        if not self.grid or any(len(row) != self.width for row in self.grid):
            raise ValidationError("grid is not rectangular")
        for r in range(self.height):
            for c in range(self.width):
                border = r in (0, self.height - 1) or c in (0, self.width - 1)
                if border and self.grid[r][c] is not CellKind.WALL:
                    raise ValidationError(f"border cell {(r, c)} is not a wall")
        seen_ids: set[str] = set()
        seen_cells: set[Cell] = set()
        for o in self.objects:
            if o.id in seen_ids:
                raise ValidationError(f"duplicate object id {o.id}")
            if o.cell in seen_cells:
                raise ValidationError(f"two objects share cell {o.cell}")
            if self.kind_at(o.cell) is not CellKind.FLOOR:
                raise ValidationError(f"object {o.id} is not on a floor cell")
            seen_ids.add(o.id)
            seen_cells.add(o.cell)
        for b, d in self.wiring:
            if b not in self._by_id or self._by_id[b].kind is not ObjectKind.BUTTON:
                raise ValidationError(f"wiring references unknown button {b}")
            if d not in self._by_id or self._by_id[d].kind is not ObjectKind.DOOR:
                raise ValidationError(f"wiring references unknown door {d}")
        for d in self.init_open:
            if d not in self._by_id or not self._by_id[d].is_door:
                raise ValidationError(f"init_open references unknown door {d}")
        if self.kind_at(self.agent_start) is not CellKind.FLOOR:
            raise ValidationError("agent start is not a floor cell")
        start_obj = self.object_at(self.agent_start)
        if start_obj is not None and start_obj.is_door:
            raise ValidationError("agent starts on a door")
        if self.radius < 1:
            raise ValidationError("radius must be positive")


# --- level file ------------------------------------------------------------

SECTIONS = ("grid", "objects", "wiring", "meta")


def parse_level(text: str, name: str = "level") -> Level:
    """Parse the sectioned plain-text level format.

    Raises :class:`ParseError` for malformed text and :class:`ValidationError`
    when the result violates a level invariant.
    """
    section = None
    grid_lines: list[tuple[int, str]] = []
    markers: dict[str, tuple[ObjectKind, str, bool]] = {}
    wiring: set[tuple[str, str]] = set()
    meta: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        head = raw.strip()
        if head.startswith("[") and "]" in head:
            section = head[1:head.index("]")].strip().lower()
            if section not in SECTIONS:
                raise ParseError(lineno, f"unknown section [{section}]")
            continue
        if section == "grid":
            # rows contain no spaces; anything after whitespace is a comment
            if head:
                grid_lines.append((lineno, head.split()[0]))
            continue
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if section is None:
            raise ParseError(lineno, "content before first section")
        if section == "objects":
            lhs, sep, rhs = stripped.partition("=")
            marker = lhs.strip()
            parts = rhs.split()
            if not sep or len(marker) != 1 or len(parts) not in (2, 3):
                raise ParseError(lineno, "expected '<marker> = <kind> <id> [open]'")
            kind_name, obj_id = parts[0].lower(), parts[1]
            try:
                kind = ObjectKind(kind_name)
            except ValueError:
                raise ParseError(lineno, f"unknown object kind {parts[0]!r}") from None
            is_open = len(parts) == 3
            if is_open and (parts[2] != "open" or kind is not ObjectKind.DOOR):
                raise ParseError(lineno, "only doors accept the 'open' flag")
            if marker in markers or marker in "#.@":
                raise ParseError(lineno, f"marker {marker!r} reused")
            markers[marker] = (kind, obj_id, is_open)
        elif section == "wiring":
            lhs, sep, rhs = stripped.partition("->")
            if not sep or len(lhs.split()) != 1 or not rhs.split():
                raise ParseError(lineno, "expected '<button> -> <door> [<door> ...]'")
            for d in rhs.split():
                wiring.add((lhs.strip(), d))
        elif section == "meta":
            key, sep, value = stripped.partition("=")
            if not sep:
                raise ParseError(lineno, "expected 'key = value'")
            meta[key.strip()] = value.strip()

    if not grid_lines:
        raise ParseError(0, "missing [grid] section")
    rows: list[tuple[CellKind, ...]] = []
    objects: list[GameObject] = []
    start: Cell | None = None
    used: set[str] = set()
    for r, (lineno, row_text) in enumerate(grid_lines):
        row = []
        for c, ch in enumerate(row_text):
            if ch == "#":
                row.append(CellKind.WALL)
                continue
            row.append(CellKind.FLOOR)
            if ch == ".":
                continue
            if ch == "@":
                if start is not None:
                    raise ParseError(lineno, "more than one agent start")
                start = (r, c)
            elif ch in markers:
                if ch in used:
                    raise ParseError(lineno, f"marker {ch!r} placed twice")
                used.add(ch)
                kind, obj_id, _ = markers[ch]
                objects.append(GameObject(obj_id, kind, (r, c)))
            else:
                raise ParseError(lineno, f"undeclared grid marker {ch!r}")
        rows.append(tuple(row))
    if start is None:
        raise ParseError(0, "grid has no agent start '@'")
    missing = set(markers) - used
    if missing:
        raise ValidationError(f"declared markers not placed on grid: {sorted(missing)}")
    try:
        radius = int(meta.get("radius", DEFAULT_RADIUS))
    except ValueError:
        raise ValidationError("meta radius must be an integer") from None
    level = Level(
        name=meta.get("name", name),
        grid=tuple(rows),
        objects=tuple(objects),
        wiring=frozenset(wiring),
        agent_start=start,
        init_open=frozenset(obj_id for _, obj_id, is_open in markers.values() if is_open),
        radius=radius,
        markers={m: v[1] for m, v in markers.items()},
    )
    level.validate()
    return level


def dump_level(level: Level) -> str:
    """Render a level back to the file format (round-trips through parse_level)."""
    marker_of = {obj_id: m for m, obj_id in level.markers.items()}
    spare = iter(ch for ch in "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"
                 if ch not in level.markers)
    for o in level.objects:
        if o.id not in marker_of:
            marker_of[o.id] = next(spare)
    lines = ["[grid]"]
    for r, row in enumerate(level.grid):
        chars = []
        for c, kind in enumerate(row):
            obj = level.object_at((r, c))
            if (r, c) == level.agent_start:
                chars.append("@")
            elif obj is not None:
                chars.append(marker_of[obj.id])
            else:
                chars.append(kind.value)
        lines.append("".join(chars))
    lines.append("[objects]")
    for o in level.objects:
        flag = " open" if o.id in level.init_open else ""
        lines.append(f"{marker_of[o.id]} = {o.kind.value} {o.id}{flag}")
    lines.append("[wiring]")
    for b in sorted({b for b, _ in level.wiring}):
        lines.append(f"{b} -> {' '.join(level.doors_of(b))}")
    lines.append("[meta]")
    lines.append(f"name = {level.name}")
    lines.append(f"radius = {level.radius}")
    return "\n".join(lines) + "\n"


def load_level(path) -> Level:
    p = Path(path)
    return parse_level(p.read_text(encoding="utf-8"), name=p.stem)


# --- configuration and actions ----------------------------------------------

@dataclass(frozen=True)
class GameConfiguration:
    agent_cell: Cell
    open_doors: frozenset[str]
    door_ids: tuple[str, ...]
    tick: int = 0

    @property
    def door_open(self) -> dict[str, bool]:
        return {d: d in self.open_doors for d in self.door_ids}


def init(level: Level) -> GameConfiguration:
    return GameConfiguration(
        agent_cell=level.agent_start,
        open_doors=frozenset(level.init_open),
        door_ids=tuple(sorted(d.id for d in level.doors)),
    )


def is_walkable(level: Level, open_doors: frozenset[str] | set[str], cell: Cell) -> bool:
    if level.kind_at(cell) is not CellKind.FLOOR:
        return False
    obj = level.object_at(cell)
    return obj is None or not obj.is_door or obj.id in open_doors


def step_cell(cell: Cell, direction: str) -> Cell:
    dr, dc = DIRECTIONS[direction]
    return (cell[0] + dr, cell[1] + dc)


def move_agent(cfg: GameConfiguration, direction: str, level: Level) -> GameConfiguration:
    target = step_cell(cfg.agent_cell, direction)
    cell = target if is_walkable(level, cfg.open_doors, target) else cfg.agent_cell
    return GameConfiguration(cell, cfg.open_doors, cfg.door_ids, cfg.tick + 1)


def chebyshev(a: Cell, b: Cell) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def euclid(a: Cell, b: Cell) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def can_interact_from(level: Level, agent: Cell, target: Cell) -> bool:
    """In range (Chebyshev <= 1) and not standing in a doorway, so no door can shut on the agent."""
    here = level.object_at(agent)
    return chebyshev(agent, target) <= 1 and (here is None or not here.is_door)


def interact(cfg: GameConfiguration, level: Level, obj_id: str) -> GameConfiguration:
    obj = level.object(obj_id)
    if obj.kind is not ObjectKind.BUTTON:
        raise NotInteractable(obj_id)
    opened = cfg.open_doors
    if can_interact_from(level, cfg.agent_cell, obj.cell):
        opened = opened ^ frozenset(level.doors_of(obj_id))
    return GameConfiguration(cfg.agent_cell, opened, cfg.door_ids, cfg.tick + 1)


# --- visibility ---------------------------------------------------------------

@lru_cache(maxsize=None)
def sight_line(dr: int, dc: int) -> tuple[tuple[Cell, ...], tuple[tuple[Cell, Cell], ...]]:
    """Cells strictly between the centres of ``(0, 0)`` and ``(dr, dc)``.

    Returns ``(crossed, corners)``: ``crossed`` are the offsets whose interior the
    segment passes through (endpoints excluded); ``corners`` are the diagonal
    cell pairs the segment only grazes at a shared corner. Exact integer walk, so
    the set is the same geometry when traversed from either end.
    """
    sr = (dr > 0) - (dr < 0)
    sc = (dc > 0) - (dc < 0)
    adr, adc = abs(dr), abs(dc)
    r = c = 0
    crossed: list[Cell] = []
    corners: list[tuple[Cell, Cell]] = []
    # next boundary crossings at t = (2k+1) / (2*|d|); compare numerators cross-multiplied
    kr = kc = 0
    while (r, c) != (dr, dc):
        if adc == 0:
            r += sr
        elif adr == 0:
            c += sc
        else:
            tr = (2 * kr + 1) * adc
            tc = (2 * kc + 1) * adr
            if tr < tc:
                r += sr
                kr += 1
            elif tc < tr:
                c += sc
                kc += 1
            else:
                corners.append(((r + sr, c), (r, c + sc)))
                r += sr
                c += sc
                kr += 1
                kc += 1
        if (r, c) != (dr, dc):
            crossed.append((r, c))
    return tuple(crossed), tuple(corners)


class Visibility:
    """Per-level, per-radius cache of which cells can be seen from each floor cell.

    Walls are static, so for each viewpoint only lines free of walls are kept,
    together with the door cells that could still block them.
    """

    def __init__(self, level: Level, radius: float):
        self.level = level
        self.radius = radius
        self._lines: dict[Cell, list[tuple[Cell, tuple[Cell, ...], tuple[tuple[Cell, Cell], ...]]]] = {}
        self._door_cells = {o.cell for o in level.doors}

    def _blocking_static(self, cell: Cell) -> bool:
        return self.level.kind_at(cell) is CellKind.WALL

    def lines_from(self, origin: Cell):
        lines = self._lines.get(origin)
        if lines is not None:
            return lines
        level = self.level
        lim = level.height + level.width if math.isinf(self.radius) else int(self.radius)
        r2 = math.inf if math.isinf(self.radius) else self.radius * self.radius
        lines = []
        r0, c0 = origin
        for r in range(max(0, r0 - lim), min(level.height, r0 + lim + 1)):
            for c in range(max(0, c0 - lim), min(level.width, c0 + lim + 1)):
                dr, dc = r - r0, c - c0
                if dr * dr + dc * dc > r2:
                    continue
                crossed, corners = sight_line(dr, dc)
                doors: list[Cell] = []
                ok = True
                for orr, occ in crossed:
                    cell = (r0 + orr, c0 + occ)
                    if self._blocking_static(cell):
                        ok = False
                        break
                    if cell in self._door_cells:
                        doors.append(cell)
                if not ok:
                    continue
                pairs = []
                for (a1, a2), (b1, b2) in corners:
                    x = (r0 + a1, c0 + a2)
                    y = (r0 + b1, c0 + b2)
                    x_wall, y_wall = self._blocking_static(x), self._blocking_static(y)
                    if x_wall and y_wall:
                        ok = False
                        break
                    x_door, y_door = x in self._door_cells, y in self._door_cells
                    if (x_wall or x_door) and (y_wall or y_door):
                        pairs.append((x, y))
                if ok:
                    lines.append(((r, c), tuple(doors), tuple(pairs)))
        self._lines[origin] = lines
        return lines

    def visible(self, origin: Cell, open_doors: frozenset[str] | set[str]) -> list[Cell]:
        closed = {o.cell for o in self.level.doors if o.id not in open_doors}
        out = []
        for cell, doors, pairs in self.lines_from(origin):
            if any(d in closed for d in doors):
                continue
            if any(_blocks(x, closed, self.level) and _blocks(y, closed, self.level) for x, y in pairs):
                continue
            out.append(cell)
        return out


def _blocks(cell: Cell, closed_cells: set[Cell], level: Level) -> bool:
    return cell in closed_cells or level.kind_at(cell) is CellKind.WALL


def visibility_for(level: Level, radius: float) -> Visibility:
    cache = level._vis_cache
    vis = cache.get(radius)
    if vis is None:
        vis = cache[radius] = Visibility(level, radius)
    return vis


@dataclass(frozen=True)
class Observation:
    agent_cell: Cell
    visible_cells: frozenset[tuple[Cell, CellKind]]
    visible_objects: tuple[tuple[GameObject, bool | None], ...]
    tick: int

    @property
    def cells(self) -> dict[Cell, CellKind]:
        return dict(self.visible_cells)

    def door_states(self) -> dict[str, bool]:
        return {o.id: state for o, state in self.visible_objects if o.is_door}


def observe(cfg: GameConfiguration, level: Level, radius: float | None = None) -> Observation:
    """Snapshot of what the agent can see: Euclidean radius plus unobstructed sight line.

    ``radius=None`` uses the level default; ``math.inf`` gives unlimited range
    (walls and closed doors still block).
    """
    if radius is None:
        radius = level.radius
    if radius < 1:
        raise ValueError("radius must be >= 1")
    cells = visibility_for(level, radius).visible(cfg.agent_cell, cfg.open_doors)
    visible_cells = frozenset((c, level.kind_at(c)) for c in cells)
    objs = []
    for c in sorted(cells):
        o = level.object_at(c)
        if o is not None:
            objs.append((o, (o.id in cfg.open_doors) if o.is_door else None))
    return Observation(cfg.agent_cell, visible_cells, tuple(objs), cfg.tick)


class Game:
    """A live world for one trial: current configuration plus the action history."""

    def __init__(self, level: Level, radius: float | None = None):
        self.level = level
        self.radius = level.radius if radius is None else radius
        self.config = init(level)
        self.history: list[tuple[str, str]] = []

    @property
    def tick(self) -> int:
        return self.config.tick

    def move(self, direction: str) -> Observation:
        self.config = move_agent(self.config, direction, self.level)
        self.history.append(("move", direction))
        return self.observe()

    def interact(self, obj_id: str) -> Observation:
        self.config = interact(self.config, self.level, obj_id)
        self.history.append(("interact", obj_id))
        return self.observe()

    def observe(self) -> Observation:
        return observe(self.config, self.level, self.radius)


def replay(level: Level, history: Iterable[tuple[str, str]]) -> list[GameConfiguration]:
    """Re-run an action history from the initial configuration."""
    cfg = init(level)
    out = [cfg]
    for action, arg in history:
        if action == "move":
            cfg = move_agent(cfg, arg, level)
        else:
            cfg = interact(cfg, level, arg)
        out.append(cfg)
    return out
