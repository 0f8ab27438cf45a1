"""Benchmark level suite: parameter-matched replicas, trap levels and small oracle levels."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .agent import TestingTask
from .oracle import oracle_solvable
from .world import CellKind, Level, parse_level

# (R, B, D, nu, mu, init) per replica
TARGETS: dict[str, tuple[int, int, int, int, int, int]] = {
    "R3_1_1_H": (3, 6, 4, 1, 1, 0),
    "R4_1_1": (5, 8, 6, 1, 1, 0),
    "R4_1_1_M": (4, 8, 6, 1, 1, 0),
    "R5_2_2_M": (5, 7, 4, 2, 2, 0),
    "R7_2_2": (7, 7, 6, 2, 2, 0),
    "R4_2_2": (5, 8, 6, 2, 2, 1),
    "R4_2_2_M": (5, 7, 4, 2, 2, 1),
    "R7_3_3": (7, 7, 6, 3, 4, 0),
}
SUITE = tuple(TARGETS)
EXTRAS = ("fig1", "trap_lock", "trap_fork")
GOAL = "dT"
PHI = ("isOpen", "isReached")


@dataclass(frozen=True)
class Features:
    rooms: int
    buttons: int
    doors: int
    nu: int
    mu: int
    init: int

    def as_tuple(self) -> tuple[int, ...]:
        return (self.rooms, self.buttons, self.doors, self.nu, self.mu, self.init)


def measure_features(level: Level) -> Features:
    """Recount (rooms, buttons, doors, nu, mu, init) straight from the grid and wiring.

    Rooms are 4-connected floor regions with every door cell treated as wall.
    """
    doors = {o.cell for o in level.objects if o.is_door}
    seen: set = set()
    rooms = 0
    for r in range(level.height):
        for c in range(level.width):
            if (r, c) in seen or (r, c) in doors or level.grid[r][c] is not CellKind.FLOOR:
                continue
            rooms += 1
            seen.add((r, c))
            queue = deque([(r, c)])
            while queue:
                y, x = queue.popleft()
                for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                    if ((ny, nx) not in seen and (ny, nx) not in doors
                            and level.grid[ny][nx] is CellKind.FLOOR):
                        seen.add((ny, nx))
                        queue.append((ny, nx))
    buttons = [o.id for o in level.objects if not o.is_door]
    door_ids = [o.id for o in level.objects if o.is_door]
    nu = max((sum(1 for b, _ in level.wiring if b == i) for i in buttons), default=0)
    mu = max((sum(1 for _, d in level.wiring if d == o) for o in door_ids), default=0)
    return Features(rooms, len(buttons), len(door_ids), nu, mu, len(level.init_open))


def level_text(name: str) -> str:
    return resources.files(__package__).joinpath("levels", f"{name}.level").read_text()


def load_named(name: str) -> Level:
    return parse_level(level_text(name), name)


def suite_task(level: Level | None = None) -> TestingTask:
    return TestingTask(GOAL, PHI)


def generate_suite(out_dir: str | Path) -> list[Path]:
    """Write the replicas, fig1 and the trap levels after checking each one.

    Raises AssertionError if a replica drifts from its target tuple or any
    level is not solvable; nothing is written in that case.
    """
    texts = {}
    for name in SUITE + EXTRAS:
        text = level_text(name)
        level = parse_level(text, name)
        if name in TARGETS:
            got = measure_features(level).as_tuple()
            assert got == TARGETS[name], f"{name}: features {got} != {TARGETS[name]}"
        ok, _ = oracle_solvable(level, suite_task(level))
        assert ok, f"{name}: goal not reachable"
        texts[name] = text
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in texts.items():
        path = out / f"{name}.level"
        path.write_text(text)
        written.append(path)
    return written


# --- small levels for the oracle comparison --------------------------------------

_SMALL_GRID = """\
###############
#@...#...#....#
#.A..1.B.2..C.#
#....#...#....#
#.D..#...#....#
##T############
#.....E.......#
###############
"""

# (wiring, initially open doors, solvable) over buttons b1..b5 and doors d1, d2, dT
_SMALL_WIRINGS: tuple[tuple[str, str, bool], ...] = (
    ("b1 -> dT", "", True),
    ("b4 -> dT", "", True),
    ("b3 -> dT\nb1 -> d1\nb2 -> d2", "", True),
    ("b2 -> dT\nb1 -> d1", "", True),
    ("b3 -> dT\nb1 -> d1", "", False),
    ("b3 -> dT\nb2 -> d2", "", False),
    ("b1 -> d1 dT", "", True),
    ("b2 -> d1 dT\nb1 -> d1", "", False),
    ("b3 -> dT d2\nb1 -> d1\nb2 -> d2", "", False),
    ("b3 -> dT d1\nb1 -> d1\nb2 -> d1 d2", "", True),
    ("b1 -> d1\nb2 -> d2", "", False),
    ("", "", False),
    ("", "dT", True),
    ("b1 -> dT", "dT", True),
    ("b3 -> dT", "d1 d2", True),
    ("b3 -> dT", "d1", False),
    ("b2 -> dT", "d1", True),
    ("b2 -> dT\nb1 -> d1", "d1", True),
    ("b5 -> dT\nb1 -> d1", "", False),
    ("b3 -> dT\nb2 -> d1 d2\nb1 -> d1", "", True),
)


def small_levels() -> list[tuple[Level, bool]]:
    """Twenty three-door levels sharing one map; each paired with its authored solvability.

    ``b5`` sits beyond the goal door, so wiring the goal to it alone is a dead end.
    """
    out = []
    for k, (wiring, opened, solvable) in enumerate(_SMALL_WIRINGS):
        objs = ["A = button b1", "B = button b2", "C = button b3", "D = button b4",
                "E = button b5"]
        for marker, did in (("1", "d1"), ("2", "d2"), ("T", "dT")):
            objs.append(f"{marker} = door {did}" + (" open" if did in opened.split() else ""))
        text = (f"[grid]\n{_SMALL_GRID}[objects]\n" + "\n".join(objs)
                + f"\n[wiring]\n{wiring}\n[meta]\nradius = 4\n")
        out.append((parse_level(text, f"small_{k:02d}"), solvable))
    return out
