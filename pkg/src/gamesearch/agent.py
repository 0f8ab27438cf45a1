"""Online search agents: the model-exploiting search, its model-blind variant, and random."""

from __future__ import annotations

import enum
import random
from dataclasses import asdict, dataclass, field
from typing import Iterable

from . import navigation
from .model import Model, Tag
from .navigation import NavGraph, NavResult, bfs_distances, navigate_to
from .world import Cell, Game, Level, Observation, chebyshev, euclid

ATOMS = ("isOpen", "isClosed", "isReached")


class Mode(enum.Enum):
    SEARCH = "search"
    BASIC = "basic"
    RANDOM = "random"


class Verdict(enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"
    ABORTED = "Aborted"


class BudgetExceeded(Exception):
    pass


class NoCandidate(LookupError):
    pass


def parse_atoms(text: str | Iterable[str] | None) -> tuple[str, ...]:
    if text is None:
        return ()
    if isinstance(text, str):
        text = text.replace("&", ",").split(",")
    atoms = tuple(a.strip() for a in text if a.strip() and a.strip() != "true")
    for a in atoms:
        if a not in ATOMS:
            raise ValueError(f"unsupported predicate atom {a!r}; expected one of {ATOMS}")
    return atoms


@dataclass(frozen=True)
class TestingTask:
    """Reach a configuration where every ``phi`` atom holds on ``goal``, then check ``psi``."""

    __test__ = False

    goal: str
    phi: tuple[str, ...] = ("isOpen",)
    psi: tuple[str, ...] = ()
    approx_goal: Cell | None = None

    def __post_init__(self):
        object.__setattr__(self, "phi", parse_atoms(self.phi))
        object.__setattr__(self, "psi", parse_atoms(self.psi))


def atoms_hold(atoms: Iterable[str], is_open: bool | None, reached: bool) -> bool:
    for a in atoms:
        if a == "isOpen" and is_open is not True:
            return False
        if a == "isClosed" and is_open is not False:
            return False
        if a == "isReached" and not reached:
            return False
    return True


@dataclass
class RunStats:
    total_steps: int = 0
    exploration_steps: int = 0
    tried_doors: list[str] = field(default_factory=list)
    interactions: int = 0
    verdict: Verdict | None = None
    step_limit: int = 0
    step_limit_hit: bool = False

    @property
    def exploration_fraction(self) -> float:
        return self.exploration_steps / self.total_steps if self.total_steps else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict.value if self.verdict else None
        d["exploration_fraction"] = round(self.exploration_fraction, 6)
        return d


class Trace:
    """Line log: ``TICK <n> <KIND> <details>``."""

    def __init__(self):
        self.lines: list[str] = []

    def emit(self, tick: int, kind: str, details: str = "") -> None:
        self.lines.append(f"TICK {tick} {kind} {details}".rstrip())

    def text(self) -> str:
        return "\n".join(self.lines) + ("\n" if self.lines else "")


def step_limit_for(level: Level) -> int:
    """Hard tick cap: |cells| x |objects| x 10."""
    return level.height * level.width * max(1, len(level.objects)) * 10


class AgentContext:
    def __init__(self, level: Level, mode: Mode = Mode.SEARCH, radius: float | None = None,
                 step_limit: int | None = None):
        self.level = level
        self.mode = Mode(mode)
        self.game = Game(level, radius)
        self.nav = NavGraph()
        self.model = Model(level.agent_start)
        self.marks_global: set[str] = set()
        self.marks_per_target: dict[str, set[str]] = {}
        self.stats = RunStats(step_limit=step_limit if step_limit is not None else step_limit_for(level))
        self.trace = Trace()
        self.at: str | None = None
        self.heading: str | None = None
        self.fresh: list[str] = []
        self.visible_now: set[str] = set()
        self.last_interacted: str | None = None
        self.last_obs: Observation | None = None
        self.unstuck_key: tuple | None = None

    # --- primitives -----------------------------------------------------------------

    @property
    def agent_cell(self) -> Cell:
        return self.game.config.agent_cell

    @property
    def tick(self) -> int:
        return self.game.tick

    def start(self) -> None:
        self.trace.emit(self.tick, "OBS", "start")
        self._absorb(self.game.observe())

    def _spend(self) -> None:
        if self.tick >= self.stats.step_limit:
            self.stats.step_limit_hit = True
            raise BudgetExceeded(self.tick)

    def move(self, direction: str) -> bool:
        self._spend()
        obs = self.game.move(direction)
        self.trace.emit(self.tick, "MOVE", f"{direction} {obs.agent_cell[0]},{obs.agent_cell[1]}")
        self.stats.total_steps = self.tick
        return self._absorb(obs)

    def interact(self, obj_id: str, purpose: str = "-") -> bool:
        self._spend()
        # a press from a doorway or out of reach does nothing; keep it out of the inference log
        if chebyshev(self.agent_cell, self.cell_of(obj_id)) <= 1 and self.agent_cell not in self.nav.door_cells:
            self.model.note_interaction(obj_id)
        obs = self.game.interact(obj_id)
        self.stats.interactions += 1
        self.stats.total_steps = self.tick
        self.last_interacted = obj_id
        self.trace.emit(self.tick, "INTERACT", f"{obj_id} for={purpose}")
        return self._absorb(obs)

    def _absorb(self, obs: Observation) -> bool:
        self.last_obs = obs
        new_map = self.nav.integrate(obs)
        self.visible_now = {o.id for o, _ in obs.visible_objects}
        if self.heading is not None and chebyshev(obs.agent_cell, self.nav.objects[self.heading].cell) <= 1:
            self.at = self.heading
        elif self.at is not None and chebyshev(obs.agent_cell, self.nav.objects[self.at].cell) > 1:
            self.at = None
        if self.mode is not Mode.RANDOM:
            n_conn = len(self.model.connections)
            new = self.model.update_state_graph(obs, self.at, self.nav,
                                                learn_connections=self.mode is Mode.SEARCH)
            if len(self.model.connections) != n_conn:
                for tick, i, o in self.model.connection_log[n_conn:]:
                    self.trace.emit(self.tick, "OBS", f"conn {i}->{o}")
            if new:
                self.fresh.extend(new)
                self.trace.emit(self.tick, "OBS", "new " + ",".join(new))
        elif new_map:
            seen = [o.id for o, _ in obs.visible_objects]
            self.trace.emit(self.tick, "OBS", "seen " + ",".join(seen))
        return new_map

    def take_fresh(self) -> list[str]:
        fresh, self.fresh = self.fresh, []
        return fresh

    def cell_of(self, obj_id: str) -> Cell:
        return self.nav.objects[obj_id].cell

    def believed_open(self, obj_id: str) -> bool | None:
        return self.nav.door_open.get(obj_id)

    def explore(self) -> bool:
        start = self.tick
        self.trace.emit(start, "EXPLORE", "begin")
        found = False
        try:
            found = navigation.explore(self)
        finally:
            self.stats.exploration_steps += self.tick - start
            self.trace.emit(self.tick, "EXPLORE", f"end {'new' if found else 'exhausted'}")
        return found

    def go(self, obj_id: str) -> NavResult:
        self.heading = obj_id
        try:
            res = navigate_to(self, self.cell_of(obj_id), within=1)
        finally:
            self.heading = None
        if res.arrived:
            self.at = obj_id
        return res

    def phi_holds(self, task: TestingTask) -> bool:
        if task.goal not in self.nav.objects:
            return False
        reached = chebyshev(self.agent_cell, self.cell_of(task.goal)) <= 1
        return atoms_hold(task.phi, self.believed_open(task.goal), reached)

    def psi_holds(self, task: TestingTask) -> bool:
        """Assertion over the true final configuration."""
        goal = self.level.object(task.goal)
        cfg = self.game.config
        is_open = (goal.id in cfg.open_doors) if goal.is_door else None
        return atoms_hold(task.psi, is_open, chebyshev(cfg.agent_cell, goal.cell) <= 1)

    def reachable_now(self, obj_id: str, region: dict[Cell, int] | None = None) -> bool:
        if region is None:
            region = bfs_distances(self.agent_cell, self.nav.passable())
        cell = self.cell_of(obj_id)
        return any((cell[0] + dr, cell[1] + dc) in region for dr in (-1, 0, 1) for dc in (-1, 0, 1))


# --- policies ---------------------------------------------------------------------

def select_node(ctx: AgentContext, task: TestingTask, fresh: Iterable[str] = ()) -> str:
    """Pick the next state to travel to.

    The goal wins whenever it is known. Otherwise unmarked states are ranked:
    new blockers, then blockers currently in view, new interactables, older
    blockers, older interactables; within a tier by distance to the approximate
    goal position (if given), then to the agent, then by id.
    """
    model = ctx.model
    if task.goal in model.states:
        return task.goal
    fresh = set(fresh)
    candidates = [s for s in model.states if s not in ctx.marks_global]
    if not candidates:
        raise NoCandidate()

    def key(sid: str):
        st = model.states[sid]
        blocker = st.tag is Tag.BLOCKER
        if sid in fresh:
            tier = 0 if blocker else 2
        elif blocker:
            tier = 1 if sid in ctx.visible_now else 3
        else:
            tier = 4
        goal_d = euclid(task.approx_goal, st.cell) if task.approx_goal is not None else 0.0
        return (tier, goal_d, euclid(ctx.agent_cell, st.cell), sid)

    return min(candidates, key=key)


def reach(ctx: AgentContext, target: str) -> bool:
    """Travel next to ``target``; when the route is severed, try to unstuck and retry."""
    tried: set[str] = set()
    attempts = 0
    while True:
        res = ctx.go(target)
        if res.arrived:
            return True
        if ctx.mode is Mode.RANDOM or res.door is None:
            return False
        if attempts >= max(1, len(ctx.nav.door_cells)):
            return False
        attempts += 1
        if not unstuck(ctx, target, tried):
            return False


def _touch(ctx: AgentContext, interactable: str, purpose: str) -> bool:
    if not ctx.go(interactable).arrived:
        return False
    ctx.interact(interactable, purpose)
    return True


def _boundary_doors(ctx: AgentContext, region: dict[Cell, int]) -> list[str]:
    out = []
    for cell, door in ctx.nav.door_cells.items():
        if ctx.nav.door_open.get(door):
            continue
        if any((cell[0] + dr, cell[1] + dc) in region for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1))):
            out.append(door)
    return sorted(out)


def _destination_zones(ctx: AgentContext, destination: str | Cell) -> set[str]:
    model = ctx.model
    if isinstance(destination, str):
        zones = set(model.zones_of(destination))
        if zones:
            return zones
        destination = ctx.cell_of(destination)
    zone = model.zone_of_cell(destination, ctx.nav)
    return {zone} if zone else set()


def unstuck(ctx: AgentContext, destination: str | Cell, tried: set[str]) -> bool:
    """Reopen a way out of the region the agent is locked in.

    Search mode ranks the closed doors on the region boundary by how few zone
    hops separate their far side from the destination, tries their known
    enablers first and then any other reachable interactable. Basic mode only
    re-toggles the interactable it used last, once.
    """
    dest_label = destination if isinstance(destination, str) else f"{destination[0]},{destination[1]}"
    ctx.trace.emit(ctx.tick, "UNSTUCK", f"begin {dest_label}")
    ok = _unstuck(ctx, destination, tried)
    ctx.trace.emit(ctx.tick, "UNSTUCK", f"end {'recovered' if ok else 'exhausted'}")
    return ok


def _unstuck(ctx: AgentContext, destination: str | Cell, tried: set[str]) -> bool:
    if ctx.mode is Mode.BASIC:
        last = ctx.last_interacted
        if last is None or last in tried:
            return False
        tried.add(last)
        return _touch(ctx, last, "unstuck")

    nav, model = ctx.nav, ctx.model
    region = bfs_distances(ctx.agent_cell, nav.passable())
    boundary = _boundary_doors(ctx, region)
    if not boundary:
        return False
    labels = nav.door_free_components()
    region_labels = {labels[c] for c in region if c in labels}
    here = {z.id for z in model.zones.values() if any(labels.get(a) in region_labels for a in z.anchors)}
    dest_zones = _destination_zones(ctx, destination)

    def rank(door: str):
        far = set(model.zones_of(door)) - here
        hops = [model.zone_distance(f, d) for f in far for d in dest_zones]
        hops = [h for h in hops if h is not None]
        k = min(hops) if hops else len(model.zones) + 1
        return (k, euclid(ctx.agent_cell, nav.objects[door].cell), door)

    ranked = sorted(boundary, key=rank)
    plan: list[tuple[str, str | None]] = []
    for door in ranked:
        for i in model.connected_enablers(door, ctx.agent_cell):
            if i not in tried and ctx.reachable_now(i, region):
                plan.append((i, door))
    others = sorted((i for i in model.interactables() if i not in tried and ctx.reachable_now(i, region)),
                    key=lambda i: (euclid(ctx.agent_cell, model.states[i].cell), i))
    plan += [(i, None) for i in others]
    done: set[str] = set()
    for i, door in plan:
        if i in done or i in tried:
            continue
        done.add(i)
        tried.add(i)
        if not _touch(ctx, i, "unstuck"):
            continue
        check = door if door is not None else ranked[0]
        if check not in ctx.visible_now:
            ctx.go(check)
        if any(nav.door_open.get(d) for d in boundary):
            return True
    return False


def dynamic_goal(ctx: AgentContext, target: str, eta: tuple[str, ...] = ("isOpen",)) -> bool:
    """Try untried interactables until ``target`` satisfies ``eta``. Returns False on abort."""
    model = ctx.model
    ctx.stats.tried_doors.append(target)
    ctx.trace.emit(ctx.tick, "GOALPUSH", target)
    marks = ctx.marks_per_target[target] = set()
    solved = False

    def satisfied() -> bool:
        reached = chebyshev(ctx.agent_cell, ctx.cell_of(target)) <= 1
        return atoms_hold(eta, ctx.believed_open(target), reached)

    try:
        while not satisfied():
            delta: list[str] = []
            if ctx.mode is Mode.SEARCH:
                delta = [i for i in model.connected_enablers(target, ctx.agent_cell) if i not in marks]
            if not delta:
                delta = [i for i in model.interactables() if i not in marks and model.has_edge(i, target)]
            if not delta:
                delta = [i for i in model.interactables() if i not in marks]
            if not delta:
                if ctx.explore():
                    continue
                return False
            i = min(delta, key=lambda s: (euclid(ctx.agent_cell, model.states[s].cell), s))
            marks.add(i)
            ctx.trace.emit(ctx.tick, "MARK", f"{i} for={target}")
            if not reach(ctx, i):
                continue
            ctx.interact(i, target)
            reach(ctx, target)
        solved = True
        return True
    finally:
        del ctx.marks_per_target[target]
        ctx.trace.emit(ctx.tick, "GOALPOP", f"{target} {'solved' if solved else 'aborted'}")


# --- the online search ----------------------------------------------------------------

def _knowledge_key(ctx: AgentContext) -> tuple[int, int]:
    return (len(ctx.model.interactables()), len(ctx.model.connections))


def online_search(task: TestingTask, ctx: AgentContext) -> tuple[Verdict, Model, RunStats]:
    """Search the live game for a configuration satisfying the task's goal predicate.

    Each iteration folds the latest observation into the model, then either
    travels to a selected state (unblocking it when it is a closed door), or
    explores, or falls back to recovery moves; it aborts when none apply.
    """
    ctx.start()
    attempts: dict[str, tuple[int, int]] = {}
    try:
        while not ctx.phi_holds(task):
            fresh = ctx.take_fresh()
            choice = None
            goal_ready = task.goal in ctx.model.states and attempts.get(task.goal) != _knowledge_key(ctx)
            if fresh or goal_ready:
                choice = _select(ctx, task, fresh)
            if choice is None:
                if ctx.explore():
                    continue
                choice = _select(ctx, task, ())
            retry = False
            if choice is None:
                choice = _fallback(ctx, task, attempts)
                if choice == "":
                    continue
                retry = choice is not None
            if choice is None:
                ctx.trace.emit(ctx.tick, "ABORT", "no options")
                ctx.stats.verdict = Verdict.ABORTED
                return ctx.stats.verdict, ctx.model, ctx.stats
            _visit(ctx, task, choice, attempts, retry)
    except BudgetExceeded:
        ctx.trace.emit(ctx.tick, "ABORT", "step limit")
        ctx.stats.verdict = Verdict.ABORTED
        return ctx.stats.verdict, ctx.model, ctx.stats
    ctx.stats.verdict = Verdict.PASS if ctx.psi_holds(task) else Verdict.FAIL
    ctx.trace.emit(ctx.tick, "DONE", ctx.stats.verdict.value)
    return ctx.stats.verdict, ctx.model, ctx.stats


def _select(ctx: AgentContext, task: TestingTask, fresh) -> str | None:
    goal_known = task.goal in ctx.model.states
    try:
        choice = select_node(ctx, task, fresh)
    except NoCandidate:
        return None
    if choice == task.goal and goal_known and task.goal in ctx.marks_global and not fresh:
        # goal already worked on with the current knowledge; look at other states
        others = [s for s in ctx.model.states if s not in ctx.marks_global and s != task.goal]
        if not others:
            return None
        saved = ctx.model.states.pop(task.goal)
        try:
            choice = select_node(ctx, task, fresh)
        finally:
            ctx.model.states[task.goal] = saved
    return choice


def _visit(ctx: AgentContext, task: TestingTask, choice: str, attempts: dict,
           retry: bool = False) -> None:
    ctx.marks_global.add(choice)
    ctx.trace.emit(ctx.tick, "MARK", choice + (" retry" if retry else ""))
    blocker = ctx.model.states[choice].tag is Tag.BLOCKER
    if choice == task.goal:
        attempts[choice] = _knowledge_key(ctx)
        reach(ctx, choice)
        if not ctx.phi_holds(task):
            dynamic_goal(ctx, choice, task.phi)
        return
    reach(ctx, choice)
    if blocker and not ctx.believed_open(choice):
        attempts[choice] = _knowledge_key(ctx)
        dynamic_goal(ctx, choice, ("isOpen",))


def _fallback(ctx: AgentContext, task: TestingTask, attempts: dict) -> str | None:
    """Recovery when nothing new is in view and no frontier is reachable.

    Returns ``""`` after a successful unstuck toward unexplored terrain, a closed
    door worth another attempt (new knowledge since the last one), or None.
    """
    nav = ctx.nav
    key = (nav.version, _knowledge_key(ctx))
    region = bfs_distances(ctx.agent_cell, nav.passable())
    locked_out = [c for c in nav.frontier if c not in region]
    if locked_out and ctx.unstuck_key != key:
        ctx.unstuck_key = key
        target = min(locked_out, key=lambda c: (euclid(ctx.agent_cell, c), c))
        if unstuck(ctx, target, set()):
            return ""
    return _retry_door(ctx, task, attempts)


def _retry_door(ctx: AgentContext, task: TestingTask, attempts: dict) -> str | None:
    key = _knowledge_key(ctx)
    region = bfs_distances(ctx.agent_cell, ctx.nav.passable())
    doors = [d for d in ctx.model.blockers()
             if not ctx.believed_open(d) and attempts.get(d) != key and d != task.goal
             and ctx.reachable_now(d, region)]
    if not doors:
        return None
    # handed straight to _visit, so the global marks stay untouched
    return min(doors, key=lambda d: (euclid(ctx.agent_cell, ctx.cell_of(d)), d))


# --- random baseline -----------------------------------------------------------

def random_agent(task: TestingTask, ctx: AgentContext, budget_steps: int, seed: int
                 ) -> tuple[Verdict, set[tuple[str, str]], RunStats]:
    """Alternate exploring with toggling a random (button, door) pair until the budget runs out."""
    if budget_steps <= 0:
        raise ValueError("budget_steps must be positive")
    rng = random.Random(seed)
    ctx.stats.step_limit = budget_steps
    connections: set[tuple[str, str]] = set()
    ctx.start()
    idle = 0
    try:
        while not _random_done(ctx, task):
            before_tick = ctx.tick
            explored = ctx.explore()
            buttons = sorted(o for o, obj in ctx.nav.objects.items() if not obj.is_door)
            doors = sorted(o for o, obj in ctx.nav.objects.items() if obj.is_door)
            if buttons and doors:
                b, d = rng.choice(buttons), rng.choice(doors)
                before = ctx.believed_open(d)
                ctx.trace.emit(ctx.tick, "MARK", f"{b} for={d}")
                if ctx.go(b).arrived:
                    ctx.interact(b, d)
                    ctx.go(d)
                    if ctx.believed_open(d) != before:
                        connections.add((b, d))
                        ctx.trace.emit(ctx.tick, "OBS", f"conn {b}->{d}")
            if task.goal in ctx.nav.objects and not _random_done(ctx, task) and ctx.phi_holds(
                    TestingTask(task.goal, tuple(a for a in task.phi if a != "isReached"))):
                ctx.go(task.goal)
            if ctx.tick == before_tick and not explored:
                idle += 1
                if idle > 50:
                    break
            else:
                idle = 0
    except BudgetExceeded:
        pass
    if _random_done(ctx, task):
        ctx.stats.verdict = Verdict.PASS if ctx.psi_holds(task) else Verdict.FAIL
    else:
        ctx.stats.verdict = Verdict.FAIL
    ctx.trace.emit(ctx.tick, "DONE", ctx.stats.verdict.value)
    return ctx.stats.verdict, connections, ctx.stats


def _random_done(ctx: AgentContext, task: TestingTask) -> bool:
    return ctx.phi_holds(task)
