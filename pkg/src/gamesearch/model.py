"""The hybrid EFSM built during a run: states are game objects, transitions are
physical travel or interaction, zones group states reachable with every door shut,
and the connection table records which button was seen to toggle which door.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import asdict, dataclass, field

from .navigation import NEIGHBOURS, NavGraph, path_with_blockers_as_walls
from .world import Cell, CellKind, Level, Observation, euclid, sight_line


class Tag(enum.Enum):
    INTERACTABLE = "Interactable"
    BLOCKER = "Blocker"


class Label(enum.Enum):
    NAVIGATE = "navigateTo"
    INTERACT = "interact"


class UnknownZone(KeyError):
    pass


@dataclass
class ModelState:
    object_id: str
    tag: Tag
    cell: Cell
    is_open: bool | None = None


@dataclass(frozen=True, order=True)
class Transition:
    src: str
    label: Label
    dst: str


@dataclass
class Zone:
    id: str
    members: set[str] = field(default_factory=set)
    # cells known to lie inside the zone; used as reference points for path checks
    anchors: list[Cell] = field(default_factory=list)


class Model:
    def __init__(self, start: Cell | None = None):
        self.states: dict[str, ModelState] = {}
        self.transitions: set[Transition] = set()
        self.zones: dict[str, Zone] = {}
        self.connections: set[tuple[str, str]] = set()
        # pairs shown not to be wired; never dumped, only used for inference
        self.unwired: set[tuple[str, str]] = set()
        self.c0 = start
        self.transition_log: list[tuple[int, str, str]] = []
        self.connection_log: list[tuple[int, str, str]] = []
        self._interactions: list[str] = []
        self._seen_at: dict[str, int] = {}
        self._nav_version = -1

    # --- queries ---------------------------------------------------------------

    def interactables(self) -> list[str]:
        return sorted(s for s, st in self.states.items() if st.tag is Tag.INTERACTABLE)

    def blockers(self) -> list[str]:
        return sorted(s for s, st in self.states.items() if st.tag is Tag.BLOCKER)

    def zones_of(self, obj_id: str) -> list[str]:
        return [z.id for z in self.zones.values() if obj_id in z.members]

    def alpha(self, interactable: str) -> set[str]:
        """Predicted doors toggled by interacting with ``interactable`` (lookup over P)."""
        return {o for i, o in self.connections if i == interactable}

    def connected_enablers(self, obj_id: str, agent_cell: Cell) -> list[str]:
        found = [i for i, o in self.connections if o == obj_id and i in self.states]
        return sorted(found, key=lambda i: (euclid(agent_cell, self.states[i].cell), i))

    def has_edge(self, src: str, dst: str) -> bool:
        return Transition(src, Label.NAVIGATE, dst) in self.transitions

    def _zone(self, zone_id: str) -> Zone:
        try:
            return self.zones[zone_id]
        except KeyError:
            raise UnknownZone(zone_id) from None

    def neighbor(self, r1: str, r2: str) -> bool:
        z1, z2 = self._zone(r1), self._zone(r2)
        if r1 == r2:
            return False
        return any(self.states[b].tag is Tag.BLOCKER for b in z1.members & z2.members)

    def room_reachability(self, k: int, r1: str, r2: str) -> bool:
        """True iff a walk of 1..k neighbour steps leads from zone ``r1`` to ``r2``.

        A zone reaches itself only via a round trip, so never at k = 1.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        self._zone(r1)
        self._zone(r2)
        layer = {r1}
        seen: set[str] = set()
        for _ in range(k):
            layer = {z for cur in layer for z in self.zones if self.neighbor(cur, z)} - seen
            if r2 in layer:
                return True
            if not layer:
                return False
            seen |= layer
        return False

    def zone_distance(self, r1: str, r2: str, limit: int | None = None) -> int | None:
        """Fewest neighbour steps from ``r1`` to ``r2`` (0 when equal), or None."""
        if r1 == r2:
            return 0
        dist = {r1: 0}
        queue = deque([r1])
        while queue:
            cur = queue.popleft()
            if limit is not None and dist[cur] >= limit:
                continue
            for other in self.zones:
                if other not in dist and self.neighbor(cur, other):
                    dist[other] = dist[cur] + 1
                    if other == r2:
                        return dist[other]
                    queue.append(other)
        return None

    def zone_of_cell(self, cell: Cell, nav: NavGraph) -> str | None:
        """Zone whose reference cells share ``cell``'s door-free component."""
        labels = nav.door_free_components()
        label = labels.get(cell)
        if label is None:
            return None
        for zone in self.zones.values():
            if any(labels.get(a) == label for a in zone.anchors):
                return zone.id
        return None

    # --- construction ------------------------------------------------------------

    def note_interaction(self, interactable: str) -> None:
        self._interactions.append(interactable)

    def update_state_graph(self, obs: Observation, current: str | None, nav: NavGraph,
                           learn_connections: bool = True) -> list[str]:
        """Fold one observation into the model; returns the ids of newly added states.

        ``current`` is the state the agent is standing at (None between states).
        """
        new: list[str] = []
        for obj, state in obs.visible_objects:
            if obj.id not in self.states:
                tag = Tag.BLOCKER if obj.is_door else Tag.INTERACTABLE
                self.states[obj.id] = ModelState(obj.id, tag, obj.cell, state)
                new.append(obj.id)
                if tag is Tag.INTERACTABLE:
                    self.transitions.add(Transition(obj.id, Label.INTERACT, obj.id))
        if current is not None and current in self.states:
            self._add_travel_edges(obs, current)
        if new:
            self.assign_zone(new, current, nav, obs.agent_cell)
        if nav.version != self._nav_version or new:
            self._attach_blockers(nav)
            self._nav_version = nav.version
        self._refresh_blockers(obs, learn_connections)
        return new

    def _add_travel_edges(self, obs: Observation, current: str) -> None:
        cells = obs.cells
        closed = {o.cell for o, state in obs.visible_objects if o.is_door and not state}
        src = self.states[current].cell
        if src not in cells:
            return

        def blocking(cell: Cell) -> bool:
            return cells.get(cell, CellKind.WALL) is CellKind.WALL or cell in closed

        for obj, _ in obs.visible_objects:
            if obj.id == current:
                continue
            dr, dc = obj.cell[0] - src[0], obj.cell[1] - src[1]
            crossed, corners = sight_line(dr, dc)
            if any(blocking((src[0] + a, src[1] + b)) for a, b in crossed):
                continue
            if any(blocking((src[0] + x[0], src[1] + x[1])) and blocking((src[0] + y[0], src[1] + y[1]))
                   for x, y in corners):
                continue
            for a, b in ((current, obj.id), (obj.id, current)):
                t = Transition(a, Label.NAVIGATE, b)
                if t not in self.transitions:
                    self.transitions.add(t)
                    self.transition_log.append((obs.tick, a, b))

    def _new_zone(self, members: set[str], anchors: list[Cell]) -> Zone:
        zone = Zone(f"R{len(self.zones) + 1}", set(members), list(anchors))
        self.zones[zone.id] = zone
        return zone

    def assign_zone(self, new_states: list[str], current: str | None, nav: NavGraph,
                    agent_cell: Cell | None = None) -> None:
        """Place each new interactable in the first zone (current zone first) whose
        nearest reference cell reaches it with every door shut, else in a fresh zone.
        Blockers are attached to the zones on their sides by :meth:`_attach_blockers`.
        """
        order: list[str] = []
        if current is not None:
            order.extend(self.zones_of(current))
        if agent_cell is not None:
            here = self.zone_of_cell(agent_cell, nav)
            if here is not None and here not in order:
                order.append(here)
        order.extend(z for z in self.zones if z not in order)
        for sid in new_states:
            st = self.states[sid]
            if st.tag is Tag.BLOCKER:
                continue
            for zid in order:
                zone = self.zones[zid]
                if not zone.anchors:
                    continue
                ref = min(zone.anchors, key=lambda a: (euclid(a, st.cell), a))
                if path_with_blockers_as_walls(nav, ref, st.cell) is not None:
                    zone.members.add(sid)
                    zone.anchors.append(st.cell)
                    break
            else:
                zone = self._new_zone({sid}, [st.cell])
                order.append(zone.id)

    def _attach_blockers(self, nav: NavGraph) -> None:
        labels = nav.door_free_components()
        for bid in self.blockers():
            zones = self.zones_of(bid)
            if len(zones) >= 2:
                continue
            cell = self.states[bid].cell
            for dr, dc in (d for _, d in NEIGHBOURS):
                side = (cell[0] + dr, cell[1] + dc)
                label = labels.get(side)
                if label is None:
                    continue
                owner = None
                for zone in self.zones.values():
                    if any(labels.get(a) == label for a in zone.anchors):
                        owner = zone
                        break
                if owner is None:
                    owner = self._new_zone(set(), [side])
                if bid not in owner.members:
                    owner.members.add(bid)
                    zones.append(owner.id)
                if len(zones) >= 2:
                    break

    def _refresh_blockers(self, obs: Observation, learn_connections: bool) -> None:
        n = len(self._interactions)
        for obj, state in obs.visible_objects:
            if not obj.is_door:
                continue
            st = self.states[obj.id]
            since = self._interactions[self._seen_at.get(obj.id, n):]
            if learn_connections and st.is_open is not None and since:
                self._infer(obj.id, since, st.is_open != state, obs.tick)
            st.is_open = state
            self._seen_at[obj.id] = n

    def _infer(self, door: str, since: list[str], flipped: bool, tick: int) -> None:
        """Deduce wiring from a door's state change across a run of interactions.

        The door flips iff an odd number of the buttons pressed an odd number of
        times are wired to it. With all but one of those buttons already known,
        the remaining one is determined.
        """
        odd = sorted(i for i in set(since) if since.count(i) % 2 == 1)
        unknown = [i for i in odd if (i, door) not in self.connections and (i, door) not in self.unwired]
        if len(unknown) != 1:
            return
        parity = sum((i, door) in self.connections for i in odd) % 2
        if flipped != bool(parity):
            self.record_connection(unknown[0], {door}, tick=tick)
        else:
            self.unwired.add((unknown[0], door))

    def record_connection(self, interactable: str, affected, tick: int = -1) -> None:
        if self.states[interactable].tag is not Tag.INTERACTABLE:
            raise ValueError(f"{interactable} is not an interactable")
        for o in sorted(affected):
            if (interactable, o) not in self.connections:
                self.connections.add((interactable, o))
                self.connection_log.append((tick, interactable, o))

    # --- output ------------------------------------------------------------------

    def dump(self) -> str:
        lines = [f"STATE {s.object_id} {s.tag.value}" for s in self.states.values()]
        lines += [f"TRANS {t.src} {t.label.value} {t.dst}" for t in self.transitions]
        lines += [f"ZONE {z.id}: {','.join(sorted(z.members))}" for z in self.zones.values()]
        lines += [f"CONN {i} -> {o}" for i, o in self.connections]
        return "\n".join(sorted(lines)) + "\n"


def parse_dump(text: str) -> dict:
    """Read a model dump back into plain sets (for tests and offline inspection)."""
    out = {"states": {}, "transitions": set(), "zones": {}, "connections": set()}
    for line in text.splitlines():
        kind, _, rest = line.partition(" ")
        if kind == "STATE":
            sid, tag = rest.split()
            out["states"][sid] = tag
        elif kind == "TRANS":
            src, label, dst = rest.split()
            out["transitions"].add((src, label, dst))
        elif kind == "ZONE":
            zid, _, members = rest.partition(":")
            out["zones"][zid.strip()] = {m for m in members.strip().split(",") if m}
        elif kind == "CONN":
            i, _, o = rest.split()
            out["connections"].add((i, o))
    return out


# --- ground-truth comparison ----------------------------------------------------

@dataclass
class AccuracyReport:
    zones_found: int = 0
    zones_true: int = 0
    buttons_found: int = 0
    buttons_true: int = 0
    doors_found: int = 0
    doors_true: int = 0
    connections_found: int = 0
    connections_true: int = 0
    wrong_connections: int = 0
    wrong_room_buttons: int = 0
    wrong_room_doors: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def true_rooms(level: Level) -> dict[Cell, int]:
    """Room label per floor cell, flood-filling with every door as a wall."""
    door_cells = {d.cell for d in level.doors}
    labels: dict[Cell, int] = {}
    label = 0
    for cell in level.cells():
        if cell in labels or cell in door_cells or level.kind_at(cell) is not CellKind.FLOOR:
            continue
        labels[cell] = label
        queue = deque([cell])
        while queue:
            cur = queue.popleft()
            for _, (dr, dc) in NEIGHBOURS:
                nxt = (cur[0] + dr, cur[1] + dc)
                if nxt not in labels and nxt not in door_cells and level.kind_at(nxt) is CellKind.FLOOR:
                    labels[nxt] = label
                    queue.append(nxt)
        label += 1
    return labels


def door_rooms(level: Level, rooms: dict[Cell, int], cell: Cell) -> set[int]:
    return {rooms[(cell[0] + dr, cell[1] + dc)] for _, (dr, dc) in NEIGHBOURS
            if (cell[0] + dr, cell[1] + dc) in rooms}


def compare_to_ground_truth(model: Model, level: Level) -> AccuracyReport:
    rooms = true_rooms(level)
    zone_room = {z.id: rooms.get(z.anchors[0]) if z.anchors else None for z in model.zones.values()}
    wrong_b = wrong_d = 0
    for sid, st in model.states.items():
        mapped = {zone_room[z] for z in model.zones_of(sid)}
        if st.tag is Tag.INTERACTABLE:
            if len(mapped) != 1 or mapped != {rooms.get(st.cell)}:
                wrong_b += 1
        elif not mapped or not mapped <= door_rooms(level, rooms, st.cell):
            wrong_d += 1
    return AccuracyReport(
        zones_found=len(model.zones),
        zones_true=len(set(rooms.values())),
        buttons_found=len(model.interactables()),
        buttons_true=len(level.buttons),
        doors_found=len(model.blockers()),
        doors_true=len(level.doors),
        connections_found=len(model.connections),
        connections_true=len(level.wiring),
        wrong_connections=len(model.connections - level.wiring),
        wrong_room_buttons=wrong_b,
        wrong_room_doors=wrong_d,
    )
