import itertools
import math
import random

import pytest

from gamesearch.agent import AgentContext, Mode, online_search
from gamesearch.model import (
    Model, ModelState, Tag, UnknownZone, Zone, compare_to_ground_truth, parse_dump,
)
from gamesearch.suite import SUITE, load_named, suite_task
from gamesearch.world import CellKind, replay, sight_line

FIG2_WIRING = {("b2", "d1"), ("b3", "d1"), ("b3", "d2"), ("b4", "dT")}


def solve(level, radius=None, mode=Mode.SEARCH):
    ctx = AgentContext(level, mode, radius)
    verdict, model, stats = online_search(suite_task(), ctx)
    return ctx, verdict, model


def test_fig2_model(fig1):
    _, verdict, model = solve(fig1)
    assert verdict.value == "Pass"
    dump = parse_dump(model.dump())
    assert set(dump["states"]) == {"b1", "b2", "b3", "b4", "d1", "d2", "dT"}
    assert {s for s, t in dump["states"].items() if t == "Blocker"} == {"d1", "d2", "dT"}
    for door in ("d1", "d2", "dT"):
        assert sum(door in m for m in dump["zones"].values()) == 2
    assert dump["connections"] == FIG2_WIRING
    # every interactable carries its self-loop
    for b in ("b1", "b2", "b3", "b4"):
        assert (b, "interact", b) in dump["transitions"]
    zone_of = {b: [z for z, m in dump["zones"].items() if b in m] for b in ("b1", "b2", "b3", "b4")}
    assert zone_of["b1"] == zone_of["b2"]
    assert len({zone_of["b2"][0], zone_of["b3"][0], zone_of["b4"][0]}) == 3


def test_dump_is_sorted_and_stable(fig1):
    _, _, m1 = solve(fig1)
    _, _, m2 = solve(fig1)
    text = m1.dump()
    assert text == m2.dump()
    lines = text.splitlines()
    assert lines == sorted(lines)
    assert any(line.startswith("CONN b4 -> dT") for line in lines)


def test_full_observability_p_sound():
    for name in SUITE + ("fig1", "trap_lock", "trap_fork"):
        lv = load_named(name)
        _, _, model = solve(lv, radius=math.inf)
        assert model.connections <= lv.wiring, name


def test_zone_partition_and_accuracy():
    for name in SUITE:
        lv = load_named(name)
        _, _, model = solve(lv)
        seen = {}
        for z in model.zones.values():
            for m in z.members:
                if model.states[m].tag is Tag.INTERACTABLE:
                    assert m not in seen, (name, m)
                    seen[m] = z.id
        for b in model.blockers():
            assert 1 <= len(model.zones_of(b)) <= 2
        acc = compare_to_ground_truth(model, lv)
        assert acc.buttons_found <= acc.buttons_true
        assert acc.doors_found <= acc.doors_true
        assert acc.wrong_connections >= 0


def _clear_line(level, a, b, open_doors) -> bool:
    crossed, corners = sight_line(b[0] - a[0], b[1] - a[1])

    def blocks(off):
        cell = (a[0] + off[0], a[1] + off[1])
        obj = level.object_at(cell)
        return level.kind_at(cell) is CellKind.WALL or (obj is not None and obj.is_door
                                                         and obj.id not in open_doors)

    return not any(blocks(c) for c in crossed) and not any(blocks(x) and blocks(y) for x, y in corners)


def test_transition_soundness_by_replay():
    for name in ("fig1", "R4_2_2", "R7_3_3", "trap_fork"):
        lv = load_named(name)
        ctx, _, model = solve(lv)
        configs = replay(lv, ctx.game.history)
        assert model.transition_log
        for tick, a, b in model.transition_log:
            cfg = configs[tick]
            ca, cb = lv.object(a).cell, lv.object(b).cell
            assert _clear_line(lv, ca, cb, cfg.open_doors), (name, tick, a, b)


def test_p_pairs_follow_observed_flips():
    """Every recorded pair is backed by a toggle of that button since the door was last seen."""
    for name in ("fig1", "R5_2_2_M", "R7_3_3"):
        lv = load_named(name)
        ctx, _, model = solve(lv)
        interacted = {line.split()[3] for line in ctx.trace.lines if " INTERACT " in line}
        for tick, i, o in model.connection_log:
            assert i in interacted
            assert (i, o) in lv.wiring


# --- reasoning rules on synthetic zone graphs ----------------------------------------

def synthetic_model(n_zones: int, edges: set[tuple[int, int]]) -> Model:
    m = Model()
    for k in range(n_zones):
        m.zones[f"R{k}"] = Zone(f"R{k}", set(), [(k, 0)])
    for n, (a, b) in enumerate(sorted(edges)):
        did = f"d{n}"
        m.states[did] = ModelState(did, Tag.BLOCKER, (n, 1))
        m.zones[f"R{a}"].members.add(did)
        m.zones[f"R{b}"].members.add(did)
    return m


def closure(n: int, edges: set[tuple[int, int]], k: int) -> set[tuple[int, int]]:
    adj = {(a, b) for a, b in edges} | {(b, a) for a, b in edges}
    reach = set(adj)
    for _ in range(k - 1):
        reach = reach | {(a, c) for a, b in reach for b2, c in adj if b == b2}
    return reach


def random_graphs(rng, count):
    for _ in range(count):
        n = rng.randint(1, 8)
        pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
        yield n, {p for p in pairs if rng.random() < 0.3}


def test_neighbor_symmetric_and_irreflexive():
    rng = random.Random(7)
    for n, edges in random_graphs(rng, 50):
        m = synthetic_model(n, edges)
        for a, b in itertools.product(range(n), repeat=2):
            ra, rb = f"R{a}", f"R{b}"
            assert m.neighbor(ra, rb) == m.neighbor(rb, ra)
            assert m.neighbor(ra, rb) == (a != b and (min(a, b), max(a, b)) in edges)


def test_room_reachability_equals_closure():
    rng = random.Random(11)
    for n, edges in random_graphs(rng, 60):
        m = synthetic_model(n, edges)
        for k in range(1, n + 2):
            want = closure(n, edges, k)
            for a, b in itertools.product(range(n), repeat=2):
                got = m.room_reachability(k, f"R{a}", f"R{b}")
                assert got == ((a, b) in want), (n, edges, k, a, b)
                if got:
                    assert m.room_reachability(k + 1, f"R{a}", f"R{b}")


def test_reasoner_errors():
    m = synthetic_model(2, {(0, 1)})
    with pytest.raises(UnknownZone):
        m.neighbor("R0", "R9")
    with pytest.raises(ValueError):
        m.room_reachability(0, "R0", "R1")
    assert m.alpha("b1") == set()
    m.states["b1"] = ModelState("b1", Tag.INTERACTABLE, (9, 9))
    m.record_connection("b1", {"d0"})
    assert m.alpha("b1") == {"d0"}
    with pytest.raises(ValueError):
        m.record_connection("d0", {"d0"})
