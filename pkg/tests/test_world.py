import math

import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_level
from gamesearch.world import (
    CellKind, Game, NotInteractable, ParseError, UnknownObject, ValidationError, dump_level,
    init, interact, move_agent, observe, parse_level, replay, sight_line,
)


def test_fig1_parses_with_expected_wiring(fig1):
    assert len(fig1.buttons) == 4
    assert len(fig1.doors) == 3
    assert fig1.wiring == {("b2", "d1"), ("b3", "d1"), ("b3", "d2"), ("b4", "dT")}


def test_minimal_level_has_empty_wiring():
    lv = make_level("###\n#@#\n###")
    assert lv.wiring == frozenset()
    assert lv.objects == ()
    assert lv.radius == 4


def test_dangling_wiring_rejected():
    with pytest.raises(ValidationError):
        make_level("####\n#@1#\n####", "1 = door d1", "b9 -> d1")


@pytest.mark.parametrize("grid,objects,wiring", [
    ("###\n#@.\n###", "", ""),                       # border not wall
    ("####\n#@#\n####", "", ""),                     # ragged
    ("####\n#A.#\n####", "A = button b1", ""),       # no start, caught as parse error below
])
def test_bad_grids(grid, objects, wiring):
    with pytest.raises((ValidationError, ParseError)):
        make_level(grid, objects, wiring)


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError) as exc:
        parse_level("[grid]\n###\n#@#\n###\n[objects]\nA = lever x\n")
    assert exc.value.line == 6
    with pytest.raises(ParseError):
        parse_level("[grid]\n###\n#X#\n###\n")
    with pytest.raises(ParseError):
        parse_level("[bogus]\n")
    with pytest.raises(ParseError):
        parse_level("[grid]\n####\n#@B#\n####\n[objects]\nB = button b1 open\n")


def test_door_start_rejected():
    from dataclasses import replace

    lv = make_level("####\n#@1#\n####", "1 = door d1")
    with pytest.raises(ValidationError):
        replace(lv, agent_start=(1, 2)).validate()


def test_dump_roundtrip(fig1):
    again = parse_level(dump_level(fig1), "again")
    assert again.grid == fig1.grid
    assert {(o.id, o.cell) for o in again.objects} == {(o.id, o.cell) for o in fig1.objects}
    assert again.wiring == fig1.wiring
    assert again.radius == fig1.radius


def test_init(fig1):
    cfg = init(fig1)
    assert cfg.agent_cell == fig1.agent_start
    assert cfg.tick == 0
    assert cfg.door_open == {"d1": False, "d2": False, "dT": False}
    lv = make_level("#####\n#@.1#\n#####", "1 = door dA open")
    assert init(lv).door_open == {"dA": True}


def test_moves_and_blocked_moves():
    lv = make_level("######\n#@A1.#\n######", "A = button b1\n1 = door d1", "b1 -> d1")
    cfg = move_agent(init(lv), "E", lv)
    assert cfg.agent_cell == (1, 2) and cfg.tick == 1          # button cells are walkable
    cfg = move_agent(cfg, "E", lv)
    assert cfg.agent_cell == (1, 2) and cfg.tick == 2          # closed door blocks, tick still advances
    cfg = move_agent(cfg, "N", lv)
    assert cfg.agent_cell == (1, 2)
    cfg = interact(cfg, lv, "b1")
    cfg = move_agent(cfg, "E", lv)
    assert cfg.agent_cell == (1, 3)


def test_interaction_rules():
    lv = make_level("#######\n#@.A.1#\n#######", "A = button b1\n1 = door d1", "b1 -> d1")
    far = interact(init(lv), lv, "b1")
    assert far.open_doors == frozenset() and far.tick == 1   # out of reach: no effect
    near = init(lv)
    near = move_agent(near, "E", lv)
    near = interact(near, lv, "b1")
    assert near.open_doors == {"d1"}
    with pytest.raises(NotInteractable):
        interact(near, lv, "d1")
    with pytest.raises(UnknownObject):
        interact(near, lv, "zz")


def test_no_interaction_from_a_doorway():
    lv = make_level("######\n#@1..#\n##A###\n######", "A = button b1\n1 = door d1 open", "b1 -> d1")
    cfg = move_agent(init(lv), "E", lv)
    assert cfg.agent_cell == (1, 2)
    cfg = interact(cfg, lv, "b1")
    assert cfg.open_doors == {"d1"}


def test_observation_invariants(fig1):
    obs = observe(init(fig1), fig1)
    cells = obs.cells
    assert fig1.agent_start in cells
    for cell in cells:
        assert math.dist(cell, fig1.agent_start) <= fig1.radius
    seen = {o.id for o, _ in obs.visible_objects}
    assert seen == {"b1", "b2"}          # d1 sits just beyond radius 5
    obs = observe(move_agent(init(fig1), "E", fig1), fig1)
    assert obs.door_states() == {"d1": False}
    # the closed door hides everything behind it
    assert (2, 7) not in obs.cells


def test_open_door_reveals_far_side():
    lv = make_level("#######\n#@1...#\n#######", "1 = door d1 open")
    cells = observe(init(lv), lv).cells
    assert (1, 4) in cells
    lv2 = make_level("#######\n#@1...#\n#######", "1 = door d1")
    assert (1, 3) not in observe(init(lv2), lv2).cells


def test_infinite_radius_sees_whole_open_room():
    lv = make_level("#" * 30 + "\n#@" + "." * 27 + "#\n" + "#" * 30)
    assert (1, 28) in observe(init(lv), lv, math.inf).cells
    assert (1, 28) not in observe(init(lv), lv).cells


def test_game_history_replays(fig1):
    g = Game(fig1)
    for d in "EEESS":
        g.move(d)
    g.interact("b2")
    assert replay(fig1, g.history)[-1] == g.config


@given(st.integers(-9, 9), st.integers(-9, 9))
def test_sight_line_symmetric(dr, dc):
    crossed, corners = sight_line(dr, dc)
    back, back_corners = sight_line(-dr, -dc)
    assert {(dr + a, dc + b) for a, b in back} == set(crossed)
    shifted = {frozenset({(dr + a[0], dc + a[1]), (dr + b[0], dc + b[1])}) for a, b in back_corners}
    assert shifted == {frozenset(p) for p in corners}
    assert (0, 0) not in crossed and (dr, dc) not in crossed


_OPEN_GRID = "\n".join(["#########"] + ["#" + "." * 7 + "#"] * 5 + ["#########"])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 5), st.integers(1, 7)), min_size=2, max_size=8, unique=True),
       st.integers(1, 5), st.integers(1, 7), st.integers(1, 5), st.integers(1, 7))
def test_visibility_symmetric(walls, r1, c1, r2, c2):
    rows = [list(r) for r in _OPEN_GRID.splitlines()]
    for r, c in walls:
        if (r, c) not in ((r1, c1), (r2, c2)):
            rows[r][c] = "#"
    rows[r1][c1] = "@"
    grid = "\n".join("".join(r) for r in rows)
    lv = make_level(grid)
    if lv.kind_at((r2, c2)) is not CellKind.FLOOR or (r1, c1) == (r2, c2):
        return
    from gamesearch.world import visibility_for
    vis = visibility_for(lv, math.inf)
    a_sees_b = (r2, c2) in vis.visible((r1, c1), frozenset())
    b_sees_a = (r1, c1) in vis.visible((r2, c2), frozenset())
    assert a_sees_b == b_sees_a


@settings(max_examples=80, deadline=None)
@given(st.lists(st.sampled_from(["b1", "b2", "b3", "E", "W"]), max_size=30))
def test_door_state_is_press_parity(actions):
    lv = make_level("########\n#@ABC..#\n#..123.#\n########",
                    "A = button b1\nB = button b2\nC = button b3\n1 = door d1\n2 = door d2\n3 = door d3",
                    "b1 -> d1 d2\nb2 -> d2\nb3 -> d3 d1")
    history = [("move", a) if a in "EW" else ("interact", a) for a in actions]
    configs = replay(lv, history)
    counts = {"b1": 0, "b2": 0, "b3": 0}
    for (kind, arg), before in zip(history, configs):
        from gamesearch.world import can_interact_from
        if kind == "interact" and can_interact_from(lv, before.agent_cell, lv.object(arg).cell):
            counts[arg] += 1
    final = configs[-1]
    for door in ("d1", "d2", "d3"):
        presses = sum(counts[b] for b in lv.buttons_of(door))
        assert (door in final.open_doors) == (presses % 2 == 1)
    assert final.tick == len(actions)
