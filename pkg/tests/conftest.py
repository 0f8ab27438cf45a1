import pytest

from gamesearch.suite import load_named


@pytest.fixture
def fig1():
    return load_named("fig1")


def make_level(grid: str, objects: str = "", wiring: str = "", meta: str = ""):
    from gamesearch.world import parse_level

    text = f"[grid]\n{grid.strip()}\n[objects]\n{objects}\n[wiring]\n{wiring}\n[meta]\n{meta}\n"
    return parse_level(text, "t")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
