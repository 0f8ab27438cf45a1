"""Single runs, batch experiments and report emission."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .agent import AgentContext, Mode, TestingTask, Verdict, online_search, random_agent
from .model import compare_to_ground_truth
from .suite import measure_features
from .world import Level, ParseError, ValidationError, load_level

EXIT_CODES = {Verdict.PASS: 0, Verdict.FAIL: 1, Verdict.ABORTED: 2}
EXIT_MISSING = 10
EXIT_PARSE = 11
EXIT_INVALID = 12
EXIT_IO = 13
EXIT_SPEC = 14
EXIT_GOAL = 15


class HarnessError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def open_level(path: str | Path) -> Level:
    """Load a level file, mapping every failure onto a harness exit code."""
    try:
        return load_level(path)
    except FileNotFoundError:
        raise HarnessError(EXIT_MISSING, f"no such level file: {path}") from None
    except ParseError as exc:
        raise HarnessError(EXIT_PARSE, f"{path}: {exc}") from None
    except ValidationError as exc:
        raise HarnessError(EXIT_INVALID, f"{path}: {exc}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise HarnessError(EXIT_IO, f"{path}: {exc}") from None


@dataclass
class RunReport:
    level: str
    mode: str
    seed: int
    verdict: str
    stats: dict
    accuracy: dict
    model_dump: str = ""
    connections: list = field(default_factory=list)
    budget: int | None = None
    trace: str = field(default="", repr=False)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[Verdict(self.verdict)]

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "mode": self.mode,
            "seed": self.seed,
            "verdict": self.verdict,
            "exit_code": self.exit_code,
            "budget": self.budget,
            "stats": self.stats,
            "accuracy": self.accuracy,
            "connections": [list(c) for c in self.connections],
            "model": self.model_dump.splitlines(),
        }

    def to_text(self) -> str:
        rows = [("level", self.level), ("mode", self.mode), ("seed", str(self.seed)),
                ("verdict", self.verdict)]
        if self.budget is not None:
            rows.append(("budget", str(self.budget)))
        rows += [(k, _fmt(v)) for k, v in self.stats.items() if k != "verdict"]
        rows += [(k, _fmt(v)) for k, v in self.accuracy.items()]
        if self.connections:
            rows.append(("connections", " ".join(f"{i}->{o}" for i, o in self.connections)))
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows) + "\n"


def _fmt(value) -> str:
    if isinstance(value, list):
        return ",".join(map(str, value)) or "-"
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def _radius(level: Level, radius: float | None) -> float:
    return level.radius if radius is None else radius


def run_single(level: Level, task: TestingTask, mode: Mode | str = Mode.SEARCH, seed: int = 0,
               radius: float | None = None, budget: int | None = None) -> RunReport:
    """Run one agent on one level.

    For Random without an explicit budget, Search runs first and the budget is
    ceil(1.2 x its total_steps).
    """
    mode = Mode(mode)
    check_goal(level, task)
    if mode is Mode.RANDOM:
        if budget is None:
            budget = random_budget(level, task, radius)
        ctx = AgentContext(level, mode, _radius(level, radius))
        verdict, conns, stats = random_agent(task, ctx, budget, seed)
        accuracy = {
            "connections_found": len(conns),
            "connections_true": len(level.wiring),
            "wrong_connections": len(conns - level.wiring),
        }
        return RunReport(level.name, mode.value, seed, verdict.value, stats.to_dict(), accuracy,
                         connections=sorted(conns), budget=budget, trace=ctx.trace.text())
    ctx = AgentContext(level, mode, _radius(level, radius))
    verdict, model, stats = online_search(task, ctx)
    return RunReport(level.name, mode.value, seed, verdict.value, stats.to_dict(),
                     compare_to_ground_truth(model, level).to_dict(), model.dump(),
                     sorted(model.connections), trace=ctx.trace.text())


def check_goal(level: Level, task: TestingTask) -> None:
    if all(o.id != task.goal for o in level.objects):
        raise HarnessError(EXIT_GOAL, f"{level.name}: no object with id {task.goal!r}")


def random_budget(level: Level, task: TestingTask, radius: float | None = None) -> int:
    ctx = AgentContext(level, Mode.SEARCH, _radius(level, radius))
    _, _, stats = online_search(task, ctx)
    return max(1, math.ceil(1.2 * stats.total_steps))


# --- batch -------------------------------------------------------------------------

@dataclass
class LevelEntry:
    path: str
    goal: str = "dT"
    phi: str = "isOpen,isReached"
    psi: str = ""

    @property
    def task(self) -> TestingTask:
        return TestingTask(self.goal, self.phi, self.psi)


@dataclass
class ExperimentSpec:
    levels: list[LevelEntry]
    modes: tuple[str, ...] = ("search", "basic", "random")
    random_repeats: int = 10
    seed: int = 0
    radius: float | None = None

    def __post_init__(self):
        if self.random_repeats < 1:
            raise ValueError("random_repeats must be >= 1")
        self.modes = tuple(Mode(m).value for m in self.modes)

    @classmethod
    def from_dict(cls, data: dict, base: Path | None = None) -> "ExperimentSpec":
        entries = []
        for item in data["levels"]:
            if isinstance(item, str):
                item = {"path": item}
            path = Path(item["path"])
            if base is not None and not path.is_absolute():
                path = base / path
            entries.append(LevelEntry(str(path), item.get("goal", "dT"),
                                      item.get("phi", "isOpen,isReached"), item.get("psi", "")))
        radius = data.get("radius")
        if radius in ("inf", "infinity"):
            radius = math.inf
        return cls(entries, tuple(data.get("modes", ("search", "basic", "random"))),
                   int(data.get("random_repeats", 10)), int(data.get("seed", 0)), radius)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentSpec":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise HarnessError(EXIT_MISSING, f"no such spec file: {path}") from None
        except (OSError, json.JSONDecodeError) as exc:
            raise HarnessError(EXIT_SPEC, f"{path}: {exc}") from None
        try:
            return cls.from_dict(data, path.parent)
        except (KeyError, TypeError, ValueError) as exc:
            raise HarnessError(EXIT_SPEC, f"{path}: bad spec ({exc})") from None


def run_batch(spec: ExperimentSpec) -> dict:
    """Every level x mode cell. Errors are recorded per level and never stop the batch."""
    rows = []
    for entry in spec.levels:
        try:
            level = open_level(entry.path)
            check_goal(level, entry.task)
        except HarnessError as exc:
            rows.append({"level": Path(entry.path).stem, "error": str(exc), "exit_code": exc.code})
            continue
        task = entry.task
        row: dict = {"level": level.name, "goal": task.goal, "phi": ",".join(task.phi),
                     "features": list(measure_features(level).as_tuple())}
        search = None
        if "search" in spec.modes or "random" in spec.modes:
            search = run_single(level, task, Mode.SEARCH, spec.seed, spec.radius)
        if "search" in spec.modes:
            row["search"] = _cell(search)
        if "basic" in spec.modes:
            row["basic"] = _cell(run_single(level, task, Mode.BASIC, spec.seed, spec.radius))
        if "random" in spec.modes:
            budget = max(1, math.ceil(1.2 * search.stats["total_steps"]))
            runs = [run_single(level, task, Mode.RANDOM, spec.seed + k, spec.radius, budget)
                    for k in range(spec.random_repeats)]
            row["random"] = _random_cell(runs, budget)
        rows.append(row)
    return {"spec": _spec_summary(spec), "levels": rows, "summary": _summary(rows)}


def _cell(rep: RunReport) -> dict:
    return {"verdict": rep.verdict, "pass": int(rep.verdict == "Pass"), "stats": rep.stats,
            "accuracy": rep.accuracy, "connections": [list(c) for c in rep.connections]}


def _random_cell(runs: list[RunReport], budget: int) -> dict:
    n = len(runs)
    passes = sum(r.verdict == "Pass" for r in runs)
    return {
        "budget": budget,
        "runs": n,
        "passes": passes,
        "pass_rate": round(passes / n, 6),
        "verdicts": [r.verdict for r in runs],
        "mean_total_steps": round(sum(r.stats["total_steps"] for r in runs) / n, 6),
        "mean_connections_found": round(sum(r.accuracy["connections_found"] for r in runs) / n, 6),
        "mean_wrong_connections": round(sum(r.accuracy["wrong_connections"] for r in runs) / n, 6),
        "connections_true": runs[0].accuracy["connections_true"],
    }


def _spec_summary(spec: ExperimentSpec) -> dict:
    return {"levels": [Path(e.path).stem for e in spec.levels], "modes": list(spec.modes),
            "random_repeats": spec.random_repeats, "seed": spec.seed,
            "radius": None if spec.radius is None else str(spec.radius)}


def _summary(rows: list[dict]) -> dict:
    out: dict = {}
    for mode in ("search", "basic"):
        cells = [r[mode] for r in rows if mode in r]
        if cells:
            out[f"{mode}_passed"] = sum(c["pass"] for c in cells)
            out[f"{mode}_levels"] = len(cells)
    rand = [r["random"] for r in rows if "random" in r]
    if rand:
        runs = sum(c["runs"] for c in rand)
        out["random_pass_rate"] = round(sum(c["passes"] for c in rand) / runs, 6)
    out["errors"] = sum(1 for r in rows if "error" in r)
    return out


def batch_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def batch_text(report: dict) -> str:
    """Aligned table: one line per level with a column group per mode."""
    header = ["level", "R B D nu mu init"]
    modes = [m for m in ("search", "basic", "random") if m in report["spec"]["modes"]]
    for m in modes:
        header += [m, "steps", "expl", "tried", "Wc"] if m != "random" else ["random", "budget", "conn"]
    table = [header]
    for row in report["levels"]:
        if "error" in row:
            table.append([row["level"], f"error {row['exit_code']}: {row['error']}"])
            continue
        line = [row["level"], " ".join(map(str, row["features"]))]
        for m in modes:
            c = row.get(m)
            if c is None:
                line += ["-"] * (5 if m != "random" else 3)
            elif m == "random":
                line += [f"{c['pass_rate']:.1f}", str(c["budget"]),
                         f"{c['mean_connections_found']:.1f}/{c['connections_true']}"]
            else:
                s = c["stats"]
                line += [str(c["pass"]), str(s["total_steps"]), f"{s['exploration_fraction']:.0%}",
                         str(len(s["tried_doors"])), str(c["accuracy"]["wrong_connections"])]
        table.append(line)
    widths = [max(len(r[i]) for r in table if i < len(r)) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)).rstrip() for r in table]
    summary = report["summary"]
    lines.append("")
    lines += [f"{k}: {summary[k]}" for k in sorted(summary)]
    return "\n".join(lines) + "\n"


def write_batch(spec: ExperimentSpec, out_dir: str | Path) -> dict:
    report = run_batch(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(batch_json(report))
    (out / "report.txt").write_text(batch_text(report))
    return report
