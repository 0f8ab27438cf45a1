"""Online agent-based search for game testing on a grid maze simulator."""

from .agent import AgentContext, Mode, RunStats, TestingTask, Verdict, online_search, random_agent
from .model import Model, compare_to_ground_truth
from .navigation import NavGraph, astar, find_path
from .oracle import oracle_solvable
from .world import Game, Level, load_level, parse_level

__all__ = [
    "AgentContext", "Game", "Level", "Mode", "Model", "NavGraph", "RunStats", "TestingTask",
    "Verdict", "astar", "compare_to_ground_truth", "find_path", "load_level", "online_search",
    "oracle_solvable", "parse_level", "random_agent",
]
