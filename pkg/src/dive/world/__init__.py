"""Deterministic survival gridworld: generation, stepping, feasibility, expert."""
from .engine import feasible_actions, resolve_action, step
from .expert import DEMO_SEEDS, GOOD_SEEDS, ExpertPolicy
from .graph import ACHIEVEMENTS, AchievementGraph, achievement_graph
from .mapgen import generate_world, map_hash
from .probe import random_probe_state
from .types import (
    ACTIONS,
    DEFAULT_STEP_CAP,
    ENTITY_KINDS,
    INVENTORY_ITEMS,
    TILE_KINDS,
    AgentStatus,
    ContractViolation,
    Creature,
    StepOutcome,
    WorldState,
    observe,
)

__all__ = [
    "ACHIEVEMENTS", "ACTIONS", "DEFAULT_STEP_CAP", "DEMO_SEEDS", "ENTITY_KINDS",
    "GOOD_SEEDS", "INVENTORY_ITEMS", "TILE_KINDS", "AchievementGraph",
    "AgentStatus", "ContractViolation", "Creature", "ExpertPolicy",
    "StepOutcome", "WorldState", "achievement_graph", "feasible_actions",
    "generate_world", "map_hash", "observe", "random_probe_state",
    "resolve_action", "step",
]
