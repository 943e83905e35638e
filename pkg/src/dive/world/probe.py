"""Randomized-but-consistent world states for exhaustive feasibility probing."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .mapgen import generate_world
from .types import (
    GRID_SIZE,
    INVENTORY_ITEMS,
    MATERIAL_ITEMS,
    TILE_CODE,
    TOOL_ITEMS,
    AgentStatus,
    Creature,
    WorldState,
)

_BASE_SEEDS = (11, 12, 13, 14)
_PAINT_KINDS = (
    "grass", "sand", "path", "tree", "stone", "coal", "iron", "diamond",
    "water", "lava", "table", "furnace", "plant", "plant_ripe",
)


@lru_cache(maxsize=None)
def _base_state(seed: int) -> WorldState:
    return generate_world(seed)


def random_probe_state(seed: int) -> WorldState:
    """A consistent random state: random position/facing/inventory/status with
    occasional painted stations, creatures, and edge placements."""
    rng = np.random.default_rng(seed)
    state = _base_state(_BASE_SEEDS[int(rng.integers(len(_BASE_SEEDS)))]).copy()

    walkable = np.argwhere(
        (state.grid == TILE_CODE["grass"])
        | (state.grid == TILE_CODE["sand"])
        | (state.grid == TILE_CODE["path"])
    )
    if rng.random() < 0.05:
        edge = walkable[(walkable[:, 0] <= 1) | (walkable[:, 0] >= GRID_SIZE - 2)
                        | (walkable[:, 1] <= 1) | (walkable[:, 1] >= GRID_SIZE - 2)]
        pool = edge if len(edge) else walkable
    else:
        pool = walkable
    y, x = pool[int(rng.integers(len(pool)))]
    state.player_x, state.player_y = int(x), int(y)
    state.facing = ("north", "south", "east", "west")[int(rng.integers(4))]

    for item in MATERIAL_ITEMS:
        state.inventory[item] = int(rng.integers(0, 4)) if rng.random() < 0.6 else 0
    for tool in TOOL_ITEMS:
        state.inventory[tool] = 1 if rng.random() < 0.4 else 0
    state.status = AgentStatus(
        health=int(rng.integers(1, 10)),
        food=int(rng.integers(0, 10)),
        drink=int(rng.integers(0, 10)),
        energy=int(rng.integers(0, 10)),
    )
    state.step_count = int(rng.integers(0, 600))

    px, py = state.player_x, state.player_y
    ring = [(px + dx, py + dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)
            if (dx or dy) and 0 <= px + dx < GRID_SIZE and 0 <= py + dy < GRID_SIZE]
    # paint crafting stations into the ring sometimes
    if ring and rng.random() < 0.35:
        cx, cy = ring[int(rng.integers(len(ring)))]
        state.set_tile(cx, cy, "table")
    if ring and rng.random() < 0.25:
        cx, cy = ring[int(rng.integers(len(ring)))]
        state.set_tile(cx, cy, "furnace")
    # repaint the faced cell with an arbitrary kind half the time
    tx, ty = state.facing_target()
    if 0 <= tx < GRID_SIZE and 0 <= ty < GRID_SIZE and rng.random() < 0.5:
        state.set_tile(tx, ty, _PAINT_KINDS[int(rng.integers(len(_PAINT_KINDS)))])
    # drop a creature next to the player sometimes
    state.creatures = [c for c in state.creatures
                       if max(abs(c.x - px), abs(c.y - py)) > 1]
    if ring and rng.random() < 0.3:
        cx, cy = ring[int(rng.integers(len(ring)))]
        if state.tile(cx, cy) in ("grass", "sand", "path") and state.creature_at(cx, cy) is None:
            kind = ("cow", "zombie", "skeleton")[int(rng.integers(3))]
            hp = {"cow": 1, "zombie": 5, "skeleton": 3}[kind]
            state.creatures.append(Creature(kind, int(cx), int(cy), hp))
    state.done = False
    return state
