"""Deterministic map generation: layered value-noise zones with a reachability retry loop."""
from __future__ import annotations

from collections import deque

import numpy as np
from scipy import ndimage

from .types import (
    GRID_SIZE,
    TILE_CODE,
    TILE_KINDS,
    WALKABLE_TILES,
    AgentStatus,
    Creature,
    WorldState,
    empty_inventory,
)

_REQUIRED_KINDS = ("tree", "stone", "coal", "iron", "diamond", "water")
_N_COWS = 6
_N_SKELETONS = 3
_MAX_ATTEMPTS = 64


def _value_noise(rng: np.random.Generator, coarse: int) -> np.ndarray:
    """Smooth [0,1] field from a bilinearly upsampled coarse random grid."""
    base = rng.random((coarse, coarse))
    zoom = GRID_SIZE / coarse
    field = ndimage.zoom(base, zoom, order=1, mode="nearest", grid_mode=True)
    return field[:GRID_SIZE, :GRID_SIZE]


def _carve_tiles(rng: np.random.Generator) -> np.ndarray:
    elevation = _value_noise(rng, 8)
    moisture = _value_noise(rng, 10)
    cave = _value_noise(rng, 16)

    grid = np.full((GRID_SIZE, GRID_SIZE), TILE_CODE["grass"], dtype=np.uint8)
    mountain = elevation > 0.62
    water = elevation < 0.34
    grid[mountain] = TILE_CODE["stone"]
    grid[water] = TILE_CODE["water"]

    # forests on moist grassland
    forest = (~mountain) & (~water) & (moisture > 0.60)
    grid[forest] = TILE_CODE["tree"]

    # sand ring: every land cell touching water becomes shore
    water_mask = grid == TILE_CODE["water"]
    shore = ndimage.binary_dilation(water_mask, structure=np.ones((3, 3))) & ~water_mask
    grid[shore] = TILE_CODE["sand"]

    # cave corridors inside mountains
    cave_mask = mountain & (cave > 0.78)
    grid[cave_mask & (grid == TILE_CODE["stone"])] = TILE_CODE["path"]

    # ore pockets: depth measured as distance into the mountain mass
    interior = ndimage.binary_erosion(mountain, iterations=1, border_value=0)
    deep = ndimage.binary_erosion(mountain, iterations=2, border_value=0)
    stone_now = grid == TILE_CODE["stone"]
    ore_noise = _value_noise(rng, 20)
    coal_mask = stone_now & interior & (ore_noise > 0.80)
    grid[coal_mask] = TILE_CODE["coal"]
    stone_now = grid == TILE_CODE["stone"]
    iron_mask = stone_now & deep & (ore_noise < 0.12)
    grid[iron_mask] = TILE_CODE["iron"]

    # lava pools deep inside mountains
    lava_noise = _value_noise(rng, 12)
    stone_now = grid == TILE_CODE["stone"]
    lava_mask = stone_now & deep & (lava_noise > 0.90)
    grid[lava_mask] = TILE_CODE["lava"]

    # diamonds: deep stone cells whose four orthogonal neighbours are stone
    stone_now = grid == TILE_CODE["stone"]
    ortho = np.zeros_like(stone_now)
    ortho[1:-1, 1:-1] = (
        stone_now[:-2, 1:-1] & stone_now[2:, 1:-1]
        & stone_now[1:-1, :-2] & stone_now[1:-1, 2:]
    )
    candidates = np.argwhere(stone_now & deep & ortho)
    if len(candidates):
        picks = rng.choice(len(candidates), size=min(3, len(candidates)), replace=False)
        for idx in np.atleast_1d(picks):
            y, x = candidates[idx]
            grid[y, x] = TILE_CODE["diamond"]
    return grid


def _spawn_point(grid: np.ndarray, rng: np.random.Generator) -> tuple[int, int] | None:
    grass = np.argwhere(grid == TILE_CODE["grass"])
    if not len(grass):
        return None
    center = np.array([GRID_SIZE // 2, GRID_SIZE // 2])
    dists = np.abs(grass - center).max(axis=1)
    order = np.argsort(dists, kind="stable")
    y, x = grass[order[0]]
    return int(x), int(y)


def _reachable_mask(grid: np.ndarray, start: tuple[int, int]) -> np.ndarray:
    """BFS over cells traversable now or after mining. Trees persist when
    chopped, so they block like water and lava."""
    blocked = (
        (grid == TILE_CODE["water"])
        | (grid == TILE_CODE["lava"])
        | (grid == TILE_CODE["tree"])
    )
    seen = np.zeros_like(blocked)
    sx, sy = start
    queue: deque[tuple[int, int]] = deque([(sx, sy)])
    seen[sy, sx] = True
    while queue:
        x, y = queue.popleft()
        for dx, dy in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            nx, ny = x + dx, y + dy
            if 0 <= nx < GRID_SIZE and 0 <= ny < GRID_SIZE and not seen[ny, nx] and not blocked[ny, nx]:
                seen[ny, nx] = True
                queue.append((nx, ny))
    return seen


def _tech_tree_solvable(grid: np.ndarray, spawn: tuple[int, int]) -> bool:
    reach = _reachable_mask(grid, spawn)
    adjacent = ndimage.binary_dilation(reach, structure=np.ones((3, 3)))
    for kind in _REQUIRED_KINDS:
        mask = grid == TILE_CODE[kind]
        if not (mask & adjacent).any():
            return False
    # at least a few cave cells so skeletons have somewhere to live
    cave = (grid == TILE_CODE["path"]) & adjacent
    return int(cave.sum()) >= 3


def _place_creatures(grid: np.ndarray, spawn: tuple[int, int], rng: np.random.Generator) -> list[Creature]:
    creatures: list[Creature] = []
    sx, sy = spawn
    taken = {(sx, sy)}

    def far_cells(kind_code: int, min_dist: int) -> list[tuple[int, int]]:
        cells = np.argwhere(grid == kind_code)
        out = []
        for y, x in cells:
            if max(abs(x - sx), abs(y - sy)) >= min_dist and (int(x), int(y)) not in taken:
                out.append((int(x), int(y)))
        return out

    grass_cells = far_cells(TILE_CODE["grass"], 6)
    if grass_cells:
        picks = rng.choice(len(grass_cells), size=min(_N_COWS, len(grass_cells)), replace=False)
        for idx in np.atleast_1d(picks):
            x, y = grass_cells[idx]
            if (x, y) in taken:
                continue
            creatures.append(Creature("cow", x, y, 1))
            taken.add((x, y))

    cave_cells = far_cells(TILE_CODE["path"], 4)
    if cave_cells:
        picks = rng.choice(len(cave_cells), size=min(_N_SKELETONS, len(cave_cells)), replace=False)
        for idx in np.atleast_1d(picks):
            x, y = cave_cells[idx]
            if (x, y) in taken:
                continue
            creatures.append(Creature("skeleton", x, y, 3))
            taken.add((x, y))
    return creatures


def generate_world(seed: int) -> WorldState:
    """Deterministic world from a 64-bit seed; retries internally until the
    full tech tree is reachable from spawn."""
    for attempt in range(_MAX_ATTEMPTS):
        rng = np.random.Generator(np.random.PCG64([seed & 0xFFFFFFFFFFFFFFFF, attempt]))
        grid = _carve_tiles(rng)
        spawn = _spawn_point(grid, rng)
        if spawn is None:
            continue
        if not _tech_tree_solvable(grid, spawn):
            continue
        creatures = _place_creatures(grid, spawn, rng)
        state = WorldState(
            seed=seed,
            grid=grid,
            player_x=spawn[0],
            player_y=spawn[1],
            facing="south",
            status=AgentStatus(),
            inventory=empty_inventory(),
            creatures=creatures,
        )
        # episode randomness is owned by the state, seeded independently of
        # the generation retries so step dynamics never depend on attempt count
        state.rng_state = np.random.Generator(
            np.random.PCG64([seed & 0xFFFFFFFFFFFFFFFF, 0xD1CE])
        ).bit_generator.state
        return state
    raise RuntimeError(f"no solvable map found for seed {seed}")


def map_hash(state: WorldState) -> str:
    import hashlib

    return hashlib.sha256(state.grid.tobytes()).hexdigest()


def scan_window_presence(grid: np.ndarray) -> dict[str, np.ndarray]:
    """For each tile kind, a boolean map: does the 7x9 window centred at each
    cell contain that kind? Used for gold co-occurrence dumps."""
    out: dict[str, np.ndarray] = {}
    footprint = np.ones((7, 9), dtype=bool)
    for kind in TILE_KINDS:
        mask = (grid == TILE_CODE[kind]).astype(np.uint8)
        out[kind] = ndimage.maximum_filter(mask, footprint=footprint, mode="constant", cval=0).astype(bool)
    return out


def standable_mask(grid: np.ndarray) -> np.ndarray:
    """Cells a player could legally occupy."""
    mask = np.zeros(grid.shape, dtype=bool)
    for kind in WALKABLE_TILES:
        if kind == "lava":
            continue  # standable in principle, but never a vantage point we score
        mask |= grid == TILE_CODE[kind]
    return mask
