"""Core types for the survival gridworld: tiles, entities, actions, state."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

GRID_SIZE = 64
WINDOW_ROWS = 7  # vertical extent: player row +/- 3
WINDOW_COLS = 9  # horizontal extent: player col +/- 4
WINDOW_HALF_Y = WINDOW_ROWS // 2
WINDOW_HALF_X = WINDOW_COLS // 2

DAY_CYCLE = 300  # steps per full day/night cycle
DAY_LENGTH = 225  # steps of daylight within a cycle
METER_DECAY_EVERY = 25
REGEN_EVERY = 10
PLANT_RIPEN_STEPS = 60
SLEEP_FAST_FORWARD = 9  # extra clock advance when sleeping at night
LAVA_DAMAGE = 5
CREATURE_MELEE_DAMAGE = 2
DEFAULT_STEP_CAP = 10_000

TILE_KINDS = (
    "grass", "sand", "path", "tree", "stone", "coal", "iron", "diamond",
    "water", "lava", "table", "furnace", "plant", "plant_ripe",
)
TILE_CODE = {name: i for i, name in enumerate(TILE_KINDS)}

ENTITY_KINDS = ("cow", "zombie", "skeleton")

WALKABLE_TILES = frozenset({"grass", "sand", "path", "lava"})

MATERIAL_ITEMS = ("wood", "stone", "coal", "iron", "diamond", "sapling")
TOOL_ITEMS = (
    "wood_pickaxe", "stone_pickaxe", "iron_pickaxe",
    "wood_sword", "stone_sword", "iron_sword",
)
INVENTORY_ITEMS = MATERIAL_ITEMS + TOOL_ITEMS
STATUS_KEYS = ("health", "food", "drink", "energy")

ACTIONS = (
    "noop",
    "move_north", "move_south", "move_east", "move_west",
    "do",
    "sleep",
    "place_stone", "place_table", "place_furnace", "place_plant",
    "make_wood_pickaxe", "make_stone_pickaxe", "make_iron_pickaxe",
    "make_wood_sword", "make_stone_sword", "make_iron_sword",
)

MOVE_ACTIONS = ("move_north", "move_south", "move_east", "move_west")
PLACE_ACTIONS = ("place_stone", "place_table", "place_furnace", "place_plant")
MAKE_ACTIONS = (
    "make_wood_pickaxe", "make_stone_pickaxe", "make_iron_pickaxe",
    "make_wood_sword", "make_stone_sword", "make_iron_sword",
)

# Semantic names the context-sensitive `do` resolves to, keyed by faced object.
DO_SEMANTICS = {
    "tree": "collect_wood",
    "stone": "collect_stone",
    "coal": "collect_coal",
    "iron": "collect_iron",
    "diamond": "collect_diamond",
    "water": "collect_drink",
    "grass": "collect_sapling",
    "cow": "eat_cow",
    "zombie": "defeat_zombie",
    "skeleton": "defeat_skeleton",
    "plant_ripe": "eat_plant",
}
SEMANTIC_DO_ACTIONS = tuple(sorted(DO_SEMANTICS.values()))

DIRECTIONS = {
    "north": (0, -1),
    "south": (0, 1),
    "east": (1, 0),
    "west": (-1, 0),
}
MOVE_DIRECTION = {
    "move_north": "north",
    "move_south": "south",
    "move_east": "east",
    "move_west": "west",
}

CREATURE_HEALTH = {"cow": 1, "zombie": 5, "skeleton": 3}
SWORD_DAMAGE = (("iron_sword", 5), ("stone_sword", 3), ("wood_sword", 2))


class ContractViolation(RuntimeError):
    """Raised when an operation is invoked outside its preconditions."""


@dataclass
class AgentStatus:
    health: int = 9
    food: int = 9
    drink: int = 9
    energy: int = 9

    def as_dict(self) -> dict[str, int]:
        return {
            "health": self.health, "food": self.food,
            "drink": self.drink, "energy": self.energy,
        }

    def copy(self) -> "AgentStatus":
        return AgentStatus(self.health, self.food, self.drink, self.energy)


@dataclass
class Creature:
    kind: str
    x: int
    y: int
    health: int
    attack_cooldown: int = 0

    def copy(self) -> "Creature":
        return Creature(self.kind, self.x, self.y, self.health, self.attack_cooldown)


def empty_inventory() -> dict[str, int]:
    return {item: 0 for item in INVENTORY_ITEMS}


@dataclass
class WorldState:
    """Full simulator state. Single-owner; copy() before speculative stepping."""

    seed: int
    grid: np.ndarray  # (GRID_SIZE, GRID_SIZE) uint8 tile codes
    player_x: int
    player_y: int
    facing: str  # north/south/east/west
    status: AgentStatus
    inventory: dict[str, int]
    creatures: list[Creature]
    step_count: int = 0
    unlocked: set[str] = field(default_factory=set)
    growing: dict[tuple[int, int], int] = field(default_factory=dict)
    done: bool = False
    rng_state: dict | None = None
    _rng: np.random.Generator | None = field(default=None, repr=False)

    @property
    def rng(self) -> np.random.Generator:
        if self._rng is None:
            gen = np.random.Generator(np.random.PCG64(self.seed))
            if self.rng_state is not None:
                gen.bit_generator.state = self.rng_state
            self._rng = gen
        return self._rng

    def sync_rng_state(self) -> None:
        if self._rng is not None:
            self.rng_state = self._rng.bit_generator.state

    @property
    def is_day(self) -> bool:
        return self.step_count % DAY_CYCLE < DAY_LENGTH

    def tile(self, x: int, y: int) -> str | None:
        if 0 <= x < GRID_SIZE and 0 <= y < GRID_SIZE:
            return TILE_KINDS[self.grid[y, x]]
        return None

    def set_tile(self, x: int, y: int, kind: str) -> None:
        self.grid[y, x] = TILE_CODE[kind]

    def creature_at(self, x: int, y: int) -> Creature | None:
        for c in self.creatures:
            if c.x == x and c.y == y:
                return c
        return None

    def cell_content(self, x: int, y: int) -> str | None:
        """What occupies a cell from the agent's point of view: entity over tile."""
        if not (0 <= x < GRID_SIZE and 0 <= y < GRID_SIZE):
            return None
        c = self.creature_at(x, y)
        if c is not None:
            return c.kind
        return TILE_KINDS[self.grid[y, x]]

    def facing_target(self) -> tuple[int, int]:
        dx, dy = DIRECTIONS[self.facing]
        return self.player_x + dx, self.player_y + dy

    def faced_content(self) -> str | None:
        tx, ty = self.facing_target()
        return self.cell_content(tx, ty)

    def copy(self) -> "WorldState":
        self.sync_rng_state()
        return WorldState(
            seed=self.seed,
            grid=self.grid.copy(),
            player_x=self.player_x,
            player_y=self.player_y,
            facing=self.facing,
            status=self.status.copy(),
            inventory=dict(self.inventory),
            creatures=[c.copy() for c in self.creatures],
            step_count=self.step_count,
            unlocked=set(self.unlocked),
            growing=dict(self.growing),
            done=self.done,
            rng_state=copy.deepcopy(self.rng_state),
        )


@dataclass
class StepEvents:
    semantic_action: str | None
    success: bool
    achievements: list[str]
    status_delta: dict[str, int]
    inventory_delta: dict[str, int]


@dataclass
class StepOutcome:
    observation: dict
    reward: float
    reward_tenths: int
    done: bool
    events: StepEvents


def local_window(state: WorldState) -> dict:
    """The 7x9 egocentric view: underlying tiles plus any entities on them."""
    px, py = state.player_x, state.player_y
    tiles: list[list[str | None]] = []
    entities: list[list[str | None]] = []
    for dy in range(-WINDOW_HALF_Y, WINDOW_HALF_Y + 1):
        tile_row: list[str | None] = []
        ent_row: list[str | None] = []
        for dx in range(-WINDOW_HALF_X, WINDOW_HALF_X + 1):
            x, y = px + dx, py + dy
            tile_row.append(state.tile(x, y))
            c = state.creature_at(x, y) if 0 <= x < GRID_SIZE and 0 <= y < GRID_SIZE else None
            ent_row.append(c.kind if c is not None else None)
        tiles.append(tile_row)
        entities.append(ent_row)
    return {"tiles": tiles, "entities": entities}


def observe(state: WorldState) -> dict:
    return {
        "window": local_window(state),
        "player": {"x": state.player_x, "y": state.player_y, "facing": state.facing},
        "status": state.status.as_dict(),
        "inventory": dict(state.inventory),
        "daylight": state.is_day,
        "unlocked": sorted(state.unlocked),
        "step": state.step_count,
    }
