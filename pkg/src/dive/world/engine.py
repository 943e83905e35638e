"""Action semantics, stepping, and feasibility."""
from __future__ import annotations

from .graph import achievement_graph
from .types import (
    CREATURE_HEALTH,
    CREATURE_MELEE_DAMAGE,
    DAY_CYCLE,
    DEFAULT_STEP_CAP,
    DIRECTIONS,
    DO_SEMANTICS,
    GRID_SIZE,
    LAVA_DAMAGE,
    METER_DECAY_EVERY,
    MOVE_ACTIONS,
    MOVE_DIRECTION,
    PLANT_RIPEN_STEPS,
    REGEN_EVERY,
    SLEEP_FAST_FORWARD,
    SWORD_DAMAGE,
    WALKABLE_TILES,
    ContractViolation,
    Creature,
    StepEvents,
    StepOutcome,
    WorldState,
    observe,
)

# facing requirements and material costs for placement actions
PLACE_RULES = {
    "place_stone": {"facing": frozenset({"path", "grass", "sand", "water", "lava"}), "cost": {"stone": 1}, "tile": "stone"},
    "place_table": {"facing": frozenset({"grass", "sand", "path"}), "cost": {"wood": 1}, "tile": "table"},
    "place_furnace": {"facing": frozenset({"grass", "sand", "path"}), "cost": {"stone": 1}, "tile": "furnace"},
    "place_plant": {"facing": frozenset({"grass"}), "cost": {"sapling": 1}, "tile": "plant"},
}

# material costs and required nearby stations for crafting actions
MAKE_RULES = {
    "make_wood_pickaxe": {"cost": {"wood": 1}, "stations": frozenset({"table"})},
    "make_wood_sword": {"cost": {"wood": 1}, "stations": frozenset({"table"})},
    "make_stone_pickaxe": {"cost": {"wood": 1, "stone": 1}, "stations": frozenset({"table"})},
    "make_stone_sword": {"cost": {"wood": 1, "stone": 1}, "stations": frozenset({"table"})},
    "make_iron_pickaxe": {"cost": {"wood": 1, "coal": 1, "iron": 1}, "stations": frozenset({"table", "furnace"})},
    "make_iron_sword": {"cost": {"wood": 1, "coal": 1, "iron": 1}, "stations": frozenset({"table", "furnace"})},
}

# tool gate for the collect family
COLLECT_TOOL = {
    "collect_stone": "wood_pickaxe",
    "collect_coal": "wood_pickaxe",
    "collect_iron": "stone_pickaxe",
    "collect_diamond": "iron_pickaxe",
}

# collected tiles that turn into path
_TILE_TO_PATH = {"stone", "coal", "iron", "diamond"}


def _stations_nearby(state: WorldState, stations: frozenset[str]) -> bool:
    px, py = state.player_x, state.player_y
    found: set[str] = set()
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            t = state.tile(px + dx, py + dy)
            if t in stations:
                found.add(t)
    return stations <= found


def _has_cost(state: WorldState, cost: dict[str, int]) -> bool:
    return all(state.inventory[item] >= n for item, n in cost.items())


def resolve_action(state: WorldState, action: str) -> tuple[bool, str | None]:
    """(would succeed, semantic action name). Pure; does not mutate."""
    if action == "noop" or action == "sleep":
        return True, action if action == "sleep" else "noop"
    if action in MOVE_ACTIONS:
        direction = MOVE_DIRECTION[action]
        dx, dy = DIRECTIONS[direction]
        tx, ty = state.player_x + dx, state.player_y + dy
        tile = state.tile(tx, ty)
        can_enter = tile in WALKABLE_TILES and state.creature_at(tx, ty) is None
        # turning toward a blocked cell is itself a successful outcome; only a
        # move straight into the blockage achieves nothing
        ok = can_enter or state.facing != direction
        return ok, action
    if action == "do":
        faced = state.faced_content()
        semantic = DO_SEMANTICS.get(faced) if faced is not None else None
        if semantic is None:
            return False, None
        tool = COLLECT_TOOL.get(semantic)
        if tool is not None and state.inventory[tool] < 1:
            return False, semantic
        return True, semantic
    if action in PLACE_RULES:
        rule = PLACE_RULES[action]
        faced = state.faced_content()
        ok = faced in rule["facing"] and _has_cost(state, rule["cost"])
        return ok, action
    if action in MAKE_RULES:
        rule = MAKE_RULES[action]
        ok = _has_cost(state, rule["cost"]) and _stations_nearby(state, rule["stations"])
        return ok, action
    raise ValueError(f"unknown action: {action}")


def feasible_actions(state: WorldState) -> set[str]:
    """Exactly the actions whose step() would succeed (not a no-op)."""
    from .types import ACTIONS

    return {a for a in ACTIONS if resolve_action(state, a)[0]}


def _player_damage(state: WorldState) -> int:
    for sword, dmg in SWORD_DAMAGE:
        if state.inventory[sword] >= 1:
            return dmg
    return 1


def _apply_player_action(state: WorldState, action: str, ok: bool, semantic: str | None) -> list[str]:
    """Mutates state per the action table; returns achievements unlocked by the action."""
    unlocks: list[str] = []

    def unlock(name: str) -> None:
        if name not in state.unlocked:
            state.unlocked.add(name)
            unlocks.append(name)

    if action in MOVE_ACTIONS:
        state.facing = MOVE_DIRECTION[action]
        if ok:
            dx, dy = DIRECTIONS[state.facing]
            tx, ty = state.player_x + dx, state.player_y + dy
            if state.tile(tx, ty) in WALKABLE_TILES and state.creature_at(tx, ty) is None:
                state.player_x, state.player_y = tx, ty
                if state.tile(tx, ty) == "lava":
                    state.status.health = max(0, state.status.health - LAVA_DAMAGE)
        return unlocks

    if not ok:
        return unlocks

    inv = state.inventory
    if action == "sleep":
        state.status.energy = min(9, state.status.energy + 1)
        return unlocks
    if action == "do":
        tx, ty = state.facing_target()
        creature = state.creature_at(tx, ty)
        if creature is not None:
            if creature.kind == "cow":
                state.creatures.remove(creature)
                state.status.food = min(9, state.status.food + 6)
                unlock("eat_cow")
            else:
                creature.health -= _player_damage(state)
                if creature.health <= 0:
                    state.creatures.remove(creature)
                    unlock("defeat_zombie" if creature.kind == "zombie" else "defeat_skeleton")
        else:
            tile = state.tile(tx, ty)
            if semantic == "collect_wood":
                inv["wood"] += 1
                unlock("collect_wood")
            elif semantic in ("collect_stone", "collect_coal", "collect_iron", "collect_diamond"):
                material = semantic.removeprefix("collect_")
                inv[material] += 1
                if tile in _TILE_TO_PATH:
                    state.set_tile(tx, ty, "path")
                unlock(semantic)
            elif semantic == "collect_drink":
                state.status.drink = min(9, state.status.drink + 1)
                unlock("collect_drink")
            elif semantic == "collect_sapling":
                inv["sapling"] += 1
                unlock("collect_sapling")
            elif semantic == "eat_plant":
                state.status.food = min(9, state.status.food + 4)
                state.set_tile(tx, ty, "grass")
                state.growing.pop((tx, ty), None)
                unlock("eat_plant")
        return unlocks

    if action in PLACE_RULES:
        rule = PLACE_RULES[action]
        tx, ty = state.facing_target()
        for item, n in rule["cost"].items():
            inv[item] -= n
        state.set_tile(tx, ty, rule["tile"])
        if action == "place_plant":
            state.growing[(tx, ty)] = state.step_count
        unlock(action)
        return unlocks

    if action in MAKE_RULES:
        rule = MAKE_RULES[action]
        for item, n in rule["cost"].items():
            inv[item] -= n
        tool = action.removeprefix("make_")
        inv[tool] = 1  # tools cap at one; re-crafting still consumes materials
        unlock(action)
        return unlocks

    return unlocks


def _creature_phase(state: WorldState) -> None:
    px, py = state.player_x, state.player_y
    rng = state.rng
    for creature in list(state.creatures):
        if creature.attack_cooldown > 0:
            creature.attack_cooldown -= 1
        adjacent = abs(creature.x - px) + abs(creature.y - py) == 1
        if creature.kind in ("zombie", "skeleton") and adjacent:
            if creature.attack_cooldown == 0:
                state.status.health = max(0, state.status.health - CREATURE_MELEE_DAMAGE)
                creature.attack_cooldown = 2
            continue
        if creature.kind == "cow":
            if state.step_count % 3 != 0:
                continue
            options = _walkable_steps(state, creature, {"grass"})
            chasing = False
        elif creature.kind == "zombie":
            options = _walkable_steps(state, creature, {"grass", "sand", "path"})
            chasing = max(abs(creature.x - px), abs(creature.y - py)) <= 8
        else:  # skeleton: cave dweller, only treads path
            options = _walkable_steps(state, creature, {"path"})
            chasing = max(abs(creature.x - px), abs(creature.y - py)) <= 4
        if not options:
            continue
        if chasing:
            options.sort(key=lambda p: (max(abs(p[0] - px), abs(p[1] - py)), p))
            nx, ny = options[0]
        else:
            nx, ny = options[int(rng.integers(len(options)))]
        creature.x, creature.y = nx, ny


def _walkable_steps(state: WorldState, creature: Creature, tiles: set[str]) -> list[tuple[int, int]]:
    # creatures avoid the player's cell and the cell the player is facing, so
    # the faced tile after an interaction reflects the interaction itself
    avoid = {(state.player_x, state.player_y), state.facing_target()}
    out = []
    for dx, dy in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        nx, ny = creature.x + dx, creature.y + dy
        if state.tile(nx, ny) in tiles and state.creature_at(nx, ny) is None:
            if (nx, ny) not in avoid:
                out.append((nx, ny))
    return out


def _spawn_phase(state: WorldState) -> None:
    if state.is_day:
        state.creatures = [c for c in state.creatures if c.kind != "zombie"]
        return
    if state.step_count % 10 != 0:
        return
    zombies = sum(1 for c in state.creatures if c.kind == "zombie")
    if zombies >= 2:
        return
    px, py = state.player_x, state.player_y
    candidates = []
    for dy in range(-12, 13):
        for dx in range(-12, 13):
            d = max(abs(dx), abs(dy))
            if not 6 <= d <= 12:
                continue
            x, y = px + dx, py + dy
            if state.tile(x, y) == "grass" and state.creature_at(x, y) is None:
                candidates.append((x, y))
    if candidates:
        idx = int(state.rng.integers(len(candidates)))
        x, y = candidates[idx]
        state.creatures.append(Creature("zombie", x, y, CREATURE_HEALTH["zombie"]))


def _survival_phase(state: WorldState) -> None:
    s = state.status
    if state.step_count % METER_DECAY_EVERY == 0:
        s.food = max(0, s.food - 1)
        s.drink = max(0, s.drink - 1)
        s.energy = max(0, s.energy - 1)
    if min(s.food, s.drink, s.energy) == 0:
        s.health = max(0, s.health - 1)
    elif state.step_count % REGEN_EVERY == 0 and s.health < 9:
        s.health += 1


def _growth_phase(state: WorldState) -> None:
    ripe = [pos for pos, t0 in state.growing.items()
            if state.step_count - t0 >= PLANT_RIPEN_STEPS and state.tile(*pos) == "plant"]
    for pos in ripe:
        state.set_tile(pos[0], pos[1], "plant_ripe")
        del state.growing[pos]


def step(state: WorldState, action: str, step_cap: int = DEFAULT_STEP_CAP) -> StepOutcome:
    """Advance the world by one action. Mutates `state`."""
    if state.done:
        raise ContractViolation("step() called on a finished episode")

    health_before = state.status.health
    status_before = state.status.as_dict()
    inv_before = dict(state.inventory)
    was_day = state.is_day

    ok, semantic = resolve_action(state, action)
    unlocks = _apply_player_action(state, action, ok, semantic)

    state.step_count += 1
    if action == "sleep" and not was_day:
        state.step_count += SLEEP_FAST_FORWARD
    if action == "sleep" and not was_day and state.is_day:
        if "wake_up" not in state.unlocked:
            state.unlocked.add("wake_up")
            unlocks.append("wake_up")

    _growth_phase(state)
    _spawn_phase(state)
    _creature_phase(state)
    _survival_phase(state)
    state.sync_rng_state()

    if state.status.health <= 0 or state.step_count >= step_cap:
        state.done = True

    health_after = state.status.health
    reward_tenths = 10 * len(unlocks) + (health_after - health_before)

    status_after = state.status.as_dict()
    events = StepEvents(
        semantic_action=semantic,
        success=ok,
        achievements=list(unlocks),
        status_delta={k: status_after[k] - status_before[k] for k in status_after
                      if status_after[k] != status_before[k]},
        inventory_delta={k: state.inventory[k] - inv_before[k] for k in state.inventory
                         if state.inventory[k] != inv_before[k]},
    )
    # sanity: unlock ordering must respect the dependency DAG
    graph = achievement_graph()
    for name in unlocks:
        missing = graph.ancestors(name) - state.unlocked
        if missing:
            raise AssertionError(f"achievement {name} unlocked before {missing}")

    return StepOutcome(
        observation=observe(state),
        reward=reward_tenths / 10.0,
        reward_tenths=reward_tenths,
        done=state.done,
        events=events,
    )
