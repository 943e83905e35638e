"""Ground-truth dynamics of the bundled simulator.

Single source of truth for: the oracle backend's answers, the gold-dynamics
fixture (silver standard for recall/precision), and the planner's full-
knowledge configuration. Co-occurrence relations are derived empirically from
exhaustive window scans of the demonstration-seed maps, so no bank evidence
can ever contradict them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .banks import OBJECT_SUBJECTS
from .records import DynamicRecord, KnowledgeBase
from .world.expert import DEMO_SEEDS
from .world.mapgen import generate_world, scan_window_presence, standable_mask
from .world.types import TILE_KINDS

_N6 = {
    "materials_used": None, "immediate_objects": None, "facing_object": None,
    "inventory_tool": None, "outcome_increase": None, "facing_object_change": None,
}


def _act(**kw) -> dict:
    out = dict(_N6)
    out.update(kw)
    return out


ACTION_TABLE: dict[str, dict] = {
    "collect_wood": _act(facing_object=["tree"], outcome_increase={"wood": 1}),
    "collect_stone": _act(facing_object=["stone"], inventory_tool="wood_pickaxe",
                          outcome_increase={"stone": 1}, facing_object_change="path"),
    "collect_coal": _act(facing_object=["coal"], inventory_tool="wood_pickaxe",
                         outcome_increase={"coal": 1}, facing_object_change="path"),
    "collect_iron": _act(facing_object=["iron"], inventory_tool="stone_pickaxe",
                         outcome_increase={"iron": 1}, facing_object_change="path"),
    "collect_diamond": _act(facing_object=["diamond"], inventory_tool="iron_pickaxe",
                            outcome_increase={"diamond": 1}, facing_object_change="path"),
    "collect_drink": _act(facing_object=["water"], outcome_increase={"drink": 1}),
    "collect_sapling": _act(facing_object=["grass"], outcome_increase={"sapling": 1}),
    "eat_cow": _act(facing_object=["cow"], outcome_increase={"food": 6},
                    facing_object_change="grass"),
    "eat_plant": _act(facing_object=["plant_ripe"], outcome_increase={"food": 4},
                      facing_object_change="grass"),
    "defeat_zombie": _act(facing_object=["zombie"]),
    "defeat_skeleton": _act(facing_object=["skeleton"]),
    "place_stone": _act(materials_used={"stone": 1},
                        facing_object=["path", "grass", "sand", "water", "lava"],
                        facing_object_change="stone"),
    "place_table": _act(materials_used={"wood": 1},
                        facing_object=["grass", "sand", "path"],
                        facing_object_change="table"),
    "place_furnace": _act(materials_used={"stone": 1},
                          facing_object=["grass", "sand", "path"],
                          facing_object_change="furnace"),
    "place_plant": _act(materials_used={"sapling": 1}, facing_object=["grass"],
                        facing_object_change="plant"),
    "make_wood_pickaxe": _act(materials_used={"wood": 1}, immediate_objects=["table"],
                              outcome_increase={"wood_pickaxe": 1}),
    "make_wood_sword": _act(materials_used={"wood": 1}, immediate_objects=["table"],
                            outcome_increase={"wood_sword": 1}),
    "make_stone_pickaxe": _act(materials_used={"wood": 1, "stone": 1}, immediate_objects=["table"],
                               outcome_increase={"stone_pickaxe": 1}),
    "make_stone_sword": _act(materials_used={"wood": 1, "stone": 1}, immediate_objects=["table"],
                             outcome_increase={"stone_sword": 1}),
    "make_iron_pickaxe": _act(materials_used={"wood": 1, "coal": 1, "iron": 1},
                              immediate_objects=["furnace", "table"],
                              outcome_increase={"iron_pickaxe": 1}),
    "make_iron_sword": _act(materials_used={"wood": 1, "coal": 1, "iron": 1},
                            immediate_objects=["furnace", "table"],
                            outcome_increase={"iron_sword": 1}),
    "sleep": _act(),
    "move_north": _act(),
    "move_south": _act(),
    "move_east": _act(),
    "move_west": _act(),
}

WALKABLE_TABLE: dict[str, bool] = {
    "grass": True, "sand": True, "path": True, "lava": True,
    "tree": False, "stone": False, "coal": False, "iron": False, "diamond": False,
    "water": False, "plant": False, "plant_ripe": False, "table": False,
    "furnace": False, "cow": False, "zombie": False, "skeleton": False,
}

TIME_TABLE: dict[str, str] = {name: "always" for name in OBJECT_SUBJECTS}
TIME_TABLE["zombie"] = "night"

# technology progression the sub-goal plan follows; repetitions cover every
# material the downstream crafts consume
SUBGOAL_SEQUENCE: list[tuple[str, int, str]] = [
    ("collect_wood", 7, "Gather enough wood for the crafting table and every tool."),
    ("place_table", 1, "Put down a crafting table to unlock tool recipes."),
    ("make_wood_pickaxe", 1, "Craft a wood pickaxe to mine stone and coal."),
    ("make_wood_sword", 1, "Craft a wood sword for defense."),
    ("collect_sapling", 1, "Pick up a sapling from the grass."),
    ("place_plant", 1, "Plant the sapling so it can ripen into food."),
    ("collect_coal", 2, "Mine coal for the iron recipes."),
    ("collect_stone", 4, "Mine stone for tools, the furnace, and a spare block."),
    ("place_stone", 1, "Place a stone block."),
    ("make_stone_pickaxe", 1, "Craft a stone pickaxe to mine iron."),
    ("make_stone_sword", 1, "Craft a stone sword."),
    ("place_furnace", 1, "Place a furnace next to the table for iron recipes."),
    ("collect_iron", 2, "Mine iron for the iron tools."),
    ("make_iron_pickaxe", 1, "Craft an iron pickaxe to mine diamonds."),
    ("make_iron_sword", 1, "Craft an iron sword."),
    ("collect_diamond", 1, "Mine a diamond: the final goal."),
]

_COLLECT_MATERIAL = {
    "collect_wood": "wood", "collect_stone": "stone", "collect_coal": "coal",
    "collect_iron": "iron", "collect_diamond": "diamond", "collect_sapling": "sapling",
}


def _requirements_text(action: str) -> str:
    row = ACTION_TABLE[action]
    parts = []
    if row["facing_object"]:
        parts.append("faces " + " or ".join(row["facing_object"]))
    if row["immediate_objects"]:
        parts.append("has " + " and ".join(row["immediate_objects"]) + " within immediate distance")
    if row["materials_used"]:
        parts.append("uses " + ", ".join(f"{n} {k}" for k, n in row["materials_used"].items()))
    if row["inventory_tool"]:
        parts.append(f"requires a {row['inventory_tool']} in the inventory")
    return ("The action " + "; ".join(parts) + ".") if parts else "No special requirements."


def _outcomes_text(action: str) -> str:
    row = ACTION_TABLE[action]
    parts = []
    if row["outcome_increase"]:
        parts.append(", ".join(f"{k} increases by {n}" for k, n in row["outcome_increase"].items()))
    if row["facing_object_change"]:
        parts.append(f"the faced tile turns into {row['facing_object_change']}")
    return ("; ".join(parts) + ".") if parts else "No guaranteed inventory or status increase."


def _danger_clause() -> str:
    return ("or if health, food, drink, or energy levels drop critically low, "
            "or a threat (such as skeletons or zombies) is detected nearby")


def subtask_plan(subtask: str) -> dict:
    """Gold plan for one sub-task, phrased from the action table."""
    if subtask in _COLLECT_MATERIAL:
        material = _COLLECT_MATERIAL[subtask]
        target = ACTION_TABLE[subtask]["facing_object"][0]
        tool = ACTION_TABLE[subtask]["inventory_tool"]
        steps = [f"Locate a {target}, ensuring '{target}' is within the explored area."]
        if tool:
            steps.append(f"Ensure a {tool} is in the inventory.")
        steps += [
            f"Move closer to the {target} if it is not within immediate distance.",
            f"Face the {target} to meet the precondition of the action.",
            f"Execute the '{subtask}' action to gather {material}.",
        ]
        termination = (f"The inventory's {material} amount increases by 1, "
                       f"{_danger_clause()}.")
    elif subtask == "collect_drink":
        steps = [
            "Locate water within the explored area.",
            "Move next to the water and face it.",
            "Execute the 'collect_drink' action to drink.",
        ]
        termination = f"The drink level increases by 1, {_danger_clause()}."
    elif subtask in ("eat_cow", "eat_plant"):
        target = ACTION_TABLE[subtask]["facing_object"][0]
        steps = [
            f"Locate a {target} within the explored area.",
            f"Move next to the {target} and face it.",
            f"Execute the '{subtask}' action to eat.",
        ]
        termination = f"The food level increases, {_danger_clause()}."
    elif subtask in ("defeat_zombie", "defeat_skeleton"):
        target = ACTION_TABLE[subtask]["facing_object"][0]
        steps = [
            f"Locate the {target} and face it.",
            "Attack with 'do' repeatedly; a sword increases the damage dealt.",
            f"Repeat until the {target} is defeated.",
        ]
        termination = f"The {target} is defeated, or health drops critically low."
    elif subtask.startswith("place_"):
        row = ACTION_TABLE[subtask]
        material = next(iter(row["materials_used"]))
        faces = " or ".join(row["facing_object"])
        steps = [
            f"Ensure at least 1 {material} is in the inventory.",
            f"Face a tile of kind {faces}.",
            f"Execute the '{subtask}' action.",
        ]
        termination = (f"The faced tile turns into {row['facing_object_change']}, "
                       f"{_danger_clause()}.")
    elif subtask.startswith("make_"):
        row = ACTION_TABLE[subtask]
        tool = subtask.removeprefix("make_")
        needs = ", ".join(f"{n} {k}" for k, n in row["materials_used"].items())
        stations = " and ".join(row["immediate_objects"])
        steps = [
            f"Gather the materials: {needs}.",
            f"Stand within immediate distance of a {stations}.",
            f"Execute the '{subtask}' action.",
        ]
        termination = f"The {tool} appears in the inventory, {_danger_clause()}."
    elif subtask == "sleep":
        steps = [
            "Wait for nighttime.",
            "Make sure no zombie or skeleton is nearby.",
            "Execute the 'sleep' action repeatedly until morning.",
        ]
        termination = ("It becomes daytime again (the agent wakes up), "
                       "or a threat appears nearby.")
    else:
        raise KeyError(f"no gold plan for subtask {subtask!r}")
    return {
        "general_plan": steps,
        "termination_condition": termination,
        "requirements": _requirements_text(subtask if subtask != "sleep" else "sleep"),
        "outcomes": _outcomes_text(subtask if subtask != "sleep" else "sleep"),
    }


SUBTASK_SUBJECT_LIST = tuple(sorted(
    set(_COLLECT_MATERIAL) | {"collect_drink", "eat_cow", "eat_plant",
                              "defeat_zombie", "defeat_skeleton", "sleep"}
    | {a for a in ACTION_TABLE if a.startswith(("place_", "make_"))}
))


# kinds whose positions never change during play; placed or grown kinds
# (plant, table, ...) would let live evidence contradict a static relation
_STATIC_KINDS = ("grass", "sand", "path", "tree", "stone", "coal", "iron",
                 "diamond", "water", "lava")


def co_occurrence_tables(seeds: tuple[int, ...] = tuple(DEMO_SEEDS)) -> dict[str, dict[str, str]]:
    """Definite window-level relations: very_related is co-presence in every
    window featuring the subject across the demo-seed maps; not_related is
    co-presence in none. Relations are then re-checked against every frame of
    the demonstration corpus, so sampled evidence can never contradict them."""
    subjects = [s for s in OBJECT_SUBJECTS if s in _STATIC_KINDS]
    always: dict[str, dict[str, bool]] = {a: {b: True for b in subjects} for a in subjects}
    never: dict[str, dict[str, bool]] = {a: {b: True for b in subjects} for a in subjects}
    seen_subject = {a: False for a in subjects}
    for seed in seeds:
        state = generate_world(seed)
        contains = scan_window_presence(state.grid)
        stand = standable_mask(state.grid)
        for a in subjects:
            windows_a = stand & contains[a]
            if not windows_a.any():
                continue
            seen_subject[a] = True
            for b in subjects:
                if a == b:
                    continue
                if (windows_a & ~contains[b]).any():
                    always[a][b] = False
                if (windows_a & contains[b]).any():
                    never[a][b] = False
    for frame_objects in _demo_frame_objects(seeds):
        for a in subjects:
            if a not in frame_objects:
                continue
            for b in subjects:
                if a == b:
                    continue
                if b in frame_objects:
                    never[a][b] = False
                else:
                    always[a][b] = False
    out: dict[str, dict[str, str]] = {}
    for a in subjects:
        if not seen_subject[a]:
            continue
        rel: dict[str, str] = {}
        for b in subjects:
            if a == b:
                continue
            if always[a][b]:
                rel[b] = "very_related"
            elif never[a][b]:
                rel[b] = "not_related"
        if rel:
            out[a] = dict(sorted(rel.items()))
    return out


def _demo_frame_objects(seeds: tuple[int, ...]) -> list[set[str]]:
    from .demos import scripted_expert

    frames: list[set[str]] = []
    for seed in seeds:
        traj = scripted_expert(seed)
        for rec in traj.steps:
            frames.append(set(rec.obs_struct.get("window_tiles", []))
                          | set(rec.obs_struct.get("window_entities", [])))
    return frames


@dataclass
class GroundTruth:
    """Everything the simulator guarantees, in record form."""

    seeds: tuple[int, ...] = tuple(DEMO_SEEDS)
    co_occurrence: dict[str, dict[str, str]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.co_occurrence:
            self.co_occurrence = co_occurrence_tables(self.seeds)

    # ------------------------------------------------------------- lookups
    def action_value(self, subject: str, attribute: str):
        return ACTION_TABLE[subject][attribute]

    def object_value(self, subject: str, attribute: str):
        if attribute == "walkable":
            return WALKABLE_TABLE[subject]
        if attribute == "time_relationship":
            return TIME_TABLE[subject]
        if attribute == "co_occurrence":
            return self.co_occurrence.get(subject)
        raise KeyError(attribute)

    def subtask_value(self, subject: str, attribute: str):
        return subtask_plan(subject)[attribute]

    # ------------------------------------------------------------------ kb
    def build_kb(self) -> KnowledgeBase:
        kb = KnowledgeBase()
        for subject in sorted(ACTION_TABLE):
            for attribute, value in ACTION_TABLE[subject].items():
                kb.add(DynamicRecord("action", subject, attribute, value, status="verified"))
        for subject in OBJECT_SUBJECTS:
            kb.add(DynamicRecord("object", subject, "walkable",
                                 WALKABLE_TABLE[subject], status="verified"))
            kb.add(DynamicRecord("object", subject, "time_relationship",
                                 TIME_TABLE[subject], status="verified"))
            rel = self.co_occurrence.get(subject)
            if rel:
                kb.add(DynamicRecord("object", subject, "co_occurrence", rel, status="verified"))
        for subject in SUBTASK_SUBJECT_LIST:
            plan = subtask_plan(subject)
            for attribute, value in plan.items():
                kb.add(DynamicRecord("subtask", subject, attribute, value, status="verified"))
        for index, (subject, reps, _desc) in enumerate(SUBGOAL_SEQUENCE):
            kb.add(DynamicRecord("subgoal", subject, "position_in_sequence",
                                 {"index": index, "repetitions": reps}, status="verified"))
        return kb


@lru_cache(maxsize=2)
def ground_truth(seeds: tuple[int, ...] = tuple(DEMO_SEEDS)) -> GroundTruth:
    return GroundTruth(seeds=seeds)


def build_gold_kb(seeds: tuple[int, ...] = tuple(DEMO_SEEDS)) -> KnowledgeBase:
    return ground_truth(seeds).build_kb()
