"""Observation verbalization and parsing.

The text format is documented in docs/verbalizer-format.md. verbalize() is
byte-stable for identical views, and parse_obs() inverts it back to the
structured summary.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .world.types import (
    ENTITY_KINDS,
    GRID_SIZE,
    INVENTORY_ITEMS,
    STATUS_KEYS,
    TILE_KINDS,
    WINDOW_HALF_X,
    WINDOW_HALF_Y,
    WorldState,
)

UNSEEN = -1
_ENTITY_BASE = 100
_DISPLAY_NAMES = {i: k for i, k in enumerate(TILE_KINDS)}
_DISPLAY_NAMES.update({_ENTITY_BASE + i: k for i, k in enumerate(ENTITY_KINDS)})
_DISPLAY_CODES = {v: k for k, v in _DISPLAY_NAMES.items()}

NEARBY_RADIUS = 6

DIRECTION_NAMES = {
    (0, -1): "North", (0, 1): "South", (1, 0): "East", (-1, 0): "West",
    (1, -1): "North East", (-1, -1): "North West",
    (1, 1): "South East", (-1, 1): "South West",
}
_UNIT_BY_NAME = {v: k for k, v in DIRECTION_NAMES.items()}
DIRECTION_ORDER = sorted(DIRECTION_NAMES.values())
# tie-break priority for equally distant nearest objects
DIRECTION_PRIORITY = ["North", "North East", "East", "South East",
                      "South", "South West", "West", "North West"]


class ObsParseError(ValueError):
    def __init__(self, section: str, message: str):
        self.section = section
        super().__init__(f"[{section}] {message}")


@dataclass
class AgentView:
    """The agent's accumulated, monotone-growing picture of the world."""

    seen_tiles: np.ndarray = field(default_factory=lambda: np.full((GRID_SIZE, GRID_SIZE), UNSEEN, dtype=np.int16))
    seen_display: np.ndarray = field(default_factory=lambda: np.full((GRID_SIZE, GRID_SIZE), UNSEEN, dtype=np.int16))
    player_x: int = 0
    player_y: int = 0
    facing: str = "south"
    status: dict[str, int] = field(default_factory=dict)
    inventory: dict[str, int] = field(default_factory=dict)
    daylight: bool = True
    window_tiles: set[str] = field(default_factory=set)
    window_entities: set[str] = field(default_factory=set)

    def observe(self, state: WorldState) -> None:
        px, py = state.player_x, state.player_y
        self.player_x, self.player_y = px, py
        self.facing = state.facing
        self.status = state.status.as_dict()
        self.inventory = dict(state.inventory)
        self.daylight = state.is_day
        self.window_tiles = set()
        self.window_entities = set()
        x0, x1 = max(0, px - WINDOW_HALF_X), min(GRID_SIZE, px + WINDOW_HALF_X + 1)
        y0, y1 = max(0, py - WINDOW_HALF_Y), min(GRID_SIZE, py + WINDOW_HALF_Y + 1)
        self.seen_tiles[y0:y1, x0:x1] = state.grid[y0:y1, x0:x1]
        self.seen_display[y0:y1, x0:x1] = state.grid[y0:y1, x0:x1]
        for c in state.creatures:
            if x0 <= c.x < x1 and y0 <= c.y < y1:
                self.seen_display[c.y, c.x] = _DISPLAY_CODES[c.kind]
                self.window_entities.add(c.kind)
        for code in np.unique(state.grid[y0:y1, x0:x1]):
            self.window_tiles.add(TILE_KINDS[int(code)])

    def copy(self) -> "AgentView":
        view = AgentView(
            seen_tiles=self.seen_tiles.copy(),
            seen_display=self.seen_display.copy(),
            player_x=self.player_x,
            player_y=self.player_y,
            facing=self.facing,
            status=dict(self.status),
            inventory=dict(self.inventory),
            daylight=self.daylight,
        )
        view.window_tiles = set(self.window_tiles)
        view.window_entities = set(self.window_entities)
        return view


def view_from_state(state: WorldState) -> AgentView:
    view = AgentView()
    view.observe(state)
    return view


def _direction_of(dx: int, dy: int) -> str:
    """Octant bucketing: pure cardinal when one axis clearly dominates."""
    adx, ady = abs(dx), abs(dy)
    if adx > 2 * ady:
        return "East" if dx > 0 else "West"
    if ady > 2 * adx:
        return "South" if dy > 0 else "North"
    ns = "South" if dy > 0 else "North"
    ew = "East" if dx > 0 else "West"
    return f"{ns} {ew}"


def _bresenham_interior(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    cells = []
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx, sy = (1 if x0 < x1 else -1), (1 if y0 < y1 else -1)
    err = dx + dy
    x, y = x0, y0
    while True:
        if (x, y) != (x0, y0) and (x, y) != (x1, y1):
            cells.append((x, y))
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy
    return cells


def _direction_sections(view: AgentView) -> dict[str, dict]:
    px, py = view.player_x, view.player_y
    sections: dict[str, dict] = {}
    for name in DIRECTION_ORDER:
        ux, uy = _UNIT_BY_NAME[name]
        ix, iy = px + ux, py + uy
        if 0 <= ix < GRID_SIZE and 0 <= iy < GRID_SIZE and view.seen_display[iy, ix] != UNSEEN:
            immediate = _DISPLAY_NAMES[int(view.seen_display[iy, ix])]
        else:
            immediate = None
        sections[name] = {"immediate": immediate, "nearby": []}

    best: dict[str, dict[str, int]] = {name: {} for name in DIRECTION_ORDER}
    for dy in range(-NEARBY_RADIUS, NEARBY_RADIUS + 1):
        for dx in range(-NEARBY_RADIUS, NEARBY_RADIUS + 1):
            d = max(abs(dx), abs(dy))
            if d < 2 or d > NEARBY_RADIUS:
                continue
            x, y = px + dx, py + dy
            if not (0 <= x < GRID_SIZE and 0 <= y < GRID_SIZE):
                continue
            direction = _direction_of(dx, dy)
            code = int(view.seen_display[y, x])
            label = "unexplored_area" if code == UNSEEN else _DISPLAY_NAMES[code]
            cur = best[direction].get(label)
            if cur is None or d < cur:
                best[direction][label] = d
    for name in DIRECTION_ORDER:
        ordered = sorted(best[name].items(), key=lambda kv: (kv[1], kv[0]))
        sections[name]["nearby"] = [label for label, _ in ordered]
    return sections


def _closest_objects(view: AgentView) -> dict[str, dict]:
    px, py = view.player_x, view.player_y
    out: dict[str, dict] = {}
    display = view.seen_display
    for code, name in _DISPLAY_NAMES.items():
        mask = display == code
        mask[py, px] = False  # the tile underfoot is not a target
        points = np.argwhere(mask)
        if not len(points):
            continue
        dist = np.maximum(np.abs(points[:, 1] - px), np.abs(points[:, 0] - py))
        dmin = int(dist.min())
        candidates = points[dist == dmin]

        def sort_key(p):
            dx, dy = int(p[1]) - px, int(p[0]) - py
            return (DIRECTION_PRIORITY.index(_direction_of(dx, dy)), dx, dy)

        y, x = min(candidates.tolist(), key=lambda p: sort_key(p))
        dx, dy = int(x) - px, int(y) - py
        between: set[str] = set()
        for bx, by in _bresenham_interior(px, py, int(x), int(y)):
            c = int(display[by, bx])
            between.add("unexplored_area" if c == UNSEEN else _DISPLAY_NAMES[c])
        out[name] = {
            "direction": _direction_of(dx, dy),
            "distance": dmin,
            "band": "immediate" if dmin == 1 else "nearby",
            "between": sorted(between) if between else None,
        }
    return dict(sorted(out.items()))


def summary_from_view(view: AgentView) -> dict:
    """The text-equivalent structured summary (what parse_obs recovers)."""
    px, py = view.player_x, view.player_y
    ux, uy = _UNIT_BY_NAME[{"north": "North", "south": "South", "east": "East", "west": "West"}[view.facing]]
    fx, fy = px + ux, py + uy
    if 0 <= fx < GRID_SIZE and 0 <= fy < GRID_SIZE and view.seen_display[fy, fx] != UNSEEN:
        faced = _DISPLAY_NAMES[int(view.seen_display[fy, fx])]
    else:
        faced = "unexplored_area"
    return {
        "daylight": view.daylight,
        "directions": _direction_sections(view),
        "closest": _closest_objects(view),
        "facing": {"object": faced, "direction": view.facing},
        "status": dict(view.status),
        "inventory": {k: v for k, v in view.inventory.items() if v},
    }


def obs_struct_from_view(view: AgentView) -> dict:
    struct = summary_from_view(view)
    struct["window_tiles"] = sorted(view.window_tiles)
    struct["window_entities"] = sorted(view.window_entities)
    return struct


def verbalize(view: AgentView) -> str:
    summary = summary_from_view(view)
    return render_summary(summary)


def render_summary(summary: dict) -> str:
    lines = []
    lines.append("It is daytime" if summary["daylight"] else "It is nighttime")
    lines.append("State description: ")
    for name in DIRECTION_ORDER:
        sec = summary["directions"][name]
        imm = sec["immediate"] if sec["immediate"] is not None else "none"
        nearby = ", ".join(sec["nearby"]) if sec["nearby"] else "none"
        lines.append(f"- {name}: immediate ({imm}); nearby ({nearby}); ")
    lines.append("Closest:")
    for kind, info in summary["closest"].items():
        between = info["between"]
        if between:
            rendered = "{" + ", ".join(f"'{b}'" for b in between) + "}"
        else:
            rendered = "None"
        lines.append(
            f"- {kind}: {info['direction']} {info['distance']} blocks away "
            f"({info['band']}) (objects in between: {rendered}) "
        )
    lines.append(f"- Facing {summary['facing']['object']} on the {summary['facing']['direction']}.")
    lines.append("Your status:")
    for key in STATUS_KEYS:
        lines.append(f"- {key}: {summary['status'][key]}/9")
    inventory = summary["inventory"]
    if inventory:
        lines.append("Your inventory:")
        for item in INVENTORY_ITEMS:
            if inventory.get(item):
                lines.append(f"- {item}: {inventory[item]}")
    else:
        lines.append("You have nothing in your inventory.")
    return "\n".join(lines) + "\n"


_DIR_LINE = re.compile(r"^- (?P<dir>[A-Za-z ]+): immediate \((?P<imm>[^)]*)\); nearby \((?P<near>[^)]*)\); ?$")
_CLOSEST_LINE = re.compile(
    r"^- (?P<kind>[a-z_-]+): (?P<dir>[A-Za-z ]+) (?P<dist>\d+) blocks away "
    r"\((?P<band>immediate|nearby)\) \(objects in between: (?P<between>.*?)\) ?$"
)
_FACING_LINE = re.compile(r"^- Facing (?P<obj>[a-z_-]+) on the (?P<dir>north|south|east|west)\.$")
_STATUS_LINE = re.compile(r"^- (?P<key>health|food|drink|energy): (?P<val>\d+)/9$")
_INV_LINE = re.compile(r"^- (?P<item>[a-z_]+): (?P<n>\d+)$")


def _norm_kind(name: str) -> str:
    return name.strip().replace("-", "_")


def parse_obs(text: str) -> dict:
    """Parse verbalized text back into the structured summary.

    Accepts exactly the grammar render_summary emits (the published format).
    """
    lines = [ln for ln in text.splitlines()]
    idx = 0

    def peek() -> str | None:
        return lines[idx] if idx < len(lines) else None

    line = peek()
    if line == "It is daytime":
        daylight = True
    elif line == "It is nighttime":
        daylight = False
    else:
        raise ObsParseError("daylight", f"expected a daylight line, got {line!r}")
    idx += 1

    if peek() is None or not peek().startswith("State description:"):
        raise ObsParseError("state_description", f"expected 'State description: ', got {peek()!r}")
    idx += 1

    directions: dict[str, dict] = {}
    while (line := peek()) is not None and (m := _DIR_LINE.match(line)):
        imm = m.group("imm")
        near = m.group("near")
        directions[m.group("dir")] = {
            "immediate": None if imm == "none" else _norm_kind(imm),
            "nearby": [] if near == "none" else [_norm_kind(p) for p in near.split(",")],
        }
        idx += 1
    if set(directions) != set(DIRECTION_ORDER):
        missing = sorted(set(DIRECTION_ORDER) - set(directions))
        raise ObsParseError("directions", f"missing direction lines: {missing}")

    if peek() != "Closest:":
        raise ObsParseError("closest", f"expected 'Closest:', got {peek()!r}")
    idx += 1

    closest: dict[str, dict] = {}
    while (line := peek()) is not None and (m := _CLOSEST_LINE.match(line)):
        raw = m.group("between").strip()
        if raw == "None":
            between = None
        else:
            between = sorted(_norm_kind(p) for p in re.findall(r"'([^']+)'", raw))
        closest[_norm_kind(m.group("kind"))] = {
            "direction": m.group("dir").strip(),
            "distance": int(m.group("dist")),
            "band": m.group("band"),
            "between": between,
        }
        idx += 1

    line = peek()
    if line is None or not (m := _FACING_LINE.match(line)):
        raise ObsParseError("facing", f"expected a facing line, got {line!r}")
    facing = {"object": _norm_kind(m.group("obj")), "direction": m.group("dir")}
    idx += 1

    if peek() != "Your status:":
        raise ObsParseError("status", f"expected 'Your status:', got {peek()!r}")
    idx += 1
    status: dict[str, int] = {}
    for _ in range(4):
        line = peek()
        if line is None or not (m := _STATUS_LINE.match(line)):
            raise ObsParseError("status", f"expected a status line, got {line!r}")
        status[m.group("key")] = int(m.group("val"))
        idx += 1

    inventory: dict[str, int] = {}
    line = peek()
    if line == "You have nothing in your inventory.":
        idx += 1
    elif line == "Your inventory:":
        idx += 1
        while (line := peek()) is not None and (m := _INV_LINE.match(line)):
            inventory[m.group("item")] = int(m.group("n"))
            idx += 1
    else:
        raise ObsParseError("inventory", f"expected an inventory section, got {line!r}")

    return {
        "daylight": daylight,
        "directions": directions,
        "closest": closest,
        "facing": facing,
        "status": status,
        "inventory": inventory,
    }
