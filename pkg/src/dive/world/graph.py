"""The 22-achievement dependency DAG."""
from __future__ import annotations

from functools import lru_cache

ACHIEVEMENTS = (
    "collect_wood", "place_table", "make_wood_pickaxe", "make_wood_sword",
    "collect_stone", "place_stone", "make_stone_pickaxe", "make_stone_sword",
    "collect_coal", "collect_iron", "place_furnace",
    "make_iron_pickaxe", "make_iron_sword", "collect_diamond",
    "collect_sapling", "place_plant", "eat_plant",
    "eat_cow", "collect_drink", "defeat_zombie", "defeat_skeleton", "wake_up",
)

# prerequisite -> dependents
_EDGES = (
    ("collect_wood", "place_table"),
    ("place_table", "make_wood_pickaxe"),
    ("place_table", "make_wood_sword"),
    ("make_wood_pickaxe", "collect_stone"),
    ("make_wood_pickaxe", "collect_coal"),
    ("collect_stone", "place_stone"),
    ("collect_stone", "make_stone_pickaxe"),
    ("collect_stone", "make_stone_sword"),
    ("collect_stone", "place_furnace"),
    ("make_stone_pickaxe", "collect_iron"),
    ("collect_iron", "make_iron_pickaxe"),
    ("collect_iron", "make_iron_sword"),
    ("collect_coal", "make_iron_pickaxe"),
    ("collect_coal", "make_iron_sword"),
    ("place_furnace", "make_iron_pickaxe"),
    ("place_furnace", "make_iron_sword"),
    ("make_iron_pickaxe", "collect_diamond"),
    ("collect_sapling", "place_plant"),
    ("place_plant", "eat_plant"),
)


class AchievementGraph:
    """Directed acyclic graph over the 22 achievements."""

    def __init__(self) -> None:
        self.vertices: tuple[str, ...] = ACHIEVEMENTS
        self.edges: tuple[tuple[str, str], ...] = _EDGES
        self._parents: dict[str, set[str]] = {v: set() for v in ACHIEVEMENTS}
        self._children: dict[str, set[str]] = {v: set() for v in ACHIEVEMENTS}
        for u, v in _EDGES:
            self._parents[v].add(u)
            self._children[u].add(v)

    def parents(self, v: str) -> set[str]:
        return set(self._parents[v])

    def ancestors(self, v: str) -> set[str]:
        out: set[str] = set()
        stack = list(self._parents[v])
        while stack:
            u = stack.pop()
            if u not in out:
                out.add(u)
                stack.extend(self._parents[u])
        return out

    def topological_sort(self) -> list[str]:
        indeg = {v: len(self._parents[v]) for v in self.vertices}
        order: list[str] = []
        ready = sorted(v for v, d in indeg.items() if d == 0)
        while ready:
            v = ready.pop(0)
            order.append(v)
            for w in sorted(self._children[v]):
                indeg[w] -= 1
                if indeg[w] == 0:
                    ready.append(w)
            ready.sort()
        if len(order) != len(self.vertices):
            raise ValueError("achievement graph contains a cycle")
        return order

    def is_linear_extension(self, sequence: list[str]) -> bool:
        """True if achievements in `sequence` never precede their ancestors."""
        seen: set[str] = set()
        for name in sequence:
            if name not in self._parents:
                return False
            if not self._parents[name] <= seen and not self.ancestors(name) <= seen:
                return False
            seen.add(name)
        return True


@lru_cache(maxsize=1)
def achievement_graph() -> AchievementGraph:
    return AchievementGraph()
