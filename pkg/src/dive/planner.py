"""Hierarchical decision loop: sub-goal cursor, sub-task ranking, termination
checking, symbolic invalid-action masking, and action selection."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .backend.core import ChatBackend
from .banks import PLANNER_SUBTASKS, SUBTASK_FOR_ACHIEVEMENT
from .discoverer import complete_structured, render_action_dynamics
from .evolver import (
    EVOLVE_EVERY_STEPS,
    STRATEGY_CAP,
    USEFULNESS_THRESHOLD,
    StrategyStore,
    critique_strategies,
    propose_strategies,
)
from .records import KnowledgeBase
from .trajectory import Trajectory, rollout
from .verbalizer import AgentView, obs_struct_from_view, render_summary
from .world.mapgen import generate_world
from .world.types import ACTIONS, DEFAULT_STEP_CAP, DO_SEMANTICS, MOVE_ACTIONS, MOVE_DIRECTION

_DO_BY_TARGET = dict(DO_SEMANTICS)  # faced object -> semantic action name
_SEMANTIC_SUBJECTS = tuple(sorted(DO_SEMANTICS.values()))


class EpisodeSuccess(Exception):
    """Raised internally when every sub-goal is complete."""


@dataclass
class SubgoalEntry:
    subtask: str
    repetitions: int
    index: int


@dataclass
class PlannerConfig:
    step_cap: int = DEFAULT_STEP_CAP
    mask_enabled: bool = True
    evolve_enabled: bool = True
    history_window: int = 3
    subtask_step_budget: int = 50
    strategy_threshold: int = USEFULNESS_THRESHOLD
    strategy_cap: int = STRATEGY_CAP
    evolve_every: int = EVOLVE_EVERY_STEPS


def subgoal_plan_from_kb(kb: KnowledgeBase) -> list[SubgoalEntry]:
    records = kb.by_level("subgoal", "verified") or kb.by_level("subgoal")
    entries = []
    for record in records:
        value = record.value
        entries.append(SubgoalEntry(subtask=record.subject,
                                    repetitions=int(value["repetitions"]),
                                    index=int(value["index"])))
    entries.sort(key=lambda e: e.index)
    return entries


def current_subgoal(plan: list[SubgoalEntry], progress: dict[int, int]) -> SubgoalEntry:
    """Earliest entry whose completion count is below its repetitions."""
    if not plan:
        raise ValueError("empty subgoal plan")
    for entry in plan:
        if progress.get(entry.index, 0) < entry.repetitions:
            return entry
    raise EpisodeSuccess


# ------------------------------------------------------------------- masking
def _ring_objects(obs_struct: dict) -> set[str]:
    out = set()
    for sec in obs_struct.get("directions", {}).values():
        imm = sec.get("immediate")
        if imm and imm != "unexplored_area":
            out.add(imm)
    return out


def _constraints_hold(obs_struct: dict, kb: KnowledgeBase, subject: str,
                      check_facing: bool = True) -> bool:
    inventory = obs_struct.get("inventory", {})
    faced = obs_struct.get("facing", {}).get("object")
    ring = _ring_objects(obs_struct)
    facing_rows = kb.lookup("action", subject, "facing_object", "verified")
    if check_facing and facing_rows and facing_rows[0].value is not None:
        if faced not in facing_rows[0].value:
            return False
    material_rows = kb.lookup("action", subject, "materials_used", "verified")
    if material_rows and material_rows[0].value is not None:
        for item, n in material_rows[0].value.items():
            if inventory.get(item, 0) < n:
                return False
    tool_rows = kb.lookup("action", subject, "inventory_tool", "verified")
    if tool_rows and tool_rows[0].value is not None:
        if inventory.get(tool_rows[0].value, 0) < 1:
            return False
    immediate_rows = kb.lookup("action", subject, "immediate_objects", "verified")
    if immediate_rows and immediate_rows[0].value is not None:
        if not set(immediate_rows[0].value) <= ring:
            return False
    return True


def mask_invalid_actions(obs_struct: dict, kb: KnowledgeBase) -> set[str]:
    """Purely symbolic feasibility from verified dynamics. Actions without any
    constraining record stay available (recall-first)."""
    available: set[str] = {"noop", "sleep"}

    dir_name = {"move_north": "North", "move_south": "South",
                "move_east": "East", "move_west": "West"}
    facing_dir = obs_struct.get("facing", {}).get("direction")
    for action in MOVE_ACTIONS:
        if MOVE_DIRECTION[action] != facing_dir:
            available.add(action)  # turning toward the cell always works
            continue
        sec = obs_struct.get("directions", {}).get(dir_name[action], {})
        target = sec.get("immediate")
        if target is None:
            continue  # the world ends there; nothing to move onto or turn to
        if target == "unexplored_area":
            available.add(action)
            continue
        rows = kb.lookup("object", target, "walkable", "verified")
        if rows and rows[0].value is False:
            continue
        available.add(action)

    facing_known = [s for s in _SEMANTIC_SUBJECTS
                    if kb.lookup("action", s, "facing_object", "verified")]
    if not facing_known:
        available.add("do")
    else:
        faced = obs_struct.get("facing", {}).get("object")
        for subject in facing_known:
            facing_set = kb.lookup("action", subject, "facing_object", "verified")[0].value
            if facing_set is not None and faced in facing_set \
                    and _constraints_hold(obs_struct, kb, subject, check_facing=False):
                available.add("do")
                break

    for action in ACTIONS:
        if action in available or action in ("noop", "sleep", "do") or action in MOVE_ACTIONS:
            continue
        if _constraints_hold(obs_struct, kb, action):
            available.add(action)
    return available


# --------------------------------------------------------------------- agent
class DiveAgentPolicy:
    """Policy driving the full loop: sub-goal -> sub-task -> evolve -> mask ->
    select. Usable directly with trajectory.rollout."""

    def __init__(self, kb: KnowledgeBase, backend: ChatBackend,
                 config: PlannerConfig | None = None,
                 strategy_log: str | None = None):
        self.kb = kb
        self.backend = backend
        self.config = config or PlannerConfig()
        self.plan = subgoal_plan_from_kb(kb)
        self.progress: dict[int, int] = {}
        self.unlocked: set[str] = set()
        self.subtask: str | None = None
        self.subtask_start_text = ""
        self.subtask_steps = 0
        self.completions_since_start: list[str] = []
        self.history: deque[str] = deque(maxlen=self.config.history_window)
        self.strategies = StrategyStore(cap=self.config.strategy_cap,
                                        threshold=self.config.strategy_threshold,
                                        log_path=strategy_log)
        self.metrics = {"subtask_switches": 0, "masked_rejections": 0,
                        "fallback_selections": 0, "strategies_admitted": 0}
        self._dynamics_text = render_action_dynamics(kb)
        self._last_subtask = "None"
        self._steps_since_evolve = 0

    # per-step bookkeeping fed by the rollout callback
    def note_outcome(self, record, state) -> None:
        sem = record.semantic_action
        success = bool(record.success)
        self.history.append(f"{record.action} ({sem or 'none'}): "
                            f"{'succeeded' if success else 'failed'}")
        done = [SUBTASK_FOR_ACHIEVEMENT[a] for a in record.achievements]
        if (success and sem in SUBTASK_FOR_ACHIEVEMENT and sem in self.unlocked
                and sem not in record.achievements):
            done.append(sem)
        self.unlocked.update(record.achievements)
        for name in done:
            self.completions_since_start.append(name)
            try:
                entry = current_subgoal(self.plan, self.progress)
            except EpisodeSuccess:
                continue
            if name == entry.subtask:
                self.progress[entry.index] = self.progress.get(entry.index, 0) + 1

    # ------------------------------------------------------------ decisions
    def _plan_subtask(self, obs_text: str, struct: dict, subgoal: SubgoalEntry) -> str:
        bindings = {
            "subgoal": f"{subgoal.subtask} x{subgoal.repetitions}",
            "subtasks": list(PLANNER_SUBTASKS),
            "env_dynamics": self._dynamics_text,
            "state_description": obs_text,
            "last_subtask": self._last_subtask,
            "_struct": struct,
            "_subgoal_subtask": subgoal.subtask,
            "_last": self._last_subtask,
        }
        exchange = complete_structured(self.backend, "rank_subtask", bindings)
        if exchange is None:
            return subgoal.subtask
        choice = str(exchange.parsed["subtask"])
        return choice if choice in PLANNER_SUBTASKS else subgoal.subtask

    def _check_termination(self, obs_text: str, struct: dict) -> bool:
        plan_rows = self.kb.lookup("subtask", self.subtask, "termination_condition", "verified")
        described = plan_rows[0].value if plan_rows else "the outcome is reached"
        bindings = {
            "subtask": f"{self.subtask}: terminate when {described}",
            "state_description": obs_text,
            "initial_state_description": self.subtask_start_text,
            "previous_actions": list(self.history),
            "_subtask": self.subtask,
            "_struct": struct,
            "_completions": list(self.completions_since_start),
            "_actions": [h.split(" ")[0] for h in self.history],
        }
        exchange = complete_structured(self.backend, "check_termination", bindings)
        if exchange is None:
            # heuristic fallback: any completion or critical status ends it
            status = struct.get("status", {})
            return bool(self.completions_since_start) or status.get("health", 9) <= 3
        return bool(exchange.parsed["terminated"])

    def _evolve(self, obs_text: str, struct: dict) -> None:
        if not self.config.evolve_enabled:
            return
        candidates = propose_strategies(self.kb, obs_text, struct, self.subtask, self.backend)
        scored = critique_strategies(candidates, self.kb, self.subtask, self.backend)
        admitted = self.strategies.admit(scored, step=self.subtask_steps)
        self.metrics["strategies_admitted"] += len(admitted)

    def _select_action(self, obs_text: str, struct: dict, available: set[str]) -> str:
        ordered = sorted(available, key=ACTIONS.index)
        strategies = [s.text for s in self.strategies.for_subtask(self.subtask)]
        plan_rows = self.kb.lookup("subtask", self.subtask, "general_plan", "verified")
        described = (f"{self.subtask}. Plan: " + " ".join(plan_rows[0].value)
                     if plan_rows else self.subtask)
        base = {
            "state_description": obs_text,
            "subtask": described,
            "previous_actions": list(self.history),
            "primitive_dynamics": self._dynamics_text,
            "strategies": strategies or "None",
            "available_actions": ordered,
            "_subtask": self.subtask,
            "_struct": struct,
        }
        exchange = complete_structured(self.backend, "select_action",
                                       {**base, "feedback": ""})
        if exchange is not None:
            action = str(exchange.parsed["action"])
            if action in available:
                return action
            self.metrics["masked_rejections"] += 1
            retry = complete_structured(self.backend, "select_action", {
                **base,
                "feedback": (f"your previous choice '{action}' is not in the "
                             "available actions; choose one of them"),
            })
            if retry is not None:
                action = str(retry.parsed["action"])
                if action in available:
                    return action
        self.metrics["fallback_selections"] += 1
        return ordered[0]

    # ------------------------------------------------------------------ api
    def __call__(self, state, view: AgentView) -> str | None:
        if hasattr(self.backend, "bind_world"):
            self.backend.bind_world(state, view)
        struct = getattr(view, "last_struct", None) or obs_struct_from_view(view)
        obs_text = getattr(view, "last_text", None) or render_summary(struct)

        try:
            subgoal = current_subgoal(self.plan, self.progress)
        except EpisodeSuccess:
            return None

        switched = False
        if self.subtask is None:
            switched = True
        elif self._check_termination(obs_text, struct):
            switched = True
        elif self.subtask_steps >= self.config.subtask_step_budget:
            switched = True

        if switched:
            if self.subtask is not None:
                self.strategies.expire_subtask(self.subtask)
            new_subtask = self._plan_subtask(obs_text, struct, subgoal)
            if new_subtask != self.subtask:
                self.metrics["subtask_switches"] += 1
            self.subtask = new_subtask
            self._last_subtask = new_subtask
            self.subtask_start_text = obs_text
            self.subtask_steps = 0
            self.completions_since_start = []
            self._evolve(obs_text, struct)
            self._steps_since_evolve = 0
        elif self._steps_since_evolve >= self.config.evolve_every:
            self._evolve(obs_text, struct)
            self._steps_since_evolve = 0

        if self.config.mask_enabled:
            available = mask_invalid_actions(struct, self.kb)
        else:
            available = set(ACTIONS)
        action = self._select_action(obs_text, struct, available)
        self.subtask_steps += 1
        self._steps_since_evolve += 1
        return action


def run_episode(seed: int, kb: KnowledgeBase, backend: ChatBackend,
                config: PlannerConfig | None = None,
                strategy_log: str | None = None) -> tuple[Trajectory, dict]:
    """Full DiVE episode: returns the trajectory and planner metrics."""
    config = config or PlannerConfig()
    policy = DiveAgentPolicy(kb, backend, config, strategy_log=strategy_log)
    state = generate_world(seed)
    trajectory = rollout(state, policy, source="scripted", step_cap=config.step_cap,
                         on_step=policy.note_outcome)
    metrics = dict(policy.metrics)
    metrics["plan_complete"] = not policy.plan or _plan_done(policy)
    return trajectory, metrics


def _plan_done(policy: DiveAgentPolicy) -> bool:
    try:
        current_subgoal(policy.plan, policy.progress)
        return False
    except EpisodeSuccess:
        return True
