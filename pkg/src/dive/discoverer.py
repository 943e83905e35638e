"""Curriculum discovery of world-dynamic candidates from bank evidence.

Runs per-attribute prompt rounds over the task-decomposition hierarchy:
actions and objects first, then sub-task plans grounded in the verified
primitives, then the sub-goal ordering.
"""
from __future__ import annotations

import hashlib
import logging

from .backend.core import ChatBackend, ChatExchange
from .banks import (
    ACTION_SUBJECTS,
    DEFAULT_SAMPLE_K,
    ExperienceBank,
    OBJECT_SUBJECTS,
    compress_completions,
    relevant,
    sample,
)
from .gold import SUBTASK_SUBJECT_LIST
from .records import ACTION_ATTRIBUTES, DynamicRecord, KnowledgeBase

log = logging.getLogger(__name__)

DEFAULT_DISCOVERY_STEPS = 10
PARSE_RETRIES = 3

_ACTION_TEMPLATE = {
    "materials_used": "discover_action_materials",
    "immediate_objects": "discover_action_immediate",
    "facing_object": "discover_action_facing",
    "inventory_tool": "discover_action_tool",
    "outcome_increase": "discover_action_outcome",
    "facing_object_change": "discover_action_facing_change",
}


def stable_seed(*parts) -> int:
    blob = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(blob.encode()).digest()[:8], "little")


def complete_structured(backend: ChatBackend, template_id: str, bindings: dict,
                        retries: int = PARSE_RETRIES) -> ChatExchange | None:
    """complete() with parse-failure retries via a corrective follow-up."""
    exchange = None
    for attempt in range(retries):
        attempt_bindings = dict(bindings)
        if attempt:
            attempt_bindings["_corrective"] = attempt
        exchange = backend.complete(template_id, attempt_bindings)
        if exchange.ok:
            return exchange
    if exchange is not None:
        log.warning("backend failed to produce valid output for %s: %s",
                    template_id, exchange.parse_error)
    return None


# ----------------------------------------------------------------- rendering
def render_transition(tr, index: int | None = None) -> str:
    head = f"State transition {index}:\n" if index is not None else ""
    return (f"{head}Observation before the action:\n{tr.before_text}"
            f"Action executed: {tr.semantic_action}\n"
            f"Observation after the action:\n{tr.after_text}")


def render_transitions(transitions: list) -> str:
    return "\n".join(render_transition(t, i + 1) for i, t in enumerate(transitions))


def render_frames(frames: list) -> str:
    blocks = []
    for i, frame in enumerate(frames):
        blocks.append(f"Frame {i + 1}:\n{frame.text}")
    return "\n".join(blocks)


def render_segment(segment, index: int | None = None) -> str:
    head = f"Example {index}:\n" if index is not None else ""
    actions = [s["semantic_action"] or s["action"] for s in segment.steps if s["success"]]
    first_obs = segment.steps[0]["obs_text"] if segment.steps else ""
    return (f"{head}Starting observation:\n{first_obs}"
            f"Actions executed in order: {', '.join(actions)}\n"
            f"Completed subtask: {segment.subtask}\n")


def render_segments(segments: list) -> str:
    return "\n".join(render_segment(s, i + 1) for i, s in enumerate(segments))


def render_action_dynamics(kb: KnowledgeBase, subjects=None, status: str = "verified") -> str:
    lines = []
    for subject in sorted(subjects or ACTION_SUBJECTS):
        rows = [r for r in kb.by_level("action", status) if r.subject == subject]
        if not rows:
            continue
        parts = {r.attribute: r.value for r in rows}
        lines.append(
            f"Action {subject}: it needs to face {parts.get('facing_object') or 'None'}; "
            f"it needs {parts.get('immediate_objects') or 'None'} within immediate distance; "
            f"it uses materials {parts.get('materials_used') or 'None'}; "
            f"it requires the tool {parts.get('inventory_tool') or 'None'}; "
            f"its inventory and status increase is {parts.get('outcome_increase') or 'None'}; "
            f"the facing object changes to {parts.get('facing_object_change') or 'None'}."
        )
    return "\n".join(lines)


def render_value(value) -> str:
    import json

    return "None" if value is None else json.dumps(value, sort_keys=True)


def demo_completion_lists(bank: ExperienceBank) -> list[str]:
    latest: dict[str, list[str]] = {}
    for seq in bank.sequences:
        latest[seq.trajectory_id] = seq.completions  # last one per trajectory wins
    return [", ".join(compress_completions(v)) for _, v in sorted(latest.items())]


# ----------------------------------------------------------------- discovery
def discover_action_dynamics(bank: ExperienceBank, action_name: str, steps: int,
                             backend: ChatBackend, k: int = DEFAULT_SAMPLE_K,
                             kb: KnowledgeBase | None = None,
                             start_step: int = 1) -> list[DynamicRecord]:
    kb = kb if kb is not None else KnowledgeBase()
    out = []
    for step_index in range(start_step, start_step + steps):
        for attribute, template_id in _ACTION_TEMPLATE.items():
            seed = stable_seed("discover", action_name, attribute, step_index)
            experiences = sample(bank, "action", action_name, k=k, rng_seed=seed)
            if not experiences:
                continue
            bindings = {
                "action": action_name,
                "partial_description": render_transitions(experiences),
            }
            exchange = complete_structured(backend, template_id, bindings)
            if exchange is None:
                continue
            value = exchange.parsed[attribute]
            record = DynamicRecord(
                "action", action_name, attribute, value,
                evidence=[e.id for e in experiences], discovery_step=step_index,
            )
            out.append(kb.add(record))
    return out


def discover_object_dynamics(bank: ExperienceBank, object_name: str, steps: int,
                             backend: ChatBackend, k: int = DEFAULT_SAMPLE_K,
                             kb: KnowledgeBase | None = None,
                             start_step: int = 1) -> list[DynamicRecord]:
    kb = kb if kb is not None else KnowledgeBase()
    out = []
    for step_index in range(start_step, start_step + steps):
        seed = stable_seed("discover", object_name, "relations", step_index)
        frames = sample(bank, "object", object_name, k=k, rng_seed=seed)
        if not frames:
            continue
        bindings = {"obj": object_name, "description": render_frames(frames)}
        exchange = complete_structured(backend, "discover_object_relations", bindings)
        if exchange is None:
            continue
        parsed = exchange.parsed
        rel = {**{o: "very_related" for o in parsed["very_related"]},
               **{o: "not_related" for o in parsed["not_related"]}}
        evidence = [f.id for f in frames]
        values = [("co_occurrence", rel or None), ("time_relationship", parsed["time_relationship"]),
                  ("walkable", parsed["walkable"])]
        for attribute, value in values:
            if attribute == "co_occurrence" and value is None:
                continue
            record = DynamicRecord("object", object_name, attribute, value,
                                   evidence=evidence, discovery_step=step_index)
            out.append(kb.add(record))
    return out


def discover_subtask_plans(bank: ExperienceBank, subtask_name: str, steps: int,
                           backend: ChatBackend, action_dynamics: KnowledgeBase,
                           k: int = DEFAULT_SAMPLE_K,
                           kb: KnowledgeBase | None = None,
                           start_step: int = 1) -> list[DynamicRecord]:
    kb = kb if kb is not None else KnowledgeBase()
    out = []
    dynamics_text = render_action_dynamics(action_dynamics)
    for step_index in range(start_step, start_step + steps):
        seed = stable_seed("discover", subtask_name, "plan", step_index)
        segments = sample(bank, "subtask", subtask_name, k=k, rng_seed=seed)
        if not segments:
            continue
        bindings = {
            "subtask": subtask_name,
            "action_dynamics": dynamics_text,
            "partial_description": render_segments(segments),
            "examples": "",
        }
        exchange = complete_structured(backend, "discover_subtask_plan", bindings)
        if exchange is None:
            continue
        evidence = [s.id for s in segments]
        for attribute in ("general_plan", "termination_condition", "requirements", "outcomes"):
            record = DynamicRecord("subtask", subtask_name, attribute,
                                   exchange.parsed[attribute],
                                   evidence=evidence, discovery_step=step_index)
            out.append(kb.add(record))
    return out


def discover_subgoal_plan(bank: ExperienceBank, backend: ChatBackend,
                          parent_dynamics: KnowledgeBase, steps: int = 1,
                          kb: KnowledgeBase | None = None,
                          start_step: int = 1) -> list[DynamicRecord]:
    from .banks import PLANNER_SUBTASKS

    kb = kb if kb is not None else KnowledgeBase()
    out = []
    demos = demo_completion_lists(bank)
    sequences = sorted(bank.sequences, key=lambda s: s.id)
    for step_index in range(start_step, start_step + steps):
        bindings = {
            "subtasks": list(PLANNER_SUBTASKS),
            "env_dynamics": render_action_dynamics(parent_dynamics),
            "human_demo": "\n".join(demos),
            "output_example": ('{"plan": [{"subtask": "collect_wood", "repetitions": 2, '
                               '"description": "Gather wood first."}]}'),
            "_noise_salt": step_index,
        }
        exchange = complete_structured(backend, "discover_subgoal_plan", bindings)
        if exchange is None:
            continue
        evidence = [s.id for s in sequences[:3]]
        for index, entry in enumerate(exchange.parsed["plan"]):
            record = DynamicRecord(
                "subgoal", entry["subtask"], "position_in_sequence",
                {"index": index, "repetitions": entry["repetitions"]},
                evidence=evidence, discovery_step=step_index,
            )
            out.append(kb.add(record))
    return out


def run_curriculum(bank: ExperienceBank, backend: ChatBackend,
                   steps: int = DEFAULT_DISCOVERY_STEPS, k: int = DEFAULT_SAMPLE_K,
                   verification_backend: ChatBackend | None = None,
                   verification_rounds: int = 3,
                   verification_k: int = 8):
    """Full Algorithm-1 curriculum with per-level verification between stages.

    Returns (candidate_kb, verified_kb, report). Candidate snapshots are per
    discovery step; verified snapshots are per verification round.
    """
    from .verifier import verify_all

    verification_backend = verification_backend or backend
    candidates = KnowledgeBase()
    verified = KnowledgeBase()

    # stage 1: actions, then objects, interleaved snapshots per step
    for step_index in range(1, steps + 1):
        for action_name in ACTION_SUBJECTS:
            discover_action_dynamics(bank, action_name, 1, backend, k=k,
                                     kb=_stepped(candidates, step_index), start_step=step_index)
        for object_name in OBJECT_SUBJECTS:
            discover_object_dynamics(bank, object_name, 1, backend, k=k,
                                     kb=_stepped(candidates, step_index), start_step=step_index)
        candidates.snapshots.append({
            "level": "primitives", "step": step_index,
            "record_ids": [r.record_id for r in candidates.records],
        })
    stage1 = KnowledgeBase(records=[r for r in candidates.records
                                    if r.level in ("action", "object")])
    verified_stage1, report1 = verify_all(stage1, bank, verification_backend,
                                          rounds=verification_rounds, k=verification_k,
                                          parents=KnowledgeBase(), stage="primitives")
    for r in verified_stage1.records:
        verified.add(r)

    # stage 2: sub-task plans grounded in verified primitives
    for step_index in range(1, steps + 1):
        for subtask_name in SUBTASK_SUBJECT_LIST:
            discover_subtask_plans(bank, subtask_name, 1, backend, verified,
                                   k=k, kb=_stepped(candidates, step_index),
                                   start_step=step_index)
        candidates.snapshots.append({
            "level": "subtask", "step": step_index,
            "record_ids": [r.record_id for r in candidates.records if r.level == "subtask"],
        })
    stage2 = KnowledgeBase(records=[r for r in candidates.records if r.level == "subtask"])
    verified_stage2, report2 = verify_all(stage2, bank, verification_backend,
                                          rounds=verification_rounds, k=verification_k,
                                          parents=verified, stage="subtask")
    for r in verified_stage2.records:
        verified.add(r)

    # stage 3: sub-goal ordering
    for step_index in range(1, steps + 1):
        discover_subgoal_plan(bank, backend, verified, steps=1,
                              kb=_stepped(candidates, step_index), start_step=step_index)
        candidates.snapshots.append({
            "level": "subgoal", "step": step_index,
            "record_ids": [r.record_id for r in candidates.records if r.level == "subgoal"],
        })
    stage3 = KnowledgeBase(records=[r for r in candidates.records if r.level == "subgoal"])
    verified_stage3, report3 = verify_all(stage3, bank, verification_backend,
                                          rounds=verification_rounds, k=verification_k,
                                          parents=verified, stage="subgoal")
    for r in verified_stage3.records:
        verified.add(r)

    report = report1.merged(report2).merged(report3)
    verified.snapshots = (verified_stage1.snapshots + verified_stage2.snapshots
                          + verified_stage3.snapshots)
    return candidates, verified, report


class _SteppedKB:
    """KnowledgeBase proxy stamping a fixed discovery step on added records."""

    def __init__(self, kb: KnowledgeBase, step: int):
        self._kb = kb
        self._step = step

    def add(self, record: DynamicRecord) -> DynamicRecord:
        record.discovery_step = self._step
        return self._kb.add(record)


def _stepped(kb: KnowledgeBase, step: int) -> _SteppedKB:
    return _SteppedKB(kb, step)
