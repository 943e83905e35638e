"""Candidate verification: per-candidate consistency checks against fresh
bank samples, then conflict detection against peers and parent dynamics."""
from __future__ import annotations

from dataclasses import dataclass, field

from .backend.core import ChatBackend
from .banks import ExperienceBank, PLANNER_SUBTASKS, relevant, sample
from .discoverer import (
    complete_structured,
    demo_completion_lists,
    render_action_dynamics,
    render_frames,
    render_segments,
    render_transitions,
    render_value,
    stable_seed,
)
from .records import DynamicRecord, KnowledgeBase, canonical_json, extract_mentions
from .world.graph import achievement_graph
from .world.types import TOOL_ITEMS

DEFAULT_VERIFY_K = 8
DEFAULT_VERIFY_ROUNDS = 3

_VERIFY_ACTION_TEMPLATE = {
    "materials_used": "verify_action_materials",
    "immediate_objects": "verify_action_immediate",
    "facing_object": "verify_action_facing",
    "inventory_tool": "verify_action_tool",
    "outcome_increase": "verify_action_outcome",
    "facing_object_change": "verify_action_facing_change",
}


@dataclass
class VerificationReport:
    verdicts: dict[str, dict] = field(default_factory=dict)

    def record(self, record_id: str, verdict: str, reason: str | None, step: int) -> None:
        self.verdicts[record_id] = {
            "verdict": verdict, "reason": reason, "verification_step": step,
        }

    def merged(self, other: "VerificationReport") -> "VerificationReport":
        merged = VerificationReport(dict(self.verdicts))
        merged.verdicts.update(other.verdicts)
        return merged

    def to_json(self) -> dict:
        return {"verdicts": self.verdicts}


def verify_candidate(record: DynamicRecord, bank: ExperienceBank, backend: ChatBackend,
                     k: int = DEFAULT_VERIFY_K, round_index: int = 1) -> tuple[str, str | None]:
    """(verdict, reason): rejected iff the candidate fails on the fresh sample
    or no relevant evidence exists at all."""
    if record.status != "candidate":
        raise ValueError(f"verify_candidate on non-candidate record {record.record_id}")
    level, subject = record.level, record.subject
    sample_level = "subgoal" if level == "subgoal" else level
    try:
        pool = relevant(bank, sample_level, subject)
    except Exception:
        pool = []
    if not pool:
        return "rejected", "unsupported"
    seed = stable_seed("verify", record.record_id, round_index)
    experiences = sample(bank, sample_level, subject, k=k, rng_seed=seed)

    if level == "action":
        template_id = _VERIFY_ACTION_TEMPLATE[record.attribute]
        bindings = {
            "action": subject,
            "precondition": render_value(record.value),
            "sampled_descriptions": render_transitions(experiences),
            "_candidate": record.value,
            "_samples": experiences,
        }
    elif level == "object":
        bindings = {
            "obj": subject,
            "description": render_frames(experiences),
            "dynamics": f"{record.attribute} = {render_value(record.value)}",
            "_candidate": record.value,
            "_attribute": record.attribute,
            "_samples": experiences,
        }
        template_id = "verify_object_relations"
    elif level == "subtask":
        bindings = {
            "subtask": subject,
            "action_dynamics": "",
            "discovered_plan": render_value(record.value),
            "partial_description": render_segments(experiences),
            "_candidate": record.value,
            "_attribute": record.attribute,
        }
        template_id = "verify_subtask_plan"
    else:  # subgoal
        graph = achievement_graph()
        bindings = {
            "subtasks": list(PLANNER_SUBTASKS),
            "env_dynamics": "",
            "human_demo": "",
            "discovered_plan": render_value({"subtask": subject, **(record.value or {})}),
            "_candidate": record.value,
            "_subject": subject,
        }
        template_id = "verify_subgoal_plan"

    exchange = complete_structured(backend, template_id, bindings)
    if exchange is None:
        return "rejected", "parse failure"
    if bool(exchange.parsed["valid"]):
        return "verified", None
    return "rejected", f"counterexample in sample {experiences[0].id}" if experiences else "counterexample"


def _parent_conflict(record: DynamicRecord, parents: KnowledgeBase) -> str | None:
    """Structural contradiction against verified parent dynamics."""
    if record.level == "subtask":
        mentions = set(extract_mentions(record.value))
        tools = mentions & set(TOOL_ITEMS)
        parent_tool = parents.value_of("action", record.subject, "inventory_tool")
        parent_rows = parents.lookup("action", record.subject, "inventory_tool", "verified")
        if parent_rows and parent_tool is not None and tools:
            pick_tools = {t for t in tools if t.endswith("_pickaxe")}
            if pick_tools and parent_tool not in pick_tools:
                return f"conflicts with parent record {parent_rows[0].record_id}"
    if record.level == "subgoal":
        return None  # ordering conflicts handled jointly in detect_conflicts
    return None


def detect_conflicts(survivors: list[DynamicRecord], parents: KnowledgeBase,
                     backend: ChatBackend, bank: ExperienceBank,
                     report: VerificationReport, round_index: int = 1,
                     k: int = DEFAULT_VERIFY_K) -> list[DynamicRecord]:
    """Peer and parent conflict pass over consistency survivors."""
    alive: dict[str, DynamicRecord] = {}
    rejected: set[str] = set()

    for record in survivors:
        reason = _parent_conflict(record, parents)
        if reason is not None:
            rejected.add(record.record_id)
            report.record(record.record_id, "rejected", reason, round_index)
    pool = [r for r in survivors if r.record_id not in rejected]

    groups: dict[tuple, list[DynamicRecord]] = {}
    for record in pool:
        groups.setdefault(record.key, []).append(record)

    winners: list[DynamicRecord] = []
    for key in sorted(groups):
        level, subject, attribute = key
        queue = sorted(groups[key], key=lambda r: canonical_json(r.value))
        current: DynamicRecord | None = None
        while queue:
            challenger = queue.pop(0)
            if current is None:
                current = challenger
                continue
            evidence_pool = relevant(bank, "subgoal" if level == "subgoal" else level, subject)
            evidence = sorted(evidence_pool, key=lambda e: e.id)[:k]
            if level == "action":
                rendered = render_transitions(evidence)
            elif level == "object":
                rendered = render_frames(evidence)
            elif level == "subtask":
                rendered = render_segments(evidence)
            else:
                rendered = "\n".join(demo_completion_lists(bank))
            bindings = {
                "subject": subject,
                "attribute": attribute,
                "value_a": render_value(current.value),
                "value_b": render_value(challenger.value),
                "evidence": rendered,
                "_level": level,
                "_subject": subject,
                "_attribute": attribute,
                "_value_a": current.value,
                "_value_b": challenger.value,
            }
            exchange = complete_structured(backend, "adjudicate_conflict", bindings)
            if exchange is None:
                report.record(current.record_id, "rejected", "adjudication parse failure", round_index)
                report.record(challenger.record_id, "rejected", "adjudication parse failure", round_index)
                current = None
                continue
            winner = exchange.parsed["winner"]
            if winner == "a":
                report.record(challenger.record_id, "rejected",
                              f"conflict with record {current.record_id}", round_index)
            elif winner == "b":
                report.record(current.record_id, "rejected",
                              f"conflict with record {challenger.record_id}", round_index)
                current = challenger
            else:
                report.record(current.record_id, "rejected", "conflict: neither value supported", round_index)
                report.record(challenger.record_id, "rejected", "conflict: neither value supported", round_index)
                current = None
        if current is not None:
            winners.append(current)

    # sub-goal ordering must be a linear extension of the achievement DAG
    graph = achievement_graph()
    subgoal_records = sorted([r for r in winners if r.level == "subgoal"],
                             key=lambda r: r.value["index"])
    ordering = [r.subject if r.subject != "sleep" else "wake_up" for r in subgoal_records]
    if ordering and not graph.is_linear_extension(ordering):
        seen: set[str] = set()
        for record in subgoal_records:
            name = record.subject if record.subject != "sleep" else "wake_up"
            if not graph.ancestors(name) <= seen:
                winners = [w for w in winners if w.record_id != record.record_id]
                report.record(record.record_id, "rejected",
                              "conflict: breaks achievement dependency order", round_index)
            else:
                seen.add(name)
    return winners


def verify_all(candidates: KnowledgeBase, bank: ExperienceBank, backend: ChatBackend,
               rounds: int = DEFAULT_VERIFY_ROUNDS, k: int = DEFAULT_VERIFY_K,
               parents: KnowledgeBase | None = None,
               stage: str = "all") -> tuple[KnowledgeBase, VerificationReport]:
    """Consistency + conflict rounds over the candidate set; emits per-round
    survivor snapshots for the precision-over-rounds curve."""
    parents = parents if parents is not None else KnowledgeBase()
    report = VerificationReport()
    verified_kb = KnowledgeBase()
    verified_kb.snapshots.append({
        "stage": stage, "round": 0,
        "record_ids": [r.record_id for r in candidates.records],
    })

    survivors = list(candidates.records)
    for round_index in range(1, rounds + 1):
        kept: list[DynamicRecord] = []
        for record in survivors:
            probe = DynamicRecord(record.level, record.subject, record.attribute,
                                  record.value, evidence=list(record.evidence),
                                  discovery_step=record.discovery_step)
            verdict, reason = verify_candidate(probe, bank, backend, k=k,
                                               round_index=round_index)
            if verdict == "verified":
                kept.append(record)
            else:
                report.record(record.record_id, "rejected", reason, round_index)
        survivors = detect_conflicts(kept, parents, backend, bank, report,
                                     round_index=round_index, k=k)
        verified_kb.snapshots.append({
            "stage": stage, "round": round_index,
            "record_ids": [r.record_id for r in survivors],
        })

    surviving_ids = {r.record_id for r in survivors}
    for record in candidates.records:
        final = DynamicRecord(record.level, record.subject, record.attribute, record.value,
                              evidence=list(record.evidence),
                              discovery_step=record.discovery_step)
        if record.record_id in surviving_ids:
            final.set_status("verified")
            verified_kb.records.append(final)
            report.record(record.record_id, "verified", None, rounds)
        elif record.record_id not in report.verdicts:
            report.record(record.record_id, "rejected", "removed in verification", rounds)
    return verified_kb, report
