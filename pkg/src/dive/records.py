"""Dynamic records: one unit of learned world knowledge, plus normalization
and knowledge-base file I/O shared by the discoverer, verifier, and eval."""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .banks import ACTION_SUBJECTS, OBJECT_SUBJECTS, SUBTASK_SUBJECTS
from .world.types import INVENTORY_ITEMS, STATUS_KEYS

ACTION_ATTRIBUTES = (
    "materials_used", "immediate_objects", "facing_object",
    "inventory_tool", "outcome_increase", "facing_object_change",
)
OBJECT_ATTRIBUTES = ("co_occurrence", "time_relationship", "walkable")
SUBTASK_ATTRIBUTES = ("general_plan", "termination_condition", "requirements", "outcomes")
SUBGOAL_ATTRIBUTES = ("position_in_sequence",)

ATTRIBUTES_BY_LEVEL = {
    "action": ACTION_ATTRIBUTES,
    "object": OBJECT_ATTRIBUTES,
    "subtask": SUBTASK_ATTRIBUTES,
    "subgoal": SUBGOAL_ATTRIBUTES,
}

TEXT_ATTRIBUTES = frozenset(SUBTASK_ATTRIBUTES)

STATUSES = ("candidate", "verified", "rejected")


class NormalizationError(ValueError):
    pass


def norm_name(name: str) -> str:
    return re.sub(r"[\s\-]+", "_", str(name).strip().lower())


def normalize_value(attribute: str, value):
    """Canonical form so identical facts collapse to one identity."""
    if value is None or (isinstance(value, str) and value.strip().lower() in ("none", "null", "")):
        if attribute in ("walkable", "position_in_sequence"):
            raise NormalizationError(f"{attribute} cannot be None")
        return None
    if attribute in ("materials_used", "outcome_increase"):
        if not isinstance(value, dict):
            raise NormalizationError(f"{attribute} expects a name->count mapping")
        out = {}
        for k, v in value.items():
            n = int(v)
            if n <= 0:
                raise NormalizationError(f"{attribute} count for {k} must be positive")
            out[norm_name(k)] = n
        return dict(sorted(out.items())) or None
    if attribute in ("immediate_objects", "facing_object"):
        if isinstance(value, str):
            value = [value]
        return sorted({norm_name(v) for v in value}) or None
    if attribute in ("inventory_tool", "facing_object_change", "time_relationship"):
        return norm_name(value)
    if attribute == "walkable":
        return bool(value)
    if attribute == "co_occurrence":
        if not isinstance(value, dict):
            raise NormalizationError("co_occurrence expects a name->relation mapping")
        out = {}
        for k, v in value.items():
            rel = norm_name(v)
            if rel not in ("very_related", "not_related"):
                raise NormalizationError(f"unknown relation {v!r}")
            out[norm_name(k)] = rel
        return dict(sorted(out.items())) or None
    if attribute == "general_plan":
        if isinstance(value, dict):  # step_1 ... step_n keyed plans
            value = [value[k] for k in sorted(value, key=lambda s: (len(s), s))]
        if isinstance(value, str):
            value = [value]
        return [str(v).strip() for v in value if str(v).strip()]
    if attribute in ("termination_condition", "requirements", "outcomes"):
        return str(value).strip()
    if attribute == "position_in_sequence":
        return {"index": int(value["index"]), "repetitions": int(value["repetitions"])}
    raise NormalizationError(f"unknown attribute {attribute!r}")


def canonical_json(value) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


@dataclass
class DynamicRecord:
    level: str  # action | object | subtask | subgoal
    subject: str
    attribute: str
    value: object
    status: str = "candidate"
    evidence: list[str] = field(default_factory=list)
    discovery_step: int = 0

    def __post_init__(self):
        if self.level not in ATTRIBUTES_BY_LEVEL:
            raise ValueError(f"unknown level {self.level!r}")
        if self.attribute not in ATTRIBUTES_BY_LEVEL[self.level]:
            raise ValueError(f"attribute {self.attribute!r} does not belong to level {self.level!r}")
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        self.subject = norm_name(self.subject)
        self.value = normalize_value(self.attribute, self.value)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.level, self.subject, self.attribute)

    @property
    def value_hash(self) -> str:
        return hashlib.sha1(canonical_json(self.value).encode()).hexdigest()[:8]

    @property
    def record_id(self) -> str:
        return f"{self.level}:{self.subject}:{self.attribute}:{self.value_hash}"

    @property
    def identity(self) -> tuple:
        return (self.level, self.subject, self.attribute, canonical_json(self.value))

    def set_status(self, status: str) -> None:
        if self.status != "candidate" and status != self.status:
            raise ValueError(f"illegal status transition {self.status} -> {status}")
        self.status = status

    def to_json(self) -> dict:
        return {
            "id": self.record_id,
            "level": self.level,
            "subject": self.subject,
            "attribute": self.attribute,
            "value": self.value,
            "status": self.status,
            "evidence": list(self.evidence),
            "discovery_step": self.discovery_step,
        }

    @classmethod
    def from_json(cls, data: dict) -> "DynamicRecord":
        return cls(
            level=data["level"], subject=data["subject"], attribute=data["attribute"],
            value=data["value"], status=data.get("status", "candidate"),
            evidence=list(data.get("evidence", [])),
            discovery_step=int(data.get("discovery_step", 0)),
        )


@dataclass
class KnowledgeBase:
    records: list[DynamicRecord] = field(default_factory=list)
    snapshots: list[dict] = field(default_factory=list)  # {level, step, record_ids}

    def add(self, record: DynamicRecord) -> DynamicRecord:
        """Insert with dedup: same identity merges evidence."""
        for existing in self.records:
            if existing.identity == record.identity:
                for ev in record.evidence:
                    if ev not in existing.evidence:
                        existing.evidence.append(ev)
                return existing
        self.records.append(record)
        return record

    def by_status(self, status: str) -> list[DynamicRecord]:
        return [r for r in self.records if r.status == status]

    def by_level(self, level: str, status: str | None = None) -> list[DynamicRecord]:
        return [r for r in self.records
                if r.level == level and (status is None or r.status == status)]

    def lookup(self, level: str, subject: str, attribute: str,
               status: str | None = None) -> list[DynamicRecord]:
        return [r for r in self.records
                if r.key == (level, norm_name(subject), attribute)
                and (status is None or r.status == status)]

    def value_of(self, level: str, subject: str, attribute: str,
                 status: str = "verified"):
        hits = self.lookup(level, subject, attribute, status)
        return hits[0].value if hits else None

    def to_json(self) -> dict:
        return {
            "records": [r.to_json() for r in self.records],
            "snapshots": self.snapshots,
        }

    def dump(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeBase":
        data = json.loads(Path(path).read_text())
        kb = cls(records=[DynamicRecord.from_json(r) for r in data["records"]])
        kb.snapshots = data.get("snapshots", [])
        return kb


_MENTION_VOCAB = tuple(sorted(
    set(ACTION_SUBJECTS) | set(OBJECT_SUBJECTS) | set(SUBTASK_SUBJECTS)
    | set(INVENTORY_ITEMS) | set(STATUS_KEYS) | {"table", "furnace"},
    key=len, reverse=True,
))
_MENTION_RE = re.compile(
    "|".join(rf"\b{re.escape(tok)}\b" for tok in _MENTION_VOCAB)
)


def extract_mentions(value) -> tuple[str, ...]:
    """Multiset of known action/object/item mentions in free text, used to
    compare plan-like attribute values."""
    if value is None:
        return ()
    if isinstance(value, list):
        text = " ".join(str(v) for v in value)
    else:
        text = str(value)
    text = text.lower().replace("-", "_")
    # canonicalize space-separated compound names before token matching
    text = re.sub(r"\b(wood|stone|iron)\s+(pickaxe|sword)\b", r"\1_\2", text)
    text = re.sub(r"\b(collect|make|place|defeat|eat)\s+"
                  r"(wood_pickaxe|stone_pickaxe|iron_pickaxe|wood_sword|stone_sword|"
                  r"iron_sword|wood|stone|coal|iron|diamond|drink|sapling|table|"
                  r"furnace|plant|cow|zombie|skeleton)\b", r"\1_\2", text)
    return tuple(sorted(_MENTION_RE.findall(text)))


def values_match(attribute: str, a, b) -> bool:
    if attribute in TEXT_ATTRIBUTES:
        return extract_mentions(a) == extract_mentions(b)
    return canonical_json(a) == canonical_json(b)
