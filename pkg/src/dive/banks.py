"""Semantic experience banks built from verbalized demonstration trajectories.

Four banks: action-level transitions, object-level frames, sub-task segments,
and sub-goal sequences. Built once, then frozen for sampling.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .trajectory import Trajectory
from .world.graph import ACHIEVEMENTS
from .world.types import MAKE_ACTIONS, MOVE_ACTIONS, PLACE_ACTIONS, SEMANTIC_DO_ACTIONS

LEVELS = ("action", "object", "subtask", "subgoal")

ACTION_SUBJECTS = tuple(sorted(
    SEMANTIC_DO_ACTIONS + PLACE_ACTIONS + MAKE_ACTIONS + ("sleep",) + MOVE_ACTIONS
))

# the object vocabulary the object-level prompts reason over
OBJECT_SUBJECTS = (
    "grass", "coal", "cow", "diamond", "furnace", "iron", "lava", "skeleton",
    "stone", "table", "tree", "water", "zombie", "plant", "path", "sand",
    "plant_ripe",
)

# sub-tasks are the achievements, with wake_up reached by the sleep sub-task
SUBTASK_FOR_ACHIEVEMENT = {a: a for a in ACHIEVEMENTS} | {"wake_up": "sleep"}
SUBTASK_SUBJECTS = tuple(sorted(set(SUBTASK_FOR_ACHIEVEMENT.values())))
PLANNER_SUBTASKS = tuple(sorted(SUBTASK_SUBJECTS + ("move",)))

SEGMENT_MAX_LOOKBACK = 30
DEFAULT_SAMPLE_K = 5


class BankSubjectError(ValueError):
    def __init__(self, level: str, subject: str, valid: tuple[str, ...]):
        self.level = level
        self.subject = subject
        super().__init__(
            f"unknown {level} subject {subject!r}; valid subjects: {', '.join(valid)}"
        )


class IngestError(ValueError):
    def __init__(self, trajectory_id: str, step: int | None, message: str):
        self.trajectory_id = trajectory_id
        self.step = step
        super().__init__(f"{trajectory_id} step {step}: {message}")


@dataclass
class Transition:
    id: str
    trajectory_id: str
    t: int
    semantic_action: str
    before_text: str
    after_text: str
    before: dict
    after: dict


@dataclass
class Frame:
    id: str
    trajectory_id: str
    t: int
    text: str
    struct: dict
    objects: tuple[str, ...]
    daylight: bool


@dataclass
class Segment:
    id: str
    trajectory_id: str
    subtask: str
    t_start: int
    t_end: int
    steps: list[dict]  # {obs_text, action, semantic_action, success}


@dataclass
class SubgoalSequence:
    id: str
    trajectory_id: str
    subgoal: str
    completions: list[str]  # chronological completed sub-tasks through this one


@dataclass
class ExperienceBank:
    transitions: list[Transition] = field(default_factory=list)
    frames: list[Frame] = field(default_factory=list)
    segments: list[Segment] = field(default_factory=list)
    sequences: list[SubgoalSequence] = field(default_factory=list)
    frozen: bool = False

    def by_id(self, experience_id: str) -> object | None:
        for pool in (self.transitions, self.frames, self.segments, self.sequences):
            for item in pool:
                if item.id == experience_id:
                    return item
        return None

    def sizes(self) -> dict[str, int]:
        return {
            "transitions": len(self.transitions),
            "frames": len(self.frames),
            "segments": len(self.segments),
            "sequences": len(self.sequences),
        }

    def to_json(self) -> dict:
        return {
            "transitions": [vars(t) for t in self.transitions],
            "frames": [dict(vars(f), objects=list(f.objects)) for f in self.frames],
            "segments": [vars(s) for s in self.segments],
            "sequences": [vars(s) for s in self.sequences],
        }

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path: str | Path) -> "ExperienceBank":
        data = json.loads(Path(path).read_text())
        bank = cls(
            transitions=[Transition(**t) for t in data["transitions"]],
            frames=[Frame(**dict(f, objects=tuple(f["objects"]))) for f in data["frames"]],
            segments=[Segment(**s) for s in data["segments"]],
            sequences=[SubgoalSequence(**s) for s in data["sequences"]],
        )
        bank.frozen = True
        return bank


def _completions_at(rec, unlocked_before: set[str]) -> list[str]:
    """Sub-task completions at one step: achievement unlocks, plus recurrences
    of an already-unlocked semantic action."""
    done = [SUBTASK_FOR_ACHIEVEMENT[a] for a in rec.achievements]
    sem = rec.semantic_action
    if (rec.success and sem in SUBTASK_FOR_ACHIEVEMENT and sem in unlocked_before
            and sem not in rec.achievements):
        done.append(sem)
    return done


def ingest(trajectories: list[Trajectory]) -> ExperienceBank:
    bank = ExperienceBank()
    for traj in trajectories:
        try:
            traj.validate()
        except Exception as exc:  # surface the offending trajectory/step
            raise IngestError(traj.trajectory_id, getattr(exc, "step", None), str(exc)) from exc
        tid = traj.trajectory_id
        unlocked: set[str] = set()
        completions: list[str] = []
        last_completion_t = -1
        for i, rec in enumerate(traj.steps):
            bank.frames.append(Frame(
                id=f"{tid}:o:{rec.t}",
                trajectory_id=tid,
                t=rec.t,
                text=rec.obs_text,
                struct=rec.obs_struct,
                objects=tuple(sorted(set(rec.obs_struct.get("window_tiles", []))
                                     | set(rec.obs_struct.get("window_entities", [])))),
                daylight=bool(rec.obs_struct.get("daylight", True)),
            ))
            if rec.action is None:
                continue
            after = traj.steps[i + 1]
            if rec.success and rec.action != "noop":
                bank.transitions.append(Transition(
                    id=f"{tid}:a:{rec.t}",
                    trajectory_id=tid,
                    t=rec.t,
                    semantic_action=rec.semantic_action,
                    before_text=rec.obs_text,
                    after_text=after.obs_text,
                    before=rec.obs_struct,
                    after=after.obs_struct,
                ))
            here = _completions_at(rec, unlocked)
            for subtask in here:
                start = max(last_completion_t + 1, rec.t - SEGMENT_MAX_LOOKBACK + 1, 0)
                steps = [{
                    "obs_text": s.obs_text,
                    "action": s.action,
                    "semantic_action": s.semantic_action,
                    "success": s.success,
                } for s in traj.steps[start:rec.t + 1]]
                bank.segments.append(Segment(
                    id=f"{tid}:st:{rec.t}:{subtask}",
                    trajectory_id=tid,
                    subtask=subtask,
                    t_start=start,
                    t_end=rec.t,
                    steps=steps,
                ))
                completions.append(subtask)
            for achievement in rec.achievements:
                bank.sequences.append(SubgoalSequence(
                    id=f"{tid}:sg:{rec.t}:{achievement}",
                    trajectory_id=tid,
                    subgoal=SUBTASK_FOR_ACHIEVEMENT[achievement],
                    completions=list(completions),
                ))
            if here:
                last_completion_t = rec.t
            unlocked.update(rec.achievements)
    bank.frozen = True
    return bank


def subject_vocabulary(level: str) -> tuple[str, ...]:
    if level == "action":
        return ACTION_SUBJECTS
    if level == "object":
        return OBJECT_SUBJECTS
    if level == "subtask":
        return PLANNER_SUBTASKS
    if level == "subgoal":
        return SUBTASK_SUBJECTS
    raise ValueError(f"unknown level {level!r}")


def relevant(bank: ExperienceBank, level: str, subject: str) -> list:
    vocab = subject_vocabulary(level)
    if subject not in vocab:
        raise BankSubjectError(level, subject, vocab)
    if level == "action":
        return [t for t in bank.transitions if t.semantic_action == subject]
    if level == "object":
        return [f for f in bank.frames if subject in f.objects]
    if level == "subtask":
        return [s for s in bank.segments if s.subtask == subject]
    return [s for s in bank.sequences if s.subgoal == subject]


def sample(bank: ExperienceBank, level: str, subject: str, k: int = DEFAULT_SAMPLE_K,
           rng_seed: int = 0) -> list:
    """Up to k relevant experiences, deterministic per rng_seed."""
    if k < 1:
        raise ValueError("k must be >= 1")
    pool = sorted(relevant(bank, level, subject), key=lambda e: e.id)
    if len(pool) <= k:
        return pool
    rng = np.random.default_rng(rng_seed)
    idx = sorted(rng.choice(len(pool), size=k, replace=False).tolist())
    return [pool[i] for i in idx]


def compress_completions(completions: list[str]) -> list[str]:
    """Run-length encode consecutive repeats as name_x_count."""
    out: list[str] = []
    i = 0
    while i < len(completions):
        j = i
        while j < len(completions) and completions[j] == completions[i]:
            j += 1
        n = j - i
        out.append(completions[i] if n == 1 else f"{completions[i]}_x_{n}")
        i = j
    return out
