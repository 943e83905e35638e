"""Trajectory records: the interchange unit between simulator, banks, UI, and eval."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .verbalizer import AgentView, obs_struct_from_view, render_summary
from .world import engine
from .world.types import DEFAULT_STEP_CAP, WorldState

FORMAT_VERSION = 1


class TrajectoryFormatError(ValueError):
    def __init__(self, trajectory_id: str, step: int | None, message: str):
        self.trajectory_id = trajectory_id
        self.step = step
        where = f"{trajectory_id}" + (f" step {step}" if step is not None else "")
        super().__init__(f"{where}: {message}")


@dataclass
class StepRecord:
    t: int
    obs_text: str
    obs_struct: dict
    action: str | None
    semantic_action: str | None
    success: bool | None
    reward: float
    achievements: list[str]
    status: dict[str, int]
    inventory: dict[str, int]

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "obs_text": self.obs_text,
            "obs_struct": self.obs_struct,
            "action": self.action,
            "semantic_action": self.semantic_action,
            "success": self.success,
            "reward": self.reward,
            "achievements": self.achievements,
            "status": self.status,
            "inventory": self.inventory,
        }

    @classmethod
    def from_json(cls, data: dict) -> "StepRecord":
        return cls(**{k: data[k] for k in (
            "t", "obs_text", "obs_struct", "action", "semantic_action",
            "success", "reward", "achievements", "status", "inventory")})


@dataclass
class Trajectory:
    seed: int
    source: str  # human | scripted
    steps: list[StepRecord] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def trajectory_id(self) -> str:
        return f"{self.source}-{self.seed}"

    def unlocked(self) -> set[str]:
        out: set[str] = set()
        for rec in self.steps:
            out.update(rec.achievements)
        return out

    def total_reward_tenths(self) -> int:
        return sum(round(rec.reward * 10) for rec in self.steps)

    def validate(self) -> None:
        for i, rec in enumerate(self.steps):
            if rec.t != i:
                raise TrajectoryFormatError(self.trajectory_id, i, f"non-contiguous step index {rec.t}")
            if rec.action is None and i != len(self.steps) - 1:
                raise TrajectoryFormatError(self.trajectory_id, i, "sentinel record before the end")
        if self.steps and self.steps[-1].action is not None:
            raise TrajectoryFormatError(self.trajectory_id, len(self.steps) - 1,
                                        "missing terminal sentinel record")

    def dump_jsonl(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as fh:
            header = {"seed": self.seed, "format_version": FORMAT_VERSION, "source": self.source}
            if self.meta:
                header["meta"] = self.meta
            fh.write(json.dumps(header) + "\n")
            for rec in self.steps:
                fh.write(json.dumps(rec.to_json()) + "\n")

    @classmethod
    def load_jsonl(cls, path: str | Path) -> "Trajectory":
        path = Path(path)
        with path.open() as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
        if not lines:
            raise TrajectoryFormatError(str(path), None, "empty trajectory file")
        header = json.loads(lines[0])
        for key in ("seed", "format_version", "source"):
            if key not in header:
                raise TrajectoryFormatError(str(path), None, f"header missing {key!r}")
        traj = cls(seed=header["seed"], source=header["source"], meta=header.get("meta", {}))
        for ln in lines[1:]:
            traj.steps.append(StepRecord.from_json(json.loads(ln)))
        traj.validate()
        return traj


def rollout(
    state: WorldState,
    policy: Callable[[WorldState, AgentView], str | None],
    source: str = "scripted",
    step_cap: int = DEFAULT_STEP_CAP,
    on_step: Callable[[StepRecord, WorldState], None] | None = None,
) -> Trajectory:
    """Drive an episode with `policy`, recording the demonstration format.

    The policy returns an action name, or None to stop early. Each record's
    observation is the pre-action view; status/inventory are post-action.
    """
    traj = Trajectory(seed=state.seed, source=source)
    view = AgentView()
    t = 0
    while not state.done and state.step_count < step_cap:
        view.observe(state)
        struct = obs_struct_from_view(view)
        text = render_summary(struct)
        view.last_struct = struct  # policies may reuse the rendered view
        view.last_text = text
        action = policy(state, view)
        if action is None:
            break
        outcome = engine.step(state, action, step_cap=step_cap)
        rec = StepRecord(
            t=t,
            obs_text=text,
            obs_struct=struct,
            action=action,
            semantic_action=outcome.events.semantic_action,
            success=outcome.events.success,
            reward=outcome.reward,
            achievements=list(outcome.events.achievements),
            status=dict(outcome.observation["status"]),
            inventory=dict(outcome.observation["inventory"]),
        )
        traj.steps.append(rec)
        if on_step is not None:
            on_step(rec, state)
        t += 1
    view.observe(state)
    struct = obs_struct_from_view(view)
    traj.steps.append(StepRecord(
        t=t,
        obs_text=render_summary(struct),
        obs_struct=struct,
        action=None,
        semantic_action=None,
        success=None,
        reward=0.0,
        achievements=[],
        status=dict(state.status.as_dict()),
        inventory=dict(state.inventory),
    ))
    traj.meta["achievements"] = sorted(traj.unlocked())
    traj.meta["steps"] = t
    return traj


def replay_actions(seed: int, actions: list[str], source: str = "scripted",
                   step_cap: int = DEFAULT_STEP_CAP) -> Trajectory:
    """Re-run a recorded action list on a fresh world; byte-identical for
    identical (seed, actions)."""
    from .world.mapgen import generate_world

    queue = list(actions)

    def policy(state: WorldState, view: AgentView) -> str | None:
        return queue.pop(0) if queue else None

    return rollout(generate_world(seed), policy, source=source, step_cap=step_cap)
