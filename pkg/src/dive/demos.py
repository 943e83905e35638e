"""Demonstration generation: scripted-expert and random rollouts."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .trajectory import Trajectory, rollout
from .world import ACTIONS, ExpertPolicy, generate_world
from .world.expert import DEMO_SEEDS
from .world.types import DEFAULT_STEP_CAP

EXPERT_STEP_CAP = 6000
MIN_DEMO_ACHIEVEMENTS = 15


def scripted_expert(seed: int, step_cap: int = EXPERT_STEP_CAP) -> Trajectory:
    """One full expert episode; flagged in meta when the policy gave up."""
    state = generate_world(seed)
    policy = ExpertPolicy()
    traj = rollout(state, policy, source="scripted", step_cap=step_cap)
    traj.meta["expert_complete"] = not policy.gave_up and not policy.tasks
    traj.meta["usable"] = len(traj.unlocked()) >= MIN_DEMO_ACHIEVEMENTS
    return traj


def random_rollout(seed: int, step_cap: int = DEFAULT_STEP_CAP) -> Trajectory:
    """Uniform-random policy baseline episode."""
    rng = np.random.default_rng(seed)

    def policy(state, view):
        return ACTIONS[int(rng.integers(len(ACTIONS)))]

    return rollout(generate_world(seed), policy, source="scripted", step_cap=step_cap)


def generate_demos(seeds: list[int] | None = None, out_dir: str | Path | None = None) -> list[Trajectory]:
    seeds = seeds if seeds is not None else DEMO_SEEDS
    demos = [scripted_expert(seed) for seed in seeds]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for traj in demos:
            traj.dump_jsonl(out / f"demo_{traj.seed}.jsonl")
    return demos
