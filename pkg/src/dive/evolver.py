"""Online strategy derivation: propose situational strategies by deductive
combination of verified primitives, critic-score them, and admit the keepers
into a bounded per-episode store."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .backend.core import ChatBackend
from .discoverer import complete_structured, render_action_dynamics
from .records import KnowledgeBase

USEFULNESS_THRESHOLD = 4
STRATEGY_CAP = 20
EVOLVE_EVERY_STEPS = 25


@dataclass
class Strategy:
    text: str
    difficulty: str
    subtask: str
    used_primitive_ids: list[str] = field(default_factory=list)
    deductive_steps: str = "None"
    inference_rule: str = "None"
    introduces_new_dynamics: bool | None = None
    introduces_new_objects: bool | None = None
    contradicts_primitives: bool | None = None
    usefulness: int | None = None
    admitted: bool = False
    born_step: int = 0

    @property
    def scored(self) -> bool:
        return self.usefulness is not None

    @property
    def valid(self) -> bool:
        return (self.introduces_new_dynamics is False
                and self.introduces_new_objects is False
                and self.contradicts_primitives is False)

    def to_json(self) -> dict:
        return {
            "text": self.text, "difficulty": self.difficulty, "subtask": self.subtask,
            "used_primitive_ids": self.used_primitive_ids,
            "deductive_steps": self.deductive_steps, "inference_rule": self.inference_rule,
            "introduces_new_dynamics": self.introduces_new_dynamics,
            "introduces_new_objects": self.introduces_new_objects,
            "contradicts_primitives": self.contradicts_primitives,
            "usefulness": self.usefulness, "admitted": self.admitted,
            "born_step": self.born_step,
        }


def propose_strategies(dynamics: KnowledgeBase, obs_text: str, obs_struct: dict,
                       subtask: str, backend: ChatBackend) -> list[Strategy]:
    """Strategy candidates for the current situation; empty on backend failure."""
    if not dynamics.lookup("subtask", subtask, "general_plan", "verified") \
            and subtask not in ("move",):
        return []
    bindings = {
        "env_dynamics": render_action_dynamics(dynamics),
        "subtask": subtask,
        "state_description": obs_text,
        "_subtask": subtask,
        "_struct": obs_struct,
    }
    exchange = complete_structured(backend, "evolve_strategies", bindings)
    if exchange is None:
        return []
    out = []
    for entry in exchange.parsed.get("strategies", [])[:3]:
        out.append(Strategy(
            text=str(entry["dynamics"]),
            difficulty=str(entry["difficulty"]),
            subtask=subtask,
            used_primitive_ids=list(entry.get("used_primitive_dynamics", [])),
            deductive_steps=str(entry.get("deductive_reasoning_steps", "None")),
            inference_rule=str(entry.get("inference_rule") or "None"),
        ))
    return out


def critique_strategies(candidates: list[Strategy], dynamics: KnowledgeBase,
                        subtask: str, backend: ChatBackend) -> list[Strategy]:
    """Attach the three validity flags and the 1..5 usefulness score; drops
    candidates whose critique cannot be parsed."""
    scored = []
    env_dynamics = render_action_dynamics(dynamics)
    for strategy in candidates:
        bindings = {
            "env_dynamics": env_dynamics,
            "evolved_dynamics": json.dumps({
                "dynamics": strategy.text,
                "difficulty": strategy.difficulty,
                "deductive_reasoning_steps": strategy.deductive_steps,
            }),
            "subtask": subtask,
            "_strategy_text": f"{strategy.text} {strategy.deductive_steps}",
        }
        exchange = complete_structured(backend, "critique_strategy", bindings)
        if exchange is None:
            continue
        parsed = exchange.parsed
        strategy.introduces_new_dynamics = bool(parsed["introduces_new_dynamics"])
        strategy.introduces_new_objects = bool(parsed["introduces_new_objects"])
        strategy.contradicts_primitives = bool(parsed["contradicts_primitives"])
        strategy.usefulness = int(parsed["usefulness"])
        scored.append(strategy)
    return scored


class StrategyStore:
    """Bounded situational strategy set with eviction and a JSONL log."""

    def __init__(self, cap: int = STRATEGY_CAP, threshold: int = USEFULNESS_THRESHOLD,
                 log_path: str | Path | None = None):
        self.cap = cap
        self.threshold = threshold
        self.admitted: list[Strategy] = []
        self.log_path = Path(log_path) if log_path else None

    def admit(self, scored: list[Strategy], step: int = 0) -> list[Strategy]:
        """Admit valid, useful candidates; evict lowest-usefulness, oldest first."""
        accepted = []
        for strategy in scored:
            if not strategy.scored:
                continue
            strategy.born_step = step
            if strategy.valid and strategy.usefulness >= self.threshold:
                strategy.admitted = True
                if not any(s.text == strategy.text and s.subtask == strategy.subtask
                           for s in self.admitted):
                    self.admitted.append(strategy)
                accepted.append(strategy)
            self._log(strategy)
        while len(self.admitted) > self.cap:
            victim = min(self.admitted, key=lambda s: (s.usefulness, s.born_step))
            self.admitted.remove(victim)
        return accepted

    def expire_subtask(self, subtask: str) -> None:
        self.admitted = [s for s in self.admitted if s.subtask != subtask]

    def for_subtask(self, subtask: str) -> list[Strategy]:
        return [s for s in self.admitted if s.subtask == subtask]

    def _log(self, strategy: Strategy) -> None:
        if self.log_path is None:
            return
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        with self.log_path.open("a") as fh:
            fh.write(json.dumps(strategy.to_json()) + "\n")
