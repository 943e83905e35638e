"""Metrics and reproduction harness: the aggregate score, learned-vs-gold
dynamics matching, multi-seed benchmarks, and recall/precision curves."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .records import DynamicRecord, KnowledgeBase, values_match
from .world.graph import ACHIEVEMENTS


def score(success_rates: list[float]) -> float:
    """Geometric-style aggregate over achievement success rates:
    exp(mean(ln(1+s))) - 1, in [0, 1] for rates in [0, 1]."""
    if not success_rates:
        raise ValueError("empty success-rate vector")
    for s in success_rates:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"success rate {s} outside [0, 1]")
    return math.exp(sum(math.log1p(s) for s in success_rates) / len(success_rates)) - 1.0


@dataclass
class MatchReport:
    matched: list[tuple[str, str]]
    recall: float
    precision: float
    per_level: dict[str, dict[str, float]]

    def to_json(self) -> dict:
        return {
            "matched": self.matched, "recall": self.recall, "precision": self.precision,
            "per_level": self.per_level,
        }


def match_dynamics(learned: KnowledgeBase | list[DynamicRecord],
                   gold: KnowledgeBase | list[DynamicRecord],
                   statuses: tuple[str, ...] = ("candidate", "verified")) -> MatchReport:
    """Exact matching on normalized (level, subject, attribute, value); plan-like
    text attributes match by action-mention multiset equality."""
    learned_records = learned.records if isinstance(learned, KnowledgeBase) else list(learned)
    gold_records = gold.records if isinstance(gold, KnowledgeBase) else list(gold)
    learned_records = [r for r in learned_records if r.status in statuses]

    matched: list[tuple[str, str]] = []
    used_learned: set[int] = set()
    for gold_record in gold_records:
        for i, rec in enumerate(learned_records):
            if i in used_learned or rec.key != gold_record.key:
                continue
            if values_match(rec.attribute, rec.value, gold_record.value):
                matched.append((rec.record_id, gold_record.record_id))
                used_learned.add(i)
                break

    recall = len(matched) / len(gold_records) if gold_records else 0.0
    precision = len(matched) / len(learned_records) if learned_records else 0.0

    per_level: dict[str, dict[str, float]] = {}
    for level in ("action", "object", "subtask", "subgoal"):
        gold_level = [r for r in gold_records if r.level == level]
        learned_level = [r for r in learned_records if r.level == level]
        matched_level = [m for m in matched if m[1].startswith(f"{level}:")]
        per_level[level] = {
            "gold": len(gold_level),
            "learned": len(learned_level),
            "matched": len(matched_level),
            "recall": len(matched_level) / len(gold_level) if gold_level else 0.0,
            "precision": len(matched_level) / len(learned_level) if learned_level else 0.0,
        }
    return MatchReport(matched=matched, recall=recall, precision=precision, per_level=per_level)


@dataclass
class BenchmarkResult:
    rows: list[dict] = field(default_factory=list)  # one per (seed, episode)

    def rewards(self) -> list[float]:
        return [row["reward"] for row in self.rows]

    def success_rates(self) -> dict[str, float]:
        if not self.rows:
            return {a: 0.0 for a in ACHIEVEMENTS}
        return {
            a: sum(1 for row in self.rows if a in row["achievements"]) / len(self.rows)
            for a in ACHIEVEMENTS
        }

    def aggregate_score(self) -> float:
        rates = self.success_rates()
        return score([rates[a] for a in ACHIEVEMENTS])

    def summary(self) -> dict:
        rewards = self.rewards()
        n = len(rewards)
        mean = sum(rewards) / n if n else 0.0
        std = (sum((r - mean) ** 2 for r in rewards) / n) ** 0.5 if n else 0.0
        distinct = [len(row["achievements"]) for row in self.rows]
        return {
            "episodes": n,
            "reward_mean": mean,
            "reward_std": std,
            "score": self.aggregate_score(),
            "median_distinct_achievements": sorted(distinct)[n // 2] if n else 0,
        }

    def write_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=[
                "agent", "seed", "episode", "steps", "reward", "distinct_achievements",
                "achievements"])
            writer.writeheader()
            for row in self.rows:
                writer.writerow({
                    "agent": row["agent"], "seed": row["seed"], "episode": row["episode"],
                    "steps": row["steps"], "reward": row["reward"],
                    "distinct_achievements": len(row["achievements"]),
                    "achievements": "|".join(sorted(row["achievements"])),
                })

    def write_table(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        s = self.summary()
        lines = [
            f"episodes: {s['episodes']}",
            f"score: {100 * s['score']:.1f}%",
            f"reward: {s['reward_mean']:.2f} +/- {s['reward_std']:.2f}",
            f"median distinct achievements: {s['median_distinct_achievements']}",
            "",
            "per-achievement success rates:",
        ]
        for name, rate in sorted(self.success_rates().items()):
            lines.append(f"  {name:24s} {rate:.2f}")
        path.write_text("\n".join(lines) + "\n")


def run_benchmark(agent_factory, seeds: list[int], episodes: int = 1,
                  agent_name: str = "agent") -> BenchmarkResult:
    """Run `episodes` per seed with agents from `agent_factory(seed, episode)`,
    which must return (trajectory, metrics)."""
    result = BenchmarkResult()
    for seed in seeds:
        for episode in range(episodes):
            try:
                trajectory, metrics = agent_factory(seed, episode)
            except Exception as exc:  # record the failure, keep the run going
                result.rows.append({
                    "agent": agent_name, "seed": seed, "episode": episode,
                    "steps": 0, "reward": 0.0, "achievements": [],
                    "error": str(exc),
                })
                continue
            reward_tenths = trajectory.total_reward_tenths()
            result.rows.append({
                "agent": agent_name, "seed": seed, "episode": episode,
                "steps": trajectory.meta.get("steps", len(trajectory.steps) - 1),
                "reward": reward_tenths / 10.0,
                "achievements": sorted(trajectory.unlocked()),
                **metrics,
            })
    return result


def emit_curves(candidate_kb: KnowledgeBase, verified_kb: KnowledgeBase,
                gold: KnowledgeBase, out_csv: str | Path | None = None) -> dict:
    """Recall/precision series: per discovery step for candidates, per
    verification round for the verified set."""
    by_id = {r.record_id: r for r in candidate_kb.records}

    def metrics(ids: list[str]) -> tuple[float, float]:
        records = [by_id[i] for i in ids if i in by_id]
        report = match_dynamics(records, gold)
        return report.recall, report.precision

    candidate_series = []
    verified_series = []
    verified_ids = {r.record_id for r in verified_kb.records}
    steps = sorted({s["step"] for s in candidate_kb.snapshots})
    for step in steps:
        ids: set[str] = set()
        for snap in candidate_kb.snapshots:
            if snap["step"] <= step:
                ids.update(snap["record_ids"])
        recall, precision = metrics(sorted(ids))
        candidate_series.append({"step": step, "recall": recall, "precision": precision})
        kept = sorted(ids & verified_ids)
        v_recall, v_precision = metrics(kept)
        verified_series.append({"step": step, "recall": v_recall, "precision": v_precision})

    round_series = []
    rounds = sorted({s["round"] for s in verified_kb.snapshots})
    for round_index in rounds:
        ids: set[str] = set()
        for snap in verified_kb.snapshots:
            # a stage with fewer rounds contributes its final survivor set
            matching = [s for s in verified_kb.snapshots
                        if s.get("stage") == snap.get("stage") and s["round"] <= round_index]
            if matching:
                ids.update(max(matching, key=lambda s: s["round"])["record_ids"])
        recall, precision = metrics(sorted(ids))
        round_series.append({"round": round_index, "recall": recall, "precision": precision})

    curves = {
        "candidates_by_step": candidate_series,
        "verified_by_step": verified_series,
        "verified_by_round": round_series,
    }
    if out_csv is not None:
        path = Path(out_csv)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["series", "x", "recall", "precision"])
            for row in candidate_series:
                writer.writerow(["candidates_by_step", row["step"], row["recall"], row["precision"]])
            for row in verified_series:
                writer.writerow(["verified_by_step", row["step"], row["recall"], row["precision"]])
            for row in round_series:
                writer.writerow(["verified_by_round", row["round"], row["recall"], row["precision"]])
    return curves


def plot_curves(curves: dict, out_path: str | Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    steps = [row["step"] for row in curves["candidates_by_step"]]
    axes[0].plot(steps, [row["recall"] for row in curves["candidates_by_step"]],
                 marker="o", label="candidates")
    axes[0].set_xlabel("discovery step")
    axes[0].set_ylabel("recall vs gold")
    axes[0].set_title("Recall over discovery steps")
    axes[0].legend()
    rounds = [row["round"] for row in curves["verified_by_round"]]
    axes[1].plot(rounds, [row["precision"] for row in curves["verified_by_round"]],
                 marker="o", label="verified")
    axes[1].set_xlabel("verification round")
    axes[1].set_ylabel("precision vs gold")
    axes[1].set_title("Precision over verification rounds")
    axes[1].legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
