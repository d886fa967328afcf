"""Episode-log replay: rebuild per-step model inputs from the engine's
episode records plus the final hypergraphs persisted in its results files,
and compute advantages for terminal-reward episodes.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

log = logging.getLogger("musagent.episodes")

FINISH = "finish"


@dataclass(frozen=True)
class GroupKey:
    """Steps sharing (instance, watermark, op) share one trunk encoding."""

    instance: str
    watermark: tuple[int, int]
    op: str


@dataclass
class GroupInputs:
    num_constraints: int
    mus: list[list[int]]
    mcs: list[list[int]]
    op: str


@dataclass
class Step:
    group: GroupKey
    candidates: list[int]
    action_col: int  # index into candidates + [finish]
    old_log_prob: float
    old_value: float
    advantage: float = 0.0
    ret: float = 0.0


@dataclass
class TrainingBatch:
    steps: list[Step]
    groups: dict[GroupKey, GroupInputs]
    episode_rewards: list[float] = field(default_factory=list)


def read_jsonl(path: str) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def load_result_graphs(paths: list[str]) -> dict[str, dict]:
    """instance id -> final-graph record from enumeration results files."""
    graphs = {}
    for path in paths:
        for rec in read_jsonl(path):
            if rec.get("status") == "ok":
                graphs[rec["instance"]] = {
                    "num_constraints": rec["graph"]["num_vertices"],
                    "mus": rec["graph"]["mus"],
                    "mcs": rec["graph"]["mcs"],
                }
    return graphs


def gae_terminal(reward: float, values: list[float], discount: float, lam: float) -> tuple[list[float], list[float]]:
    """Generalized advantage estimation for an episode whose only reward
    arrives at the final step. Returns (advantages, returns)."""
    n = len(values)
    advantages = [0.0] * n
    running = 0.0
    for t in reversed(range(n)):
        next_value = values[t + 1] if t + 1 < n else 0.0
        r = reward if t == n - 1 else 0.0
        delta = r + discount * next_value - values[t]
        running = delta + discount * lam * running
        advantages[t] = running
    returns = [a + v for a, v in zip(advantages, values)]
    return advantages, returns


def episode_to_steps(
    episode: dict,
    graphs: dict[str, dict],
    discount: float,
    lam: float,
) -> tuple[list[Step], GroupInputs] | None:
    """Replay one episode record into training steps; None if unusable."""
    instance = episode["instance"]
    graph = graphs.get(instance)
    if graph is None:
        log.warning("no final graph for instance %s; episode dropped", instance)
        return None
    n_mus, n_mcs = episode["watermark"]
    inputs = GroupInputs(
        num_constraints=graph["num_constraints"],
        mus=[list(e) for e in graph["mus"][:n_mus]],
        mcs=[list(e) for e in graph["mcs"][:n_mcs]],
        op=episode["op"],
    )
    key = GroupKey(instance, (n_mus, n_mcs), episode["op"])
    m = inputs.num_constraints
    subset = set(episode["initial"])
    steps: list[Step] = []
    values: list[float] = []
    for dec in episode["decisions"]:
        action = dec["action"]
        lp, val = dec.get("log_prob"), dec.get("value")
        if lp is None or val is None:
            log.warning("decision without log_prob/value in %s; episode dropped", instance)
            return None
        if episode["op"] == "shrink":
            candidates = sorted(subset)
        else:
            candidates = sorted(set(range(m)) - subset)
        if action == FINISH:
            col = len(candidates)
        else:
            try:
                col = candidates.index(action)
            except ValueError:
                log.warning("replay mismatch in %s: %r not a candidate", instance, action)
                return None
        steps.append(Step(key, candidates, col, float(lp), float(val)))
        values.append(float(val))
        if action != FINISH:
            if episode["op"] == "shrink":
                subset.discard(action)
            else:
                subset.add(action)
    advantages, returns = gae_terminal(float(episode["reward"]), values, discount, lam)
    for step, adv, ret in zip(steps, advantages, returns):
        step.advantage = adv
        step.ret = ret
    return steps, inputs


def load_training_batch(
    episode_paths: list[str],
    results_paths: list[str],
    discount: float,
    lam: float,
) -> TrainingBatch:
    graphs = load_result_graphs(results_paths)
    steps: list[Step] = []
    groups: dict[GroupKey, GroupInputs] = {}
    rewards: list[float] = []
    for path in episode_paths:
        for episode in read_jsonl(path):
            replayed = episode_to_steps(episode, graphs, discount, lam)
            if replayed is None:
                continue
            ep_steps, inputs = replayed
            if not ep_steps:
                continue
            groups.setdefault(ep_steps[0].group, inputs)
            steps.extend(ep_steps)
            rewards.append(float(episode["reward"]))
    return TrainingBatch(steps=steps, groups=groups, episode_rewards=rewards)
