"""Clipped-surrogate policy optimization over replayed episode steps.

The loss is assembled from per-step quantities so it can be exercised by
gradient checks on toy models independent of the hypergraph network.
Minibatches group steps that share a trunk encoding; gradients accumulate
across microbatches until cfg.batch_size steps have contributed, then the
optimizer steps once.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import torch

from .config import ModelConfig
from .episodes import GroupInputs, Step, TrainingBatch
from .model import PolicyValueNet

MICROBATCH = 64


def ppo_loss_terms(
    new_log_probs: torch.Tensor,
    entropies: torch.Tensor,
    values: torch.Tensor,
    old_log_probs: torch.Tensor,
    advantages: torch.Tensor,
    returns: torch.Tensor,
    clip_ratio: float,
    value_coef: float,
    entropy_coef: float,
) -> dict[str, torch.Tensor]:
    """Clipped surrogate + value MSE - entropy bonus, averaged over steps."""
    ratio = torch.exp(new_log_probs - old_log_probs)
    unclipped = ratio * advantages
    clipped = torch.clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio) * advantages
    policy_loss = -torch.min(unclipped, clipped).mean()
    value_loss = 0.5 * torch.square(values - returns).mean()
    entropy = entropies.mean()
    total = policy_loss + value_coef * value_loss - entropy_coef * entropy
    with torch.no_grad():
        clip_frac = ((ratio - 1.0).abs() > clip_ratio).float().mean()
        approx_kl = (old_log_probs - new_log_probs).mean()
    return {
        "total": total,
        "policy_loss": policy_loss,
        "value_loss": value_loss,
        "entropy": entropy,
        "clip_fraction": clip_frac,
        "approx_kl": approx_kl,
    }


def _policy_terms_from_logits(
    logits: torch.Tensor, action_cols: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """(log_prob of chosen action, entropy) per row; -inf columns are pads."""
    log_probs = torch.log_softmax(logits, dim=-1)
    chosen = log_probs.gather(1, action_cols.unsqueeze(1)).squeeze(1)
    probs = torch.softmax(logits, dim=-1)
    safe_lp = torch.where(probs > 0, log_probs, torch.zeros_like(log_probs))
    entropy = -(probs * safe_lp).sum(dim=-1)
    return chosen, entropy


@dataclass
class UpdateStats:
    steps: int
    optimizer_steps: int
    policy_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float
    approx_kl: float
    skipped_nonfinite: int


def ppo_update(
    net: PolicyValueNet,
    optimizer: torch.optim.Optimizer,
    batch: TrainingBatch,
    cfg: ModelConfig,
    rng: random.Random,
) -> UpdateStats:
    steps = batch.steps
    if not steps:
        return UpdateStats(0, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0)

    if cfg.normalize_advantages and len(steps) > 1:
        mean = sum(s.advantage for s in steps) / len(steps)
        var = sum((s.advantage - mean) ** 2 for s in steps) / len(steps)
        scale = math.sqrt(var) + 1e-8
        for s in steps:
            s.advantage = (s.advantage - mean) / scale

    totals = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "clip_fraction": 0.0, "approx_kl": 0.0}
    weighted_steps = 0
    optimizer_steps = 0
    skipped = 0
    net.train()
    for _ in range(cfg.ppo_epochs):
        by_group: dict = {}
        for s in steps:
            by_group.setdefault(s.group, []).append(s)
        group_keys = list(by_group.keys())
        rng.shuffle(group_keys)
        accumulated = 0
        optimizer.zero_grad()
        for key in group_keys:
            members = by_group[key]
            rng.shuffle(members)
            inputs: GroupInputs = batch.groups[key]
            for lo in range(0, len(members), MICROBATCH):
                micro: list[Step] = members[lo : lo + MICROBATCH]
                h = net.encode(inputs.num_constraints, inputs.mus, inputs.mcs, inputs.op)
                logits, values = net.decode_batch(h, [s.candidates for s in micro])
                cols = torch.tensor([s.action_col for s in micro], dtype=torch.long)
                new_lp, entropy = _policy_terms_from_logits(logits, cols)
                terms = ppo_loss_terms(
                    new_lp,
                    entropy,
                    values,
                    torch.tensor([s.old_log_prob for s in micro]),
                    torch.tensor([s.advantage for s in micro]),
                    torch.tensor([s.ret for s in micro]),
                    cfg.clip_ratio,
                    cfg.value_coef,
                    cfg.entropy_coef,
                )
                if not torch.isfinite(terms["total"]):
                    skipped += 1
                    continue
                (terms["total"] * (len(micro) / cfg.batch_size)).backward()
                accumulated += len(micro)
                weighted_steps += len(micro)
                for name in totals:
                    totals[name] += float(terms[name].detach()) * len(micro)
                if accumulated >= cfg.batch_size:
                    torch.nn.utils.clip_grad_norm_(net.parameters(), 5.0)
                    optimizer.step()
                    optimizer.zero_grad()
                    optimizer_steps += 1
                    accumulated = 0
        if accumulated:
            torch.nn.utils.clip_grad_norm_(net.parameters(), 5.0)
            optimizer.step()
            optimizer.zero_grad()
            optimizer_steps += 1
    net.eval()
    denom = max(1, weighted_steps)
    return UpdateStats(
        steps=len(steps),
        optimizer_steps=optimizer_steps,
        policy_loss=totals["policy_loss"] / denom,
        value_loss=totals["value_loss"] / denom,
        entropy=totals["entropy"] / denom,
        clip_fraction=totals["clip_fraction"] / denom,
        approx_kl=totals["approx_kl"] / denom,
        skipped_nonfinite=skipped,
    )
