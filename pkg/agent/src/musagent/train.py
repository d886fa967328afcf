"""Training loop: collect shrink/grow episodes by driving the enumeration
engine's CLI with this agent attached over the wire protocol, then update
the policy on the recorded episodes.

The engine is consumed strictly through its external interfaces: the
`muskit` command line, the stdio line protocol, and the episode/results
files it writes.
"""

from __future__ import annotations

import json
import logging
import random
import shlex
import subprocess
import sys
import time
from pathlib import Path

import torch

from .config import ModelConfig
from .episodes import load_training_batch, read_jsonl
from .model import build_net, load_checkpoint, save_checkpoint
from .ppo import ppo_update

log = logging.getLogger("musagent.train")


def _run(cmd: list[str]) -> None:
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(
            f"command failed ({proc.returncode}): {' '.join(cmd)}\n{proc.stderr}"
        )


def ensure_dataset(
    engine: str,
    path: Path,
    count: int,
    min_vars: int,
    max_vars: int,
    seed: int,
) -> Path:
    if not (path / "manifest.json").exists():
        _run(
            shlex.split(engine)
            + [
                "gen", "sr",
                "--min-vars", str(min_vars),
                "--max-vars", str(max_vars),
                "--count", str(count),
                "--seed", str(seed),
                "--out", str(path),
            ]
        )
    return path


def _serve_cmd(ckpt: Path, mode: str, seed: int) -> str:
    return f"{sys.executable} -m musagent serve --ckpt {ckpt} --mode {mode} --seed {seed}"


def collect_episodes(
    engine: str,
    dataset: Path,
    instance_ids: list[str],
    ckpt: Path,
    budget: int,
    seed: int,
    out_prefix: Path,
) -> tuple[Path, Path]:
    episodes = Path(f"{out_prefix}_episodes.jsonl")
    results = Path(f"{out_prefix}_results.jsonl")
    if episodes.exists():
        episodes.unlink()
    _run(
        shlex.split(engine)
        + [
            "enumerate",
            "--dataset", str(dataset),
            "--instances", ",".join(instance_ids),
            "--algo", "marco",
            "--agent", f"extern:{_serve_cmd(ckpt, 'sample', seed)}",
            "--agent-mode", "sample",
            "--budget", str(budget),
            "--seed", str(seed),
            "--record-episodes", str(episodes),
            "--out", str(results),
        ]
    )
    return episodes, results


def train(
    out_dir: Path,
    cfg: ModelConfig,
    *,
    engine: str = "muskit",
    dataset: Path | None = None,
    target_steps: int = 50_000,
    budget: int = 2000,
    instances_per_update: int = 4,
    seed: int = 0,
    dataset_count: int = 64,
    min_vars: int = 5,
    max_vars: int = 12,
) -> dict:
    """Run PPO training until target_steps environment steps; returns a
    summary dict (also written to out_dir/summary.json)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    updates_dir = out_dir / "updates"
    updates_dir.mkdir(exist_ok=True)
    data = ensure_dataset(
        engine, dataset or out_dir / "dataset", dataset_count, min_vars, max_vars, seed + 3000
    )
    manifest = json.loads((data / "manifest.json").read_text())
    ids = [e["id"] for e in manifest["instances"]]

    net = build_net(cfg, seed=seed)
    init_ckpt = out_dir / "ckpt_init.pt"
    latest_ckpt = out_dir / "ckpt_latest.pt"
    save_checkpoint(str(init_ckpt), net, {"seed": seed, "trained_steps": 0})
    save_checkpoint(str(latest_ckpt), net, {"seed": seed, "trained_steps": 0})
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    rng = random.Random(seed)

    total_steps = 0
    update = 0
    reward_points: list[tuple[int, float]] = []  # (env steps so far, episode reward)
    log_path = out_dir / "training_log.jsonl"
    started = time.monotonic()
    with log_path.open("w", encoding="utf-8") as log_fh:
        while total_steps < target_steps:
            chosen = [ids[(update * instances_per_update + k) % len(ids)] for k in range(instances_per_update)]
            prefix = updates_dir / f"u{update:04d}"
            episodes_path, results_path = collect_episodes(
                engine, data, chosen, latest_ckpt, budget, seed * 100_000 + update, prefix
            )
            batch = load_training_batch(
                [str(episodes_path)], [str(results_path)], cfg.discount, cfg.gae_lambda
            )
            if not batch.steps:
                log.warning("update %d collected no usable steps", update)
                update += 1
                continue
            for reward in batch.episode_rewards:
                total_steps_snapshot = total_steps  # rewards binned by collection point
                reward_points.append((total_steps_snapshot, reward))
            total_steps += len(batch.steps)
            stats = ppo_update(net, optimizer, batch, cfg, rng)
            save_checkpoint(
                str(latest_ckpt), net, {"seed": seed, "trained_steps": total_steps}
            )
            mean_reward = sum(batch.episode_rewards) / len(batch.episode_rewards)
            entry = {
                "update": update,
                "env_steps": total_steps,
                "episodes": len(batch.episode_rewards),
                "mean_reward": mean_reward,
                "policy_loss": stats.policy_loss,
                "value_loss": stats.value_loss,
                "entropy": stats.entropy,
                "clip_fraction": stats.clip_fraction,
                "approx_kl": stats.approx_kl,
                "optimizer_steps": stats.optimizer_steps,
                "wall_time": time.monotonic() - started,
            }
            log_fh.write(json.dumps(entry) + "\n")
            log_fh.flush()
            log.info(
                "update %d: %d steps total, mean reward %.3f",
                update,
                total_steps,
                mean_reward,
            )
            update += 1

    final_ckpt = out_dir / "ckpt_final.pt"
    save_checkpoint(str(final_ckpt), net, {"seed": seed, "trained_steps": total_steps})
    summary = summarize_rewards(reward_points, total_steps)
    summary.update(
        {
            "seed": seed,
            "env_steps": total_steps,
            "updates": update,
            "wall_time": time.monotonic() - started,
            "config": cfg.to_dict(),
        }
    )
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def summarize_rewards(points: list[tuple[int, float]], total_steps: int) -> dict:
    """Early-vs-late reward moving averages (first 5% of steps vs final 5%)."""
    if not points:
        return {"reward_first5pct": None, "reward_final": None}
    cutoff = 0.05 * total_steps
    early = [r for s, r in points if s <= cutoff]
    if not early:
        early = [points[0][1]]
    tail_n = max(len(early), max(1, len(points) // 20))
    late = [r for _, r in points[-tail_n:]]
    return {
        "reward_first5pct": sum(early) / len(early),
        "reward_final": sum(late) / len(late),
        "episodes": len(points),
    }


# ------------------------------------------------------------------ evaluation


def evaluate_ratio(
    engine: str,
    ckpt: Path,
    dataset: Path,
    budget: int,
    out_dir: Path,
    seed: int = 0,
) -> dict:
    """Improvement ratio of this agent over the agent-free engine at a
    check budget, via the engine's own compare report."""
    out_dir.mkdir(parents=True, exist_ok=True)
    with_path = out_dir / "with.jsonl"
    without_path = out_dir / "without.jsonl"
    base = shlex.split(engine) + [
        "enumerate",
        "--dataset", str(dataset),
        "--algo", "marco",
        "--budget", str(budget),
        "--seed", str(seed),
    ]
    _run(base + ["--agent", f"extern:{_serve_cmd(ckpt, 'greedy', seed)}", "--out", str(with_path)])
    _run(base + ["--agent", "none", "--out", str(without_path)])
    report = out_dir / "report"
    _run(
        shlex.split(engine)
        + [
            "compare",
            str(with_path),
            str(without_path),
            "--watermarks", str(budget),
            "--out", str(report),
        ]
    )
    metrics = json.loads((report / "metrics.json").read_text())
    mean, std, n = metrics["ratio_table"]["overall"][str(budget)]
    return {"ratio": mean, "std": std, "instances": n, "report": str(report)}
