"""Short end-to-end training loop through the real engine CLI."""

import json
import shutil
import sys
from pathlib import Path

import pytest
import torch

from musagent.config import ModelConfig
from musagent.episodes import load_training_batch
from musagent.model import load_checkpoint
from musagent.train import train

pytestmark = pytest.mark.skipif(
    shutil.which("muskit") is None, reason="muskit CLI not installed"
)

SMALL = dict(
    target_steps=150,
    budget=250,
    instances_per_update=2,
    dataset_count=4,
    min_vars=4,
    max_vars=6,
)


def test_training_loop_runs_and_checkpoints(tmp_path):
    cfg = ModelConfig(
        feature_dim=16,
        num_allset_layers=1,
        num_decoder_layers=1,
        num_heads=4,
        learning_rate=1e-3,
        batch_size=64,
        ppo_epochs=1,
    )
    out = tmp_path / "run"
    summary = train(out, cfg, seed=1, **SMALL)
    assert summary["env_steps"] >= SMALL["target_steps"]
    assert summary["episodes"] > 0
    assert (out / "ckpt_init.pt").exists()
    assert (out / "ckpt_final.pt").exists()
    log_lines = [json.loads(l) for l in (out / "training_log.jsonl").read_text().splitlines()]
    assert log_lines and all(l["optimizer_steps"] >= 1 for l in log_lines)

    init_net, _ = load_checkpoint(str(out / "ckpt_init.pt"))
    final_net, extra = load_checkpoint(str(out / "ckpt_final.pt"))
    assert extra["trained_steps"] == summary["env_steps"]
    changed = any(
        not torch.equal(a, b)
        for (_, a), (_, b) in zip(init_net.state_dict().items(), final_net.state_dict().items())
    )
    assert changed, "training must move the parameters"

    # the recorded episodes replay into consistent training steps
    update_files = sorted((out / "updates").glob("u*_episodes.jsonl"))
    results_files = sorted((out / "updates").glob("u*_results.jsonl"))
    batch = load_training_batch(
        [str(update_files[0])], [str(results_files[0])], cfg.discount, cfg.gae_lambda
    )
    assert batch.steps
    for step in batch.steps:
        assert 0 <= step.action_col <= len(step.candidates)
