"""musagent command line: serve the protocol, create checkpoints, train, eval."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ModelConfig
from .model import build_net, load_checkpoint, save_checkpoint
from .protocol import serve
from .train import ensure_dataset, evaluate_ratio, train


def _config_from_args(args) -> ModelConfig:
    return ModelConfig(
        feature_dim=args.feature_dim,
        num_allset_layers=args.allset_layers,
        num_decoder_layers=args.decoder_layers,
        num_heads=args.heads,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        ppo_epochs=args.ppo_epochs,
        clip_ratio=args.clip_ratio,
        entropy_coef=args.entropy_coef,
    )


def _add_config_flags(parser, training: bool = False) -> None:
    parser.add_argument("--feature-dim", type=int, default=64)
    parser.add_argument("--allset-layers", type=int, default=3)
    parser.add_argument("--decoder-layers", type=int, default=3)
    parser.add_argument("--heads", type=int, default=4)
    parser.add_argument("--lr", type=float, default=2e-5)
    parser.add_argument("--batch-size", type=int, default=1024)
    parser.add_argument("--ppo-epochs", type=int, default=4)
    parser.add_argument("--clip-ratio", type=float, default=0.2)
    parser.add_argument("--entropy-coef", type=float, default=0.01)


def cmd_serve(args) -> int:
    import torch

    torch.set_num_threads(1)  # tiny tensors: thread sync costs more than it buys
    if args.ckpt:
        net, _ = load_checkpoint(args.ckpt)
    else:
        net = build_net(_config_from_args(args), seed=args.seed)
    serve(net, mode=args.mode, seed=args.seed)
    return 0


def cmd_init(args) -> int:
    net = build_net(_config_from_args(args), seed=args.seed)
    save_checkpoint(args.out, net, {"seed": args.seed, "trained_steps": 0})
    print(f"wrote random-init checkpoint to {args.out}")
    return 0


def cmd_train(args) -> int:
    import torch

    torch.set_num_threads(2)
    summary = train(
        Path(args.out),
        _config_from_args(args),
        engine=args.engine,
        dataset=Path(args.dataset) if args.dataset else None,
        target_steps=args.steps,
        budget=args.budget,
        instances_per_update=args.instances_per_update,
        seed=args.seed,
        dataset_count=args.dataset_count,
        min_vars=args.min_vars,
        max_vars=args.max_vars,
    )
    print(json.dumps(summary, indent=2))
    return 0


def cmd_eval(args) -> int:
    dataset = Path(args.dataset)
    if not (dataset / "manifest.json").exists():
        ensure_dataset(args.engine, dataset, args.dataset_count, args.min_vars, args.max_vars, args.seed)
    result = evaluate_ratio(
        args.engine, Path(args.ckpt), dataset, args.budget, Path(args.out), seed=args.seed
    )
    print(json.dumps(result, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="musagent", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    srv = sub.add_parser("serve", help="answer engine requests on stdio")
    srv.add_argument("--ckpt", default=None)
    srv.add_argument("--mode", choices=("sample", "greedy"), default="greedy")
    srv.add_argument("--seed", type=int, default=0)
    _add_config_flags(srv)

    init = sub.add_parser("init", help="write a random-init checkpoint")
    init.add_argument("--out", required=True)
    init.add_argument("--seed", type=int, default=0)
    _add_config_flags(init)

    tr = sub.add_parser("train", help="PPO training against the engine CLI")
    tr.add_argument("--out", required=True)
    tr.add_argument("--engine", default="muskit")
    tr.add_argument("--dataset", default=None)
    tr.add_argument("--dataset-count", type=int, default=64)
    tr.add_argument("--min-vars", type=int, default=5)
    tr.add_argument("--max-vars", type=int, default=12)
    tr.add_argument("--steps", type=int, default=50_000)
    tr.add_argument("--budget", type=int, default=2000)
    tr.add_argument("--instances-per-update", type=int, default=4)
    tr.add_argument("--seed", type=int, default=0)
    _add_config_flags(tr, training=True)

    ev = sub.add_parser("eval", help="improvement ratio vs the agent-free engine")
    ev.add_argument("--ckpt", required=True)
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--dataset-count", type=int, default=20)
    ev.add_argument("--min-vars", type=int, default=5)
    ev.add_argument("--max-vars", type=int, default=12)
    ev.add_argument("--budget", type=int, default=2000)
    ev.add_argument("--engine", default="muskit")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    handlers = {"serve": cmd_serve, "init": cmd_init, "train": cmd_train, "eval": cmd_eval}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
