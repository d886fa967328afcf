#!/usr/bin/env python3
"""Training-effect experiment: does a trained agent beat its random init?

For each seed: train the agent on random-clause instances with 5..12
variables for a target number of environment steps, then measure the
improvement ratio (MUSes+MSSes found vs the agent-free engine at a fixed
check budget) on a held-out 20-instance dataset, for both the random-init
checkpoint and the trained one. The run passes when, in at least 2 of 3
seeds, the trained ratio exceeds the untrained ratio by the margin AND the
end-of-training reward moving average exceeds the first-5%-of-steps average.

Writes agent/results/trend/summary.json plus per-seed artifacts; the
secondary acceptance test validates that summary.
"""

import argparse
import json
import subprocess
import sys
import time
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
RESULTS = REPO / "agent" / "results" / "trend"

TRAIN_FLAGS = [
    "--feature-dim", "32",
    "--allset-layers", "2",
    "--decoder-layers", "2",
    "--heads", "4",
    "--lr", "3e-4",
    "--batch-size", "512",
    "--ppo-epochs", "4",
    "--min-vars", "5",
    "--max-vars", "12",
]


def run(cmd: list[str]) -> None:
    print("+", " ".join(str(c) for c in cmd), flush=True)
    subprocess.run([str(c) for c in cmd], check=True)


def eval_ratio(ckpt: Path, dataset: Path, out: Path, budget: int) -> dict:
    run(
        [sys.executable, "-m", "musagent", "eval",
         "--ckpt", ckpt, "--dataset", dataset, "--budget", str(budget),
         "--out", out, "--seed", "0"]
    )
    report = json.loads((out / "report" / "metrics.json").read_text())
    mean, std, n = report["ratio_table"]["overall"][str(budget)]
    return {"ratio": mean, "std": std, "instances": n}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", default="0,1,2")
    parser.add_argument("--steps", type=int, default=50_000)
    parser.add_argument("--budget", type=int, default=2000)
    parser.add_argument("--margin", type=float, default=0.15)
    parser.add_argument("--out", default=str(RESULTS))
    args = parser.parse_args()

    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)
    eval_data = out_root / "eval_dataset"
    if not (eval_data / "manifest.json").exists():
        run(
            ["muskit", "gen", "sr", "--min-vars", "5", "--max-vars", "12",
             "--count", "20", "--seed", "990", "--out", eval_data]
        )

    seed_results = []
    for seed in [int(s) for s in args.seeds.split(",")]:
        sdir = out_root / f"seed{seed}"
        started = time.monotonic()
        summary_path = sdir / "train" / "summary.json"
        if summary_path.exists() and json.loads(summary_path.read_text()).get("env_steps", 0) >= args.steps:
            print(f"seed {seed}: reusing completed training run", flush=True)
        else:
            run(
                [sys.executable, "-m", "musagent", "train",
                 "--out", sdir / "train",
                 "--steps", str(args.steps),
                 "--budget", "2000",
                 "--instances-per-update", "4",
                 "--seed", str(seed),
                 *TRAIN_FLAGS]
            )
        train_summary = json.loads(summary_path.read_text())
        untrained = eval_ratio(
            sdir / "train" / "ckpt_init.pt", eval_data, sdir / "eval_untrained", args.budget
        )
        trained = eval_ratio(
            sdir / "train" / "ckpt_final.pt", eval_data, sdir / "eval_trained", args.budget
        )
        gap = trained["ratio"] - untrained["ratio"]
        reward_up = (
            train_summary["reward_final"] is not None
            and train_summary["reward_first5pct"] is not None
            and train_summary["reward_final"] > train_summary["reward_first5pct"]
        )
        entry = {
            "seed": seed,
            "env_steps": train_summary["env_steps"],
            "train_wall_time": train_summary["wall_time"],
            "total_wall_time": time.monotonic() - started,
            "untrained_ratio": untrained["ratio"],
            "untrained_std": untrained["std"],
            "trained_ratio": trained["ratio"],
            "trained_std": trained["std"],
            "ratio_gap": gap,
            "reward_first5pct": train_summary["reward_first5pct"],
            "reward_final": train_summary["reward_final"],
            "reward_increased": reward_up,
            "passed": bool(gap >= args.margin and reward_up),
        }
        print(json.dumps(entry, indent=2), flush=True)
        seed_results.append(entry)
        (out_root / "summary.json").write_text(
            json.dumps(_summary(seed_results, args), indent=2) + "\n"
        )

    summary = _summary(seed_results, args)
    print(json.dumps(summary, indent=2))
    return 0 if summary["criterion_met"] else 1


def _summary(seed_results, args):
    passes = sum(1 for r in seed_results if r["passed"])
    return {
        "margin": args.margin,
        "budget": args.budget,
        "target_steps": args.steps,
        "eval_instances": 20,
        "seeds": seed_results,
        "passes": passes,
        "criterion_met": passes >= 2,
    }


if __name__ == "__main__":
    sys.exit(main())
