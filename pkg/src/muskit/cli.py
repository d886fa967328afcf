"""Command-line front end: dataset generation, budgeted enumeration runs,
comparison metrics, and r_eff reports.

Results are line-delimited JSON records (one instance per line); tables are
additionally emitted as CSV. The default agent command may be supplied via
the MUSKIT_AGENT_CMD environment variable.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path
from random import Random

from . import bench
from .agentlink import (
    EpisodeRecorder,
    ExternalPolicy,
    FrequencyHeuristicPolicy,
    ImmediateFinishPolicy,
    Policy,
    RandomPolicy,
)
from .enumeration import RUNNERS, EnumeratorConfig, RunResult, TimeLimitExceeded
from .formula import (
    GenerationError,
    GeneratorConfig,
    emit_dimacs,
    generate_graph_coloring,
    generate_sr,
    parse_dimacs,
)

log = logging.getLogger("muskit.cli")

AGENT_ENV_VAR = "MUSKIT_AGENT_CMD"


def _stable_seed(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


# ------------------------------------------------------------------------ gen


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.generator == "sr":
        cfg = GeneratorConfig(
            kind="sr",
            min_vars=args.min_vars,
            max_vars=args.max_vars,
            geometric_p=args.geometric_p,
            bernoulli_p=args.bernoulli_p,
            rng_seed=args.seed,
        )
        generate = generate_sr
        prefix = "sr"
    else:
        cfg = GeneratorConfig(
            kind="graph_coloring",
            gc_nodes=args.nodes,
            gc_colors=args.colors,
            gc_edge_p=args.edge_p,
            rng_seed=args.seed,
        )
        generate = generate_graph_coloring
        prefix = "gc"

    master = Random(cfg.rng_seed)
    entries = []
    for i in range(args.count):
        rng = Random(master.getrandbits(64))
        try:
            inst = generate(cfg, rng)
        except GenerationError as exc:
            print(f"generation failed for instance {i}: {exc}", file=sys.stderr)
            return 1
        name = f"{prefix}_{i:04d}"
        text = emit_dimacs(inst)
        (out / f"{name}.cnf").write_text(text)
        entries.append(
            {
                "id": name,
                "file": f"{name}.cnf",
                "sha256": hashlib.sha256(text.encode()).hexdigest(),
                "num_vars": inst.num_vars,
                "num_clauses": inst.num_clauses,
            }
        )
    manifest = {
        "kind": cfg.kind,
        "seed": args.seed,
        "count": args.count,
        "config": asdict(cfg),
        "instances": entries,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {args.count} instances to {out}")
    return 0


# ------------------------------------------------------------------ enumerate


def _build_policy(spec: str, num_constraints: int, seed: int, args) -> Policy | None:
    if spec == "none":
        return None
    if spec == "finish":
        return ImmediateFinishPolicy()
    if spec == "random":
        return RandomPolicy(Random(seed), p_finish=args.p_finish)
    if spec == "freq":
        return FrequencyHeuristicPolicy(max_action_ratio=args.freq_ratio)
    if spec.startswith("extern:"):
        return ExternalPolicy(spec[len("extern:"):], num_constraints, timeout=args.agent_timeout)
    raise ValueError(f"unknown agent spec {spec!r}")


def _run_one_instance(payload: dict) -> dict:
    instance_id = payload["id"]
    inst = parse_dimacs(payload["dimacs"])
    cfg = EnumeratorConfig(
        algo=payload["algo"],
        seed_polarity=payload["seed_polarity"],
        remus_reduction=payload["remus_reduction"],
        rng_seed=_stable_seed(payload["seed"], instance_id),
    )
    args_ns = argparse.Namespace(**payload["policy_args"])
    recorder = EpisodeRecorder(payload["episodes"]) if payload["episodes"] else None
    policy = None
    started = time.monotonic()
    deadline = started + payload["time_limit"] if payload["time_limit"] else None
    try:
        policy = _build_policy(
            payload["agent"], inst.num_clauses, _stable_seed(payload["seed"], instance_id, "pol"), args_ns
        )
        runner = RUNNERS[payload["algo"]]
        result: RunResult = runner(
            inst,
            cfg,
            policy=policy,
            budget=payload["budget"],
            recorder=recorder,
            instance_id=instance_id,
            mode=payload["mode"],
            deadline=deadline,
            rng=Random(cfg.rng_seed),
        )
    except TimeLimitExceeded:
        return {"instance": instance_id, "status": "excluded", "reason": "time-limit"}
    except Exception as exc:  # noqa: BLE001 - per-run errors isolate to the instance
        return {"instance": instance_id, "status": "excluded", "reason": f"error: {exc}"}
    finally:
        if policy is not None:
            policy.close()
        if recorder is not None:
            recorder.close()
    wall = time.monotonic() - started
    graph_export = result.graph.export_incidence()
    return {
        "instance": instance_id,
        "status": "ok",
        "algo": payload["algo"],
        "agent": payload["agent"],
        "mode": payload["mode"],
        "budget": payload["budget"],
        "seed": payload["seed"],
        "num_vars": inst.num_vars,
        "num_clauses": inst.num_clauses,
        "exhausted": result.exhausted,
        "muses": [m.indices() for m in result.muses],
        "msses": [m.indices() for m in result.msses],
        "total_checks": result.ledger.total_checks,
        "per_phase": result.ledger.per_phase,
        "trajectory": [list(t) for t in result.trajectory],
        "policy_calls": result.policy_calls,
        "wall_time": wall,
        "graph": {
            "num_vertices": graph_export.num_vertices,
            "mus": [list(e) for e in graph_export.mus],
            "mcs": [list(e) for e in graph_export.mcs],
        },
    }


def _load_dataset(dataset: str, only: set[str] | None) -> list[dict]:
    root = Path(dataset)
    manifest = json.loads((root / "manifest.json").read_text())
    out = []
    for entry in manifest["instances"]:
        if only and entry["id"] not in only:
            continue
        out.append({"id": entry["id"], "dimacs": (root / entry["file"]).read_text()})
    return out


def cmd_enumerate(args) -> int:
    agent = args.agent
    if agent is None:
        env_cmd = os.environ.get(AGENT_ENV_VAR)
        agent = f"extern:{env_cmd}" if env_cmd else "none"
    only = set(args.instances.split(",")) if args.instances else None
    dataset = _load_dataset(args.dataset, only)
    if not dataset:
        print("no instances selected", file=sys.stderr)
        return 1
    if args.record_episodes and args.jobs > 1:
        print("episode recording requires --jobs 1", file=sys.stderr)
        return 1

    payloads = [
        {
            "id": item["id"],
            "dimacs": item["dimacs"],
            "algo": args.algo,
            "agent": agent,
            "mode": args.agent_mode,
            "budget": args.budget,
            "time_limit": args.time_limit,
            "seed": args.seed,
            "seed_polarity": args.seed_polarity,
            "remus_reduction": args.remus_reduction,
            "episodes": args.record_episodes,
            "policy_args": {
                "p_finish": args.p_finish,
                "freq_ratio": args.freq_ratio,
                "agent_timeout": args.agent_timeout,
            },
        }
        for item in dataset
    ]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            records = list(pool.map(_run_one_instance, payloads))
    else:
        records = [_run_one_instance(p) for p in payloads]
    records.sort(key=lambda r: r["instance"])

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
    ok = sum(1 for r in records if r["status"] == "ok")
    total_sets = sum(
        len(r.get("muses", [])) + len(r.get("msses", [])) for r in records if r["status"] == "ok"
    )
    print(f"{ok}/{len(records)} instances ok, {total_sets} sets enumerated -> {out}")
    return 0


# -------------------------------------------------------------------- compare


def _read_records(path: str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def cmd_compare(args) -> int:
    with_records = _read_records(args.with_results)
    without_records = _read_records(args.without_results)
    watermarks = tuple(int(w) for w in args.watermarks.split(","))
    metrics = bench.compare_runs(with_records, without_records, watermarks)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = metrics.ratio_table()
    report = {
        "watermarks": list(metrics.watermarks),
        "excluded": metrics.excluded,
        "ratio_table": {
            group: {str(w): list(cell) for w, cell in row.items()}
            for group, row in table.items()
        },
        "r_eff": metrics.r_eff_summary(),
        "per_instance": [
            {
                "instance": m.instance,
                "quartile": m.quartile,
                "completed": m.completed,
                "counts_with": {str(w): c for w, c in m.counts_with.items()},
                "counts_without": {str(w): c for w, c in m.counts_without.items()},
                "ratios": {str(w): r for w, r in m.ratios.items()},
            }
            for m in metrics.instances
        ],
    }
    (out / "metrics.json").write_text(json.dumps(report, indent=2) + "\n")
    (out / "table.csv").write_text(bench.ratio_table_csv(metrics))
    (out / "series.csv").write_text(bench.series_csv(with_records, without_records))
    (out / "scatter.csv").write_text(bench.scatter_csv(metrics))

    for w in metrics.watermarks:
        mean, std, n = table["overall"][w]
        print(f"overall ratio @{w} checks: {mean:.3f} ± {std:.3f} (n={n})")
    if metrics.excluded:
        print(f"excluded instances: {len(metrics.excluded)}")
    print(f"report -> {out}")
    return 0


def cmd_r_eff(args) -> int:
    with_records = _read_records(args.with_results)
    without_records = _read_records(args.without_results)
    metrics = bench.compare_runs(with_records, without_records, (10**9,))
    summary = metrics.r_eff_summary()
    if summary is None:
        print("no instances with agent inference counts", file=sys.stderr)
        return 1
    print(
        "r_eff mean-of-ratios: "
        f"{summary['mean_of_ratios']:.4f} ± {summary['mean_of_ratios_std']:.4f} "
        f"(n={summary['instances']})"
    )
    print(f"r_eff ratio-of-means: {summary['ratio_of_means']:.4f}")
    print(
        f"means: N_check={summary['n_check_mean']:.2f} "
        f"N'_check={summary['n_check_agent_mean']:.2f} N_infer={summary['n_infer_mean']:.2f}"
    )
    if args.out:
        Path(args.out).write_text(json.dumps(summary, indent=2) + "\n")
    return 0


# ----------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="muskit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a DIMACS dataset with a manifest")
    gen_sub = gen.add_subparsers(dest="generator", required=True)
    g_sr = gen_sub.add_parser("sr", help="random-clause unsat instances")
    g_sr.add_argument("--min-vars", type=int, default=5)
    g_sr.add_argument("--max-vars", type=int, default=20)
    g_sr.add_argument("--geometric-p", type=float, default=0.3)
    g_sr.add_argument("--bernoulli-p", type=float, default=0.3)
    g_gc = gen_sub.add_parser("gc", help="graph-coloring unsat instances")
    g_gc.add_argument("--nodes", type=int, default=6)
    g_gc.add_argument("--colors", type=int, default=3)
    g_gc.add_argument("--edge-p", type=float, default=0.5)
    for g in (g_sr, g_gc):
        g.add_argument("--count", type=int, required=True)
        g.add_argument("--seed", type=int, default=0)
        g.add_argument("--out", required=True)

    enum = sub.add_parser("enumerate", help="run budgeted enumeration over a dataset")
    enum.add_argument("--dataset", required=True, help="directory containing manifest.json")
    enum.add_argument("--algo", choices=("marco", "tome", "remus"), default="marco")
    enum.add_argument(
        "--agent",
        default=None,
        help="none|finish|random|freq|extern:<cmd> "
        f"(default: none, or extern:${AGENT_ENV_VAR} when set)",
    )
    enum.add_argument("--agent-mode", choices=("sample", "greedy"), default="greedy")
    enum.add_argument("--agent-timeout", type=float, default=30.0)
    enum.add_argument("--p-finish", type=float, default=0.2, help="for --agent random")
    enum.add_argument("--freq-ratio", type=float, default=1.0, help="for --agent freq")
    enum.add_argument("--budget", type=int, default=10000)
    enum.add_argument("--time-limit", type=float, default=600.0)
    enum.add_argument("--seed", type=int, default=0)
    enum.add_argument("--seed-polarity", choices=("maximal", "minimal", "default"), default="maximal")
    enum.add_argument("--remus-reduction", type=float, default=0.9)
    enum.add_argument("--instances", default=None, help="comma-separated instance ids")
    enum.add_argument("--record-episodes", default=None, metavar="PATH")
    enum.add_argument("--jobs", type=int, default=1)
    enum.add_argument("--out", required=True)

    cmp_ = sub.add_parser("compare", help="improvement ratios and plot data")
    cmp_.add_argument("with_results", help="results JSONL of the with-agent arm")
    cmp_.add_argument("without_results", help="results JSONL of the without-agent arm")
    cmp_.add_argument("--watermarks", default="1000,5000,10000")
    cmp_.add_argument("--out", required=True)

    reff = sub.add_parser("r-eff", help="checks saved per agent invocation")
    reff.add_argument("with_results")
    reff.add_argument("without_results")
    reff.add_argument("--out", default=None)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handlers = {
        "gen": cmd_gen,
        "enumerate": cmd_enumerate,
        "compare": cmd_compare,
        "r-eff": cmd_r_eff,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
