"""Benchmark metrics: budgeted counts, improvement ratios, quartile tables,
plot-data series, and the checks-saved-per-inference ratio r_eff.

All aggregates are recomputable from the persisted per-instance records;
nothing here keeps aggregate-only state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from statistics import fmean, pstdev

log = logging.getLogger("muskit.bench")

DEFAULT_WATERMARKS = (1000, 5000, 10000)


def count_at_watermark(trajectory: list[tuple[int, int]], watermark: int) -> int:
    """Cumulative MUS+MSS count once `watermark` checks have been spent."""
    best = 0
    for checks, count in trajectory:
        if checks <= watermark:
            best = max(best, count)
        else:
            break
    return best


def improvement_ratio(count_with: int, count_without: int) -> float | None:
    """Per-instance ratio; None when the denominator is zero (excluded, logged)."""
    if count_without == 0:
        return None
    return count_with / count_without


def compute_r_eff(n_check: float, n_check_agent: float, n_infer: float) -> float:
    """Average oracle checks saved per agent invocation:
    (N_check - N'_check) / N_infer. Requires N_infer > 0."""
    if n_infer <= 0:
        raise ValueError("N_infer must be positive")
    return (n_check - n_check_agent) / n_infer


def _mean_std(values: list[float]) -> tuple[float, float]:
    if not values:
        return float("nan"), float("nan")
    return fmean(values), pstdev(values)


def assign_quartiles(values_by_instance: dict[str, int]) -> dict[str, int]:
    """Quartile group (1..4) per instance, ranked by value then id for
    deterministic ties; group 1 holds the lowest counts."""
    ordered = sorted(values_by_instance, key=lambda k: (values_by_instance[k], k))
    n = len(ordered)
    groups: dict[str, int] = {}
    for rank, key in enumerate(ordered):
        groups[key] = min(4, 1 + (4 * rank) // n) if n else 1
    return groups


@dataclass
class InstanceMetrics:
    instance: str
    counts_with: dict[int, int]
    counts_without: dict[int, int]
    ratios: dict[int, float | None]
    quartile: int
    completed: bool  # both arms ran to exhaustion
    extraction_checks_with: int = 0
    extraction_checks_without: int = 0
    num_sets_with: int = 0
    num_sets_without: int = 0
    policy_calls: int = 0


@dataclass
class RunMetrics:
    """Comparison of a with-agent arm against a without-agent arm."""

    watermarks: tuple[int, ...]
    instances: list[InstanceMetrics]
    excluded: list[str] = field(default_factory=list)

    def ratio_table(self) -> dict[str, dict[int, tuple[float, float, int]]]:
        """mean/std/n of improvement ratios per quartile row and overall."""
        table: dict[str, dict[int, tuple[float, float, int]]] = {}
        rows: dict[str, list[InstanceMetrics]] = {"overall": self.instances}
        for q in (1, 2, 3, 4):
            rows[f"{q}Q"] = [m for m in self.instances if m.quartile == q]
        for name, members in rows.items():
            table[name] = {}
            for w in self.watermarks:
                ratios = [m.ratios[w] for m in members if m.ratios[w] is not None]
                mean, std = _mean_std(ratios)
                table[name][w] = (mean, std, len(ratios))
        return table

    def r_eff_summary(self) -> dict[str, float] | None:
        """Both r_eff variants; None when no instance carries inference counts.

        mean_of_ratios averages per-instance (N_check - N'_check)/N_infer;
        ratio_of_means applies the formula to dataset-mean N_check, N'_check,
        N_infer. The variants differ in general and are both labeled.
        """
        usable = [
            m
            for m in self.instances
            if m.policy_calls > 0 and m.num_sets_with > 0 and m.num_sets_without > 0
        ]
        if not usable:
            return None
        per_instance = []
        checks_plain, checks_agent, infers = [], [], []
        for m in usable:
            n_check = m.extraction_checks_without / m.num_sets_without
            n_check_agent = m.extraction_checks_with / m.num_sets_with
            n_infer = m.policy_calls / m.num_sets_with
            per_instance.append(compute_r_eff(n_check, n_check_agent, n_infer))
            checks_plain.append(n_check)
            checks_agent.append(n_check_agent)
            infers.append(n_infer)
        mean, std = _mean_std(per_instance)
        return {
            "mean_of_ratios": mean,
            "mean_of_ratios_std": std,
            "ratio_of_means": compute_r_eff(fmean(checks_plain), fmean(checks_agent), fmean(infers)),
            "n_check_mean": fmean(checks_plain),
            "n_check_agent_mean": fmean(checks_agent),
            "n_infer_mean": fmean(infers),
            "instances": len(usable),
        }


def _extraction_checks(record: dict) -> int:
    phases = record.get("per_phase", {})
    return sum(phases.get(p, 0) for p in ("shrink", "grow", "correction"))


def compare_runs(
    with_records: list[dict],
    without_records: list[dict],
    watermarks=DEFAULT_WATERMARKS,
) -> RunMetrics:
    """Pair per-instance run records by instance id and compute RunMetrics.

    Instances excluded (time limit, errors) in either arm are excluded from
    both, mirroring the symmetric exclusion rule. The quartile grouping is
    based on the without-agent counts at the largest watermark.
    """
    watermarks = tuple(sorted(watermarks))
    by_id_with = {r["instance"]: r for r in with_records}
    by_id_without = {r["instance"]: r for r in without_records}
    if set(by_id_with) != set(by_id_without):
        raise ValueError(
            "result files cover different instances: "
            f"{sorted(set(by_id_with) ^ set(by_id_without))[:5]} ..."
        )
    excluded = []
    usable: list[tuple[dict, dict]] = []
    for key in sorted(by_id_with):
        rw, rwo = by_id_with[key], by_id_without[key]
        if rw.get("status") != "ok" or rwo.get("status") != "ok":
            excluded.append(key)
            continue
        usable.append((rw, rwo))

    top = watermarks[-1]
    base_counts = {
        rwo["instance"]: count_at_watermark(rwo["trajectory"], top) for _, rwo in usable
    }
    quartiles = assign_quartiles(base_counts)

    instances = []
    for rw, rwo in usable:
        counts_with = {w: count_at_watermark(rw["trajectory"], w) for w in watermarks}
        counts_without = {w: count_at_watermark(rwo["trajectory"], w) for w in watermarks}
        ratios: dict[int, float | None] = {}
        for w in watermarks:
            r = improvement_ratio(counts_with[w], counts_without[w])
            if r is None:
                log.info(
                    "instance %s has zero baseline count at %d checks; ratio undefined",
                    rw["instance"],
                    w,
                )
            ratios[w] = r
        instances.append(
            InstanceMetrics(
                instance=rw["instance"],
                counts_with=counts_with,
                counts_without=counts_without,
                ratios=ratios,
                quartile=quartiles[rw["instance"]],
                completed=bool(rw.get("exhausted")) and bool(rwo.get("exhausted")),
                extraction_checks_with=_extraction_checks(rw),
                extraction_checks_without=_extraction_checks(rwo),
                num_sets_with=len(rw.get("muses", [])) + len(rw.get("msses", [])),
                num_sets_without=len(rwo.get("muses", [])) + len(rwo.get("msses", [])),
                policy_calls=rw.get("policy_calls", 0),
            )
        )
    return RunMetrics(watermarks=watermarks, instances=instances, excluded=excluded)


# ------------------------------------------------------------------- emission


def ratio_table_csv(metrics: RunMetrics) -> str:
    table = metrics.ratio_table()
    lines = ["group," + ",".join(f"{w}_checks" for w in metrics.watermarks)]
    for name in ("1Q", "2Q", "3Q", "4Q", "overall"):
        cells = []
        for w in metrics.watermarks:
            mean, std, n = table[name][w]
            cells.append(f"{mean:.4f}±{std:.4f} (n={n})" if n else "n/a")
        lines.append(f"{name}," + ",".join(cells))
    return "\n".join(lines) + "\n"


def series_rows(records: list[dict], arm: str) -> list[tuple[str, str, int, int]]:
    """Flat (instance, arm, checks, count) rows; monotone in checks per instance."""
    rows = []
    for rec in records:
        if rec.get("status") != "ok":
            continue
        seen = 0
        for checks, count in rec["trajectory"]:
            seen = max(seen, count)
            rows.append((rec["instance"], arm, checks, seen))
    return rows


def series_csv(with_records: list[dict], without_records: list[dict]) -> str:
    lines = ["instance,arm,checks,count"]
    for row in series_rows(with_records, "with_agent") + series_rows(without_records, "without_agent"):
        lines.append(",".join(str(x) for x in row))
    return "\n".join(lines) + "\n"


def scatter_csv(metrics: RunMetrics) -> str:
    """Per-instance (with, without) count pairs at the largest watermark."""
    top = metrics.watermarks[-1]
    lines = ["instance,count_with,count_without,completed"]
    for m in metrics.instances:
        lines.append(
            f"{m.instance},{m.counts_with[top]},{m.counts_without[top]},"
            f"{'yes' if m.completed else 'no'}"
        )
    return "\n".join(lines) + "\n"
