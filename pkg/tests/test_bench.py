"""Metric formulas, quartiles, r_eff variants, and emission formats."""

import pytest

from muskit.bench import (
    RunMetrics,
    assign_quartiles,
    compare_runs,
    compute_r_eff,
    count_at_watermark,
    improvement_ratio,
    ratio_table_csv,
    scatter_csv,
    series_csv,
)


def _record(instance, counts, *, exhausted=False, agented=False, status="ok"):
    """Synthetic run record with a trajectory hitting the given {checks: count}."""
    trajectory = sorted((c, k) for c, k in counts.items())
    rec = {
        "instance": instance,
        "status": status,
        "exhausted": exhausted,
        "muses": [[0]] * (trajectory[-1][1] if trajectory else 0),
        "msses": [],
        "trajectory": [list(t) for t in trajectory],
        "per_phase": {"seed": 5, "shrink": 40, "grow": 10, "correction": 0},
        "policy_calls": 0,
    }
    if agented:
        rec["per_phase"] = {"seed": 5, "correction": 44}
        rec["policy_calls"] = 48
    return rec


def test_count_at_watermark():
    traj = [(10, 1), (500, 2), (900, 3), (4000, 4)]
    assert count_at_watermark(traj, 1000) == 3
    assert count_at_watermark(traj, 9) == 0
    assert count_at_watermark(traj, 10**6) == 4


def test_improvement_ratio_formula():
    assert improvement_ratio(179, 100) == pytest.approx(1.79)
    assert improvement_ratio(5, 5) == 1.0
    assert improvement_ratio(3, 0) is None


def test_compute_r_eff():
    assert compute_r_eff(85, 44, 48) == pytest.approx(41 / 48)
    assert compute_r_eff(10, 10, 5) == 0.0
    with pytest.raises(ValueError):
        compute_r_eff(1, 1, 0)


def test_quartile_assignment_deterministic():
    values = {f"i{k}": k for k in range(8)}
    groups = assign_quartiles(values)
    assert [groups[f"i{k}"] for k in range(8)] == [1, 1, 2, 2, 3, 3, 4, 4]
    # ties broken by id
    groups = assign_quartiles({"a": 1, "b": 1, "c": 1, "d": 1})
    assert [groups[k] for k in "abcd"] == [1, 2, 3, 4]


def test_compare_runs_ratios_and_exclusion():
    with_recs = [
        _record("a", {1000: 10, 10000: 179}, agented=True),
        _record("b", {1000: 4, 10000: 8}, agented=True),
        _record("c", {}, status="excluded"),
    ]
    without_recs = [
        _record("a", {1000: 10, 10000: 100}),
        _record("b", {1000: 4, 10000: 8}, exhausted=True),
        _record("c", {1000: 1}),
    ]
    metrics = compare_runs(with_recs, without_recs, (1000, 10000))
    assert metrics.excluded == ["c"]
    by_id = {m.instance: m for m in metrics.instances}
    assert by_id["a"].ratios[10000] == pytest.approx(1.79)
    assert by_id["b"].ratios[10000] == 1.0
    assert not by_id["a"].completed
    mean, std, n = metrics.ratio_table()["overall"][10000]
    assert n == 2
    assert mean == pytest.approx((1.79 + 1.0) / 2)


def test_compare_runs_rejects_mismatched_manifests():
    with pytest.raises(ValueError):
        compare_runs([_record("a", {10: 1})], [_record("b", {10: 1})])


def test_r_eff_summary_both_variants_labeled():
    # one instance: plain arm spends 85 extraction checks over 1 set,
    # agent arm spends 44 over 1 set with 48 policy calls
    w = _record("a", {100: 1}, agented=True)
    wo = _record("a", {100: 1})
    w["per_phase"] = {"seed": 1, "correction": 44}
    wo["per_phase"] = {"seed": 1, "shrink": 85}
    metrics = compare_runs([w], [wo], (100,))
    summary = metrics.r_eff_summary()
    assert summary["mean_of_ratios"] == pytest.approx(41 / 48, abs=1e-9)
    assert summary["ratio_of_means"] == pytest.approx(41 / 48, abs=1e-9)
    assert summary["instances"] == 1


def test_emission_formats():
    w = [_record("a", {1000: 2, 10000: 4}, agented=True, exhausted=True)]
    wo = [_record("a", {1000: 1, 10000: 2}, exhausted=True)]
    metrics = compare_runs(w, wo, (1000, 10000))
    table = ratio_table_csv(metrics)
    assert table.startswith("group,1000_checks,10000_checks")
    scat = scatter_csv(metrics)
    assert "a,4,2,yes" in scat
    series = series_csv(w, wo)
    lines = [l for l in series.strip().splitlines()[1:] if l.startswith("a,with_agent")]
    checks = [int(l.split(",")[2]) for l in lines]
    assert checks == sorted(checks)  # monotone x coordinate
