"""Baseline policies, the external-agent protocol, and episode recording."""

import json
import random
import sys
from pathlib import Path

import pytest

from muskit.agentlink import (
    FINISH,
    ActRequest,
    EpisodeRecord,
    EpisodeRecorder,
    ExternalPolicy,
    PolicyDecision,
    policy_frequency_heuristic,
    policy_immediate_finish,
    policy_random,
    read_episode_log,
)
from muskit.enumeration import run_marco
from muskit.extraction import compute_reward
from muskit.oracle import SubsetMask

AGENT = str(Path(__file__).parent / "scripted_agent.py")


def _agent_cmd(behaviour: str) -> str:
    return f"{sys.executable} {AGENT} {behaviour}"


def _req(op="shrink", mus=(), mcs=(), subset=(0, 1, 2), candidates=(0, 1, 2)):
    return ActRequest(
        op=op,
        num_constraints=4,
        mus=tuple(tuple(e) for e in mus),
        mcs=tuple(tuple(e) for e in mcs),
        subset=tuple(subset),
        candidates=tuple(candidates),
    )


# ------------------------------------------------------------------- policies


def test_immediate_finish_always():
    assert policy_immediate_finish(_req()).action == FINISH
    assert policy_immediate_finish(_req(candidates=())).action == FINISH


def test_random_policy():
    rng = random.Random(1)
    assert policy_random(_req(), rng, p_finish=1.0).action == FINISH
    assert policy_random(_req(candidates=()), rng, 0.5).action == FINISH
    seen = {policy_random(_req(), rng, 0.3).action for _ in range(200)}
    assert FINISH in seen
    assert seen - {FINISH} <= {0, 1, 2}
    with pytest.raises(ValueError):
        policy_random(_req(), rng, 0.0)


def test_frequency_heuristic():
    # no evidence: finish immediately
    assert policy_frequency_heuristic(_req()).action == FINISH
    # c3 appears in zero MUS edges: delete it
    req = _req(mus=[(0, 1)], candidates=(0, 1, 2))
    assert policy_frequency_heuristic(req).action == 2
    assert policy_frequency_heuristic(req).action == 2  # deterministic
    # all candidates covered: finish
    req = _req(mus=[(0, 1), (2,)], candidates=(0, 1, 2))
    assert policy_frequency_heuristic(req).action == FINISH
    # grow side uses MCS edges
    req = _req(op="grow", mcs=[(1,)], subset=(0,), candidates=(1, 2))
    assert policy_frequency_heuristic(req).action == 2


# ------------------------------------------------------------------- protocol


def test_external_agent_round_trip():
    policy = ExternalPolicy(_agent_cmd("first"), num_constraints=4, timeout=10)
    try:
        assert not policy.degraded
        dec = policy.decide(_req(candidates=(1, 3)))
        assert dec.action == 1
        assert dec.log_prob == pytest.approx(-0.5)
        assert dec.value_estimate == pytest.approx(0.25)
    finally:
        policy.close()
    assert policy.proc.poll() is not None


@pytest.mark.parametrize("behaviour", ["bad-version", "garbage"])
def test_external_agent_degrades(behaviour):
    policy = ExternalPolicy(_agent_cmd(behaviour), num_constraints=4, timeout=5)
    try:
        dec = policy.decide(_req())
        assert dec.action == FINISH
        assert policy.degraded
        # stays degraded and keeps answering finish
        assert policy.decide(_req()).action == FINISH
    finally:
        policy.close()


def test_external_agent_timeout_degrades():
    policy = ExternalPolicy(_agent_cmd("hang"), num_constraints=4, timeout=0.2)
    try:
        assert policy.decide(_req()).action == FINISH
        assert policy.degraded
    finally:
        policy.close()


def test_membership_violation_is_not_transport_degradation(toy_instance):
    # a live agent returning an out-of-candidates index aborts episodes via
    # the finish path but the run still completes and enumerates everything
    policy = ExternalPolicy(_agent_cmd("bad-action"), num_constraints=3, timeout=10)
    try:
        result = run_marco(toy_instance, policy=policy)
    finally:
        policy.close()
    assert result.exhausted
    assert {m.bits for m in result.muses} == {0b011}
    assert {m.bits for m in result.msses} == {0b101, 0b110}


def test_delta_mode_equivalent_to_full(toy_instance):
    full_policy = ExternalPolicy(_agent_cmd("first"), num_constraints=3, timeout=10)
    try:
        res_full = run_marco(toy_instance, policy=full_policy)
    finally:
        full_policy.close()
    delta_policy = ExternalPolicy(_agent_cmd("delta"), num_constraints=3, timeout=10)
    assert delta_policy.delta
    try:
        res_delta = run_marco(toy_instance, policy=delta_policy)
    finally:
        delta_policy.close()
    assert [m.bits for m in res_full.muses] == [m.bits for m in res_delta.muses]
    assert [m.bits for m in res_full.msses] == [m.bits for m in res_delta.msses]
    assert res_full.ledger.total_checks == res_delta.ledger.total_checks


# ------------------------------------------------------------------ recording


def test_episode_record_round_trip():
    rec = EpisodeRecord(
        instance="sr_0001",
        op="shrink",
        watermark=(2, 1),
        initial=(0, 1, 2),
        decisions=(PolicyDecision(2, -0.1, 0.4), PolicyDecision(FINISH, -0.9, 0.2)),
        reward=2 / 3,
        n_correction=3,
        result=(0, 1),
    )
    assert EpisodeRecord.from_json(rec.to_json()) == rec


def test_recorder_and_reward_invariant(tmp_path, toy_instance):
    log_path = tmp_path / "episodes.jsonl"
    recorder = EpisodeRecorder(str(log_path))
    policy = ExternalPolicy(_agent_cmd("finish"), num_constraints=3, timeout=10)
    try:
        run_marco(toy_instance, policy=policy, recorder=recorder, instance_id="toy")
    finally:
        policy.close()
        recorder.close()
    records = read_episode_log(str(log_path))
    assert len(records) == 3  # one MUS + two MSS episodes
    shrink_records = [r for r in records if r.op == "shrink"]
    assert shrink_records[0].n_correction == 3
    assert shrink_records[0].reward == pytest.approx(1 - (3 - 2) / 3)
    for rec in records:
        s0 = SubsetMask.from_indices(3, rec.initial)
        kind = "mus" if rec.op == "shrink" else "mss"
        size = len(rec.result) if kind == "mus" else 3 - len(rec.result)
        assert compute_reward(kind, rec.n_correction, size, s0) == rec.reward


def test_golden_episode_transcript(tmp_path, toy_instance):
    """A scripted agent must reproduce the frozen episode log byte-exactly."""
    log_path = tmp_path / "episodes.jsonl"
    recorder = EpisodeRecorder(str(log_path))
    policy = ExternalPolicy(_agent_cmd("drop-last"), num_constraints=3, timeout=10)
    try:
        run_marco(toy_instance, policy=policy, recorder=recorder, instance_id="toy")
    finally:
        policy.close()
        recorder.close()
    golden = (Path(__file__).parent / "data" / "golden_episodes.jsonl").read_text()
    assert log_path.read_text() == golden


def test_recorder_storage_failure_does_not_abort(tmp_path, toy_instance):
    recorder = EpisodeRecorder(str(tmp_path))  # a directory: open() fails
    assert recorder.failed
    policy = ExternalPolicy(_agent_cmd("finish"), num_constraints=3, timeout=10)
    try:
        result = run_marco(toy_instance, policy=policy, recorder=recorder, instance_id="toy")
    finally:
        policy.close()
        recorder.close()
    assert result.exhausted
    assert {m.bits for m in result.muses} == {0b011}
