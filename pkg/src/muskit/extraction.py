"""Shrink/grow extraction: the standard deletion-based algorithms, the
agent-guided variants with their correction procedures, and the episode
reward.

Check-counting convention: N_correction excludes the single classification
check at the top of each correction procedure (that check is still charged
to the ledger under phase "correction"). Under this convention the agent
path satisfies |MUS| <= N_correction <= 2|S_0| for shrink and
|C\\MSS| <= N_correction <= 2|C\\S_0| for grow.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .agentlink import FINISH, ActRequest, Policy, PolicyDecision
from .musgraph import ExplorationGraph
from .oracle import UNSATISFIABLE, CheckLedger, SubsetMask, SubsetOracle

log = logging.getLogger("muskit.extraction")


class ContractError(RuntimeError):
    """A caller violated an extraction precondition."""


@dataclass(frozen=True)
class ExtractionResult:
    """Outcome of one agent-guided extraction episode."""

    kind: str  # "mus" | "mss"
    subset: SubsetMask
    checks_correction: int  # N_correction (classification excluded)
    checks_total: int  # all ledger charges during the episode
    actions: tuple[PolicyDecision, ...]
    reward: float


def shrink_standard(
    oracle: SubsetOracle, subset: SubsetMask, ledger: CheckLedger, phase: str = "shrink"
) -> SubsetMask:
    """Deletion-based reduction of an unsatisfiable subset to an MUS.

    Probes constraints in ascending index order; performs exactly |subset|
    oracle checks. The input must be unsatisfiable.
    """
    current = subset
    for i in subset.indices():
        trial = current.remove(i)
        if oracle.check(trial, ledger, phase).status == UNSATISFIABLE:
            current = trial
    return current


def grow_standard(
    oracle: SubsetOracle, subset: SubsetMask, ledger: CheckLedger, phase: str = "grow"
) -> SubsetMask:
    """Addition-based extension of a satisfiable subset to an MSS.

    Probes complement constraints in ascending index order; performs exactly
    |C\\subset| oracle checks. The input must be satisfiable.
    """
    current = subset
    for i in subset.complement().indices():
        trial = current.add(i)
        if oracle.check(trial, ledger, phase).status != UNSATISFIABLE:
            current = trial
    return current


def correct_shrink(
    oracle: SubsetOracle, s_out: SubsetMask, deleted: list[int], ledger: CheckLedger
) -> tuple[SubsetMask, int]:
    """Repair an agent's tentative shrink output into a valid MUS.

    If s_out is satisfiable, re-adds deleted constraints in reverse deletion
    order (one check per restore) until unsatisfiability returns, then runs
    the standard shrink. Returns (mus, N_correction).
    """
    n_correction = 0
    verdict = oracle.check(s_out, ledger, "correction")  # classification, excluded
    current = s_out
    restore = list(deleted)
    if verdict.status != UNSATISFIABLE:
        while True:
            if not restore:
                raise ContractError("deletion list exhausted while still satisfiable")
            current = current.add(restore.pop())
            n_correction += 1
            if oracle.check(current, ledger, "correction").status == UNSATISFIABLE:
                break
    n_correction += current.popcount()
    mus = shrink_standard(oracle, current, ledger, phase="correction")
    return mus, n_correction


def correct_grow(
    oracle: SubsetOracle, s_out: SubsetMask, added: list[int], ledger: CheckLedger
) -> tuple[SubsetMask, int]:
    """Repair an agent's tentative grow output into a valid MSS.

    Mirror of correct_shrink: removes added constraints in reverse addition
    order until satisfiability returns, then runs the standard grow.
    Returns (mss, N_correction).
    """
    n_correction = 0
    verdict = oracle.check(s_out, ledger, "correction")  # classification, excluded
    current = s_out
    undo = list(added)
    if verdict.status == UNSATISFIABLE:
        while True:
            if not undo:
                raise ContractError("addition list exhausted while still unsatisfiable")
            current = current.remove(undo.pop())
            n_correction += 1
            if oracle.check(current, ledger, "correction").status != UNSATISFIABLE:
                break
    n_correction += current.complement().popcount()
    mss = grow_standard(oracle, current, ledger, phase="correction")
    return mss, n_correction


def compute_reward(kind: str, n_correction: int, result_size: int, s0: SubsetMask) -> float:
    """Episode reward: 1 minus the fraction of avoidable correction checks.

    shrink: 1 - (N_correction - |MUS|) / |S_0|
    grow:   1 - (N_correction - |C\\MSS|) / |C\\S_0|
    Zero denominators yield 1.0.
    """
    if kind == "mus":
        denom = s0.popcount()
    elif kind == "mss":
        denom = s0.width - s0.popcount()
    else:
        raise ValueError(f"unknown result kind {kind!r}")
    if denom == 0:
        return 1.0
    return 1.0 - (n_correction - result_size) / denom


def _run_agent_loop(
    op: str,
    oracle: SubsetOracle,
    s0: SubsetMask,
    graph: ExplorationGraph,
    policy: Policy,
    mode: str,
) -> tuple[SubsetMask, list[int], list[PolicyDecision]]:
    """Sample actions until finish; performs zero oracle checks.

    The episode necessarily terminates: each action shrinks the candidate
    set by one, and an empty candidate set forces finish. Out-of-candidate
    actions are protocol violations and abort the episode via the
    immediate-finish path.
    """
    incidence = graph.export_incidence()
    current = s0
    touched: list[int] = []
    decisions: list[PolicyDecision] = []
    while True:
        if op == "shrink":
            candidates = tuple(current.indices())
        else:
            candidates = tuple(current.complement().indices())
        req = ActRequest(
            op=op,
            num_constraints=oracle.inst.num_clauses,
            mus=incidence.mus,
            mcs=incidence.mcs,
            subset=tuple(current.indices()),
            candidates=candidates,
            mode=mode,
        )
        decision = policy.decide(req)
        if not decision.is_finish() and decision.action not in candidates:
            log.warning(
                "policy violated candidate membership (%r not in %d candidates); finishing episode",
                decision.action,
                len(candidates),
            )
            decision = PolicyDecision(FINISH)
        decisions.append(decision)
        if decision.is_finish():
            return current, touched, decisions
        idx = decision.action
        current = current.remove(idx) if op == "shrink" else current.add(idx)
        touched.append(idx)


def shrink_with_agent(
    oracle: SubsetOracle,
    s0: SubsetMask,
    graph: ExplorationGraph,
    policy: Policy,
    ledger: CheckLedger,
    mode: str = "greedy",
) -> ExtractionResult:
    """Agent-guided shrink: policy proposes deletions, correction repairs."""
    checks_before = ledger.total_checks
    s_out, deleted, decisions = _run_agent_loop("shrink", oracle, s0, graph, policy, mode)
    assert ledger.total_checks == checks_before, "agent loop must not touch the oracle"
    mus, n_correction = correct_shrink(oracle, s_out, deleted, ledger)
    reward = compute_reward("mus", n_correction, mus.popcount(), s0)
    return ExtractionResult(
        kind="mus",
        subset=mus,
        checks_correction=n_correction,
        checks_total=ledger.total_checks - checks_before,
        actions=tuple(decisions),
        reward=reward,
    )


def grow_with_agent(
    oracle: SubsetOracle,
    s0: SubsetMask,
    graph: ExplorationGraph,
    policy: Policy,
    ledger: CheckLedger,
    mode: str = "greedy",
) -> ExtractionResult:
    """Agent-guided grow: policy proposes additions, correction repairs."""
    checks_before = ledger.total_checks
    s_out, added, decisions = _run_agent_loop("grow", oracle, s0, graph, policy, mode)
    assert ledger.total_checks == checks_before, "agent loop must not touch the oracle"
    mss, n_correction = correct_grow(oracle, s_out, added, ledger)
    reward = compute_reward("mss", n_correction, mss.complement().popcount(), s0)
    return ExtractionResult(
        kind="mss",
        subset=mss,
        checks_correction=n_correction,
        checks_total=ledger.total_checks - checks_before,
        actions=tuple(decisions),
        reward=reward,
    )


def verify_mus(oracle: SubsetOracle, mask: SubsetMask) -> bool:
    """Definitional MUS check via unbudgeted oracle calls (|M|+1 checks)."""
    if oracle.check_unbudgeted(mask).status != UNSATISFIABLE:
        return False
    for i in mask.indices():
        if oracle.check_unbudgeted(mask.remove(i)).status == UNSATISFIABLE:
            return False
    return True


def verify_mss(oracle: SubsetOracle, mask: SubsetMask) -> bool:
    """Definitional MSS check via unbudgeted oracle calls (|C\\M|+1 checks)."""
    if oracle.check_unbudgeted(mask).status == UNSATISFIABLE:
        return False
    for i in mask.complement().indices():
        if oracle.check_unbudgeted(mask.add(i)).status != UNSATISFIABLE:
            return False
    return True
