"""Oracle semantics, ledger accounting, and budget behaviour."""

import random

import pytest

from muskit.bruteforce import TruthTable
from muskit.formula import CnfInstance
from muskit.oracle import (
    SATISFIABLE,
    UNSATISFIABLE,
    BudgetExhausted,
    CheckLedger,
    SubsetMask,
    SubsetOracle,
    check_unbudgeted,
)

from conftest import random_instance


def test_toy_verdicts(toy_instance):
    oracle = SubsetOracle(toy_instance)
    ledger = CheckLedger()
    both = SubsetMask.from_indices(3, [0, 1])
    assert oracle.check(both, ledger, "seed").status == UNSATISFIABLE
    v = oracle.check(SubsetMask.from_indices(3, [0]), ledger, "seed")
    assert v.status == SATISFIABLE
    assert v.model[1] is True
    assert ledger.total_checks == 2


def test_empty_subset_satisfiable(toy_instance):
    assert check_unbudgeted(toy_instance, SubsetMask.empty(3)).status == SATISFIABLE


def test_agreement_with_truth_table_all_subsets():
    rng = random.Random(5)
    for _ in range(50):
        inst = random_instance(rng, max_vars=8, max_clauses=10)
        table = TruthTable(inst)
        oracle = SubsetOracle(inst)
        m = inst.num_clauses
        for bits in range(1 << m):
            subset = SubsetMask(m, bits)
            want = SATISFIABLE if table.satisfiable(subset) else UNSATISFIABLE
            assert oracle.check_unbudgeted(subset).status == want


def test_monotonicity_on_chains():
    rng = random.Random(9)
    for _ in range(30):
        inst = random_instance(rng, max_vars=6, max_clauses=10)
        oracle = SubsetOracle(inst)
        m = inst.num_clauses
        order = list(range(m))
        rng.shuffle(order)
        mask = SubsetMask.empty(m)
        seen_unsat = False
        for i in order:
            mask = mask.add(i)
            status = oracle.check_unbudgeted(mask).status
            if seen_unsat:
                assert status == UNSATISFIABLE  # supersets of unsat stay unsat
            seen_unsat = seen_unsat or status == UNSATISFIABLE


def test_ledger_counts_and_phases(toy_instance):
    oracle = SubsetOracle(toy_instance)
    ledger = CheckLedger()
    full = SubsetMask.full(3)
    for _ in range(3):
        oracle.check(full, ledger, "seed")
    oracle.check(full, ledger, "shrink")
    assert ledger.total_checks == 4
    assert ledger.per_phase == {"seed": 3, "shrink": 1}
    assert sum(ledger.per_phase.values()) == ledger.total_checks


def test_budget_exhaustion(toy_instance):
    oracle = SubsetOracle(toy_instance)
    ledger = CheckLedger(budget=2)
    full = SubsetMask.full(3)
    oracle.check(full, ledger, "seed")
    oracle.check(full, ledger, "seed")
    with pytest.raises(BudgetExhausted):
        oracle.check(full, ledger, "seed")
    assert ledger.total_checks == 2


def test_zero_budget(toy_instance):
    oracle = SubsetOracle(toy_instance)
    ledger = CheckLedger(budget=0)
    with pytest.raises(BudgetExhausted):
        oracle.check(SubsetMask.full(3), ledger, "seed")


def test_unbudgeted_matches_budgeted(toy_instance):
    oracle = SubsetOracle(toy_instance)
    ledger = CheckLedger()
    for bits in range(8):
        mask = SubsetMask(3, bits)
        assert oracle.check(mask, ledger, "seed").status == oracle.check_unbudgeted(mask).status


def test_ledger_equals_spy_count():
    """A run's reported check count equals the number of check() invocations."""
    from muskit.enumeration import run_marco

    class SpyOracle:
        def __init__(self, oracle):
            self.oracle = oracle
            self.inst = oracle.inst
            self.calls = 0

        def check(self, subset, ledger, phase):
            self.calls += 1
            return self.oracle.check(subset, ledger, phase)

        def check_unbudgeted(self, subset):
            return self.oracle.check_unbudgeted(subset)

    rng = random.Random(15)
    for _ in range(5):
        inst = random_instance(rng, max_vars=4, max_clauses=7)
        oracle = SubsetOracle(inst)
        if oracle.check_unbudgeted(SubsetMask.full(inst.num_clauses)).status != UNSATISFIABLE:
            continue
        from muskit.enumeration import _EnumerationRun, EnumeratorConfig

        run = _EnumerationRun(inst, EnumeratorConfig(), None, None, None, "", "greedy", None, None)
        spy = SpyOracle(run.oracle)
        run.oracle = spy
        result = run.run_marco()
        assert result.ledger.total_checks == spy.calls


def test_mask_algebra():
    a = SubsetMask.from_indices(5, [0, 2, 4])
    b = SubsetMask.from_indices(5, [1, 2])
    assert a.union(b).indices() == [0, 1, 2, 4]
    assert a.intersection(b).indices() == [2]
    assert a.difference(b).indices() == [0, 4]
    assert a.complement().indices() == [1, 3]
    assert a.popcount() == 3
    assert a.contains(0) and not a.contains(1)
    assert a.remove(0).indices() == [2, 4]
    assert b.add(0).indices() == [0, 1, 2]
    assert SubsetMask.from_indices(5, [2]).issubset(a)
    with pytest.raises(ValueError):
        a.union(SubsetMask.full(4))
