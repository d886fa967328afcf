"""Subset satisfiability oracle: masks, verdicts, check accounting, budgets.

Every budgeted satisfiability check in the system flows through
``SubsetOracle.check``; the ledger is the cost model the enumerators optimize.
Map-solver activity (see enumeration) is deliberately never charged here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .formula import CnfInstance
from .sat import CdclSolver

SATISFIABLE = "satisfiable"
UNSATISFIABLE = "unsatisfiable"


class BudgetExhausted(RuntimeError):
    """Raised by CheckLedger.charge once the check budget is used up."""


@dataclass(frozen=True)
class SubsetMask:
    """Immutable m-bit mask over constraint indices; bit i <=> constraint i in S."""

    width: int
    bits: int = 0

    def __post_init__(self):
        if self.width < 0:
            raise ValueError("width must be nonnegative")
        if not 0 <= self.bits < (1 << self.width):
            raise ValueError("bits outside mask width")

    @classmethod
    def empty(cls, width: int) -> "SubsetMask":
        return cls(width, 0)

    @classmethod
    def full(cls, width: int) -> "SubsetMask":
        return cls(width, (1 << width) - 1)

    @classmethod
    def from_indices(cls, width: int, indices) -> "SubsetMask":
        bits = 0
        for i in indices:
            if not 0 <= i < width:
                raise ValueError(f"index {i} outside width {width}")
            bits |= 1 << i
        return cls(width, bits)

    def _check_width(self, other: "SubsetMask") -> None:
        if self.width != other.width:
            raise ValueError(f"width mismatch: {self.width} vs {other.width}")

    def union(self, other: "SubsetMask") -> "SubsetMask":
        self._check_width(other)
        return SubsetMask(self.width, self.bits | other.bits)

    def intersection(self, other: "SubsetMask") -> "SubsetMask":
        self._check_width(other)
        return SubsetMask(self.width, self.bits & other.bits)

    def difference(self, other: "SubsetMask") -> "SubsetMask":
        self._check_width(other)
        return SubsetMask(self.width, self.bits & ~other.bits)

    def complement(self) -> "SubsetMask":
        return SubsetMask(self.width, ~self.bits & ((1 << self.width) - 1))

    def add(self, index: int) -> "SubsetMask":
        if not 0 <= index < self.width:
            raise ValueError(f"index {index} outside width {self.width}")
        return SubsetMask(self.width, self.bits | (1 << index))

    def remove(self, index: int) -> "SubsetMask":
        if not 0 <= index < self.width:
            raise ValueError(f"index {index} outside width {self.width}")
        return SubsetMask(self.width, self.bits & ~(1 << index))

    def contains(self, index: int) -> bool:
        return bool((self.bits >> index) & 1)

    def issubset(self, other: "SubsetMask") -> bool:
        self._check_width(other)
        return self.bits & ~other.bits == 0

    def popcount(self) -> int:
        return self.bits.bit_count()

    def indices(self) -> list[int]:
        return [i for i in range(self.width) if (self.bits >> i) & 1]

    def __iter__(self):
        return iter(self.indices())

    def __len__(self) -> int:
        return self.popcount()


@dataclass(frozen=True)
class OracleVerdict:
    status: str  # SATISFIABLE | UNSATISFIABLE
    model: tuple[bool, ...] | None = None  # 1-indexed (slot 0 padding), present iff satisfiable


@dataclass
class CheckLedger:
    """Counts oracle checks, split by phase, against an optional budget."""

    budget: int | None = None
    total_checks: int = 0
    per_phase: dict[str, int] = field(default_factory=dict)

    def charge(self, phase: str) -> None:
        if self.budget is not None and self.total_checks >= self.budget:
            raise BudgetExhausted(f"check budget {self.budget} exhausted")
        self.total_checks += 1
        self.per_phase[phase] = self.per_phase.get(phase, 0) + 1

    def remaining(self) -> int | None:
        if self.budget is None:
            return None
        return self.budget - self.total_checks


class SubsetOracle:
    """Incremental satisfiability oracle for subsets of one instance's clauses.

    Clause i is guarded by a fresh selector variable s_i as (~s_i | clause_i);
    a subset query assumes the selected s_i true. Learned clauses persist
    across queries.
    """

    def __init__(self, inst: CnfInstance):
        self.inst = inst
        self.solver = CdclSolver(inst.num_vars, default_phase=False, phase_saving=True)
        self.selectors = [self.solver.new_var() for _ in range(inst.num_clauses)]
        for sel, clause in zip(self.selectors, inst.clauses):
            self.solver.add_clause([-sel, *clause])

    def _solve(self, subset: SubsetMask) -> OracleVerdict:
        if subset.width != self.inst.num_clauses:
            raise ValueError(
                f"mask width {subset.width} != clause count {self.inst.num_clauses}"
            )
        assumptions = [self.selectors[i] for i in subset.indices()]
        if self.solver.solve(assumptions):
            model = tuple(self.solver.model[: self.inst.num_vars + 1])
            self._verify_model(subset, model)
            return OracleVerdict(SATISFIABLE, model)
        return OracleVerdict(UNSATISFIABLE, None)

    def _verify_model(self, subset: SubsetMask, model: tuple[bool, ...]) -> None:
        for i in subset.indices():
            clause = self.inst.clauses[i]
            if not any(model[l] if l > 0 else not model[-l] for l in clause):
                raise AssertionError(f"oracle model does not satisfy clause {i}")

    def check(self, subset: SubsetMask, ledger: CheckLedger, phase: str) -> OracleVerdict:
        ledger.charge(phase)
        return self._solve(subset)

    def check_unbudgeted(self, subset: SubsetMask) -> OracleVerdict:
        return self._solve(subset)


def check(inst: CnfInstance, subset: SubsetMask, ledger: CheckLedger, phase: str) -> OracleVerdict:
    """One-shot budgeted check; engine code should hold a SubsetOracle instead."""
    return SubsetOracle(inst).check(subset, ledger, phase)


def check_unbudgeted(inst: CnfInstance, subset: SubsetMask | None = None) -> OracleVerdict:
    """One-shot unbudgeted check of a subset (default: the whole instance)."""
    if subset is None:
        subset = SubsetMask.full(inst.num_clauses)
    return SubsetOracle(inst).check_unbudgeted(subset)
