"""Online MUS/MSS enumeration drivers (MARCO, TOME, ReMUS) over a
selector-variable map of the explored power set.

The map solver is a second instance of the CDCL engine over selector
variables only; its solves are never charged to the check ledger. All three
drivers share blocking, recording, and extraction plumbing, and accept an
optional policy that replaces the standard shrink/grow with the agent path.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from random import Random

from .agentlink import EpisodeRecord, EpisodeRecorder, EpisodeSummary, Policy
from .extraction import (
    grow_standard,
    grow_with_agent,
    shrink_standard,
    shrink_with_agent,
)
from .formula import CnfInstance
from .musgraph import ExplorationGraph
from .oracle import (
    UNSATISFIABLE,
    BudgetExhausted,
    CheckLedger,
    SubsetMask,
    SubsetOracle,
)
from .sat import CdclSolver

MAXIMAL = "maximal"
MINIMAL = "minimal"
DEFAULT = "default"


class TimeLimitExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class EnumeratorConfig:
    algo: str = "marco"  # "marco" | "tome" | "remus"
    seed_polarity: str = MAXIMAL
    remus_reduction: float = 0.9
    rng_seed: int = 0

    def __post_init__(self):
        if self.algo not in ("marco", "tome", "remus"):
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.seed_polarity not in (MAXIMAL, MINIMAL, DEFAULT):
            raise ValueError(f"unknown seed polarity {self.seed_polarity!r}")
        if not 0.0 < self.remus_reduction < 1.0:
            raise ValueError("remus_reduction must lie in (0, 1)")


class PowerSetMap:
    """Tracks the unexplored region of the power set via blocking clauses.

    A mask is unexplored iff it satisfies every blocking clause. Solves here
    are map-solver work and never touch the check ledger.
    """

    def __init__(self, num_selectors: int):
        self.num_selectors = num_selectors
        self.solver = CdclSolver(num_selectors, default_phase=True, phase_saving=False)
        self.blocking_clauses: list[list[int]] = []

    def _model_mask(self) -> SubsetMask:
        model = self.solver.model
        bits = 0
        for i in range(self.num_selectors):
            if model[i + 1]:
                bits |= 1 << i
        return SubsetMask(self.num_selectors, bits)

    def _scope_assumptions(self, scope: SubsetMask | None) -> list[int]:
        if scope is None:
            return []
        return [-(i + 1) for i in scope.complement().indices()]

    def next_seed(self, polarity: str = MAXIMAL, scope: SubsetMask | None = None) -> SubsetMask | None:
        """Next unexplored mask, or None when the map is exhausted.

        polarity=maximal returns a mask maximal among unexplored masks
        (within scope, if given); minimal is symmetric; default returns the
        first model found under true-biased decision phases.
        """
        base = self._scope_assumptions(scope)
        self.solver.set_phases(polarity != MINIMAL)
        if not self.solver.solve(base):
            return None
        seed = self._model_mask()
        if polarity == MAXIMAL:
            seed = self._extend(seed, base, scope)
        elif polarity == MINIMAL:
            seed = self._reduce(seed, base)
        return seed

    def _extend(self, seed: SubsetMask, base: list[int], scope: SubsetMask | None) -> SubsetMask:
        # grow to a maximal unexplored mask: repeatedly ask for a strict
        # superset (within scope) using a disposable relay variable
        while True:
            room = seed.complement() if scope is None else scope.difference(seed)
            if room.popcount() == 0:
                return seed
            relay = self.solver.new_var()
            self.solver.add_clause([-relay] + [i + 1 for i in room.indices()])
            assumptions = base + [relay] + [i + 1 for i in seed.indices()]
            if self.solver.solve(assumptions):
                seed = self._model_mask()
                self.solver.add_clause([-relay])
            else:
                self.solver.add_clause([-relay])
                return seed

    def _reduce(self, seed: SubsetMask, base: list[int]) -> SubsetMask:
        while True:
            if seed.popcount() == 0:
                return seed
            relay = self.solver.new_var()
            self.solver.add_clause([-relay] + [-(i + 1) for i in seed.indices()])
            assumptions = base + [relay] + [-(i + 1) for i in seed.complement().indices()]
            if self.solver.solve(assumptions):
                seed = self._model_mask()
                self.solver.add_clause([-relay])
            else:
                self.solver.add_clause([-relay])
                return seed

    def block_mus(self, mask: SubsetMask) -> None:
        """Remove all supersets of a found MUS from the unexplored region."""
        clause = [-(i + 1) for i in mask.indices()]
        self.blocking_clauses.append(clause)
        self.solver.add_clause(clause)

    def block_mss(self, mask: SubsetMask) -> None:
        """Remove all subsets of a found MSS from the unexplored region."""
        clause = [i + 1 for i in mask.complement().indices()]
        self.blocking_clauses.append(clause)
        self.solver.add_clause(clause)

    def is_unexplored(self, mask: SubsetMask) -> bool:
        for clause in self.blocking_clauses:
            if not any(
                mask.contains(lit - 1) if lit > 0 else not mask.contains(-lit - 1)
                for lit in clause
            ):
                return False
        return True


@dataclass
class RunResult:
    muses: list[SubsetMask]
    msses: list[SubsetMask]
    graph: ExplorationGraph
    ledger: CheckLedger
    trajectory: list[tuple[int, int]] = field(default_factory=list)
    exhausted: bool = False
    policy_calls: int = 0

    @property
    def num_sets(self) -> int:
        return len(self.muses) + len(self.msses)


class _EnumerationRun:
    def __init__(
        self,
        inst: CnfInstance,
        cfg: EnumeratorConfig,
        policy: Policy | None,
        budget: int | None,
        recorder: EpisodeRecorder | None,
        instance_id: str,
        mode: str,
        deadline: float | None,
        rng: Random | None,
    ):
        self.inst = inst
        self.cfg = cfg
        self.policy = policy
        self.recorder = recorder
        self.instance_id = instance_id
        self.mode = mode
        self.deadline = deadline
        self.rng = rng if rng is not None else Random(cfg.rng_seed)
        self.oracle = SubsetOracle(inst)
        self.ledger = CheckLedger(budget=budget)
        self.map = PowerSetMap(inst.num_clauses)
        self.graph = ExplorationGraph(inst.num_clauses)
        self.result = RunResult(
            muses=[], msses=[], graph=self.graph, ledger=self.ledger
        )

    def _check_deadline(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise TimeLimitExceeded(f"instance {self.instance_id or '<anon>'}")

    def _record_progress(self) -> None:
        self.result.trajectory.append((self.ledger.total_checks, self.result.num_sets))

    def _finish_episode(self, op: str, watermark, seed: SubsetMask, res) -> None:
        self.result.policy_calls += len(res.actions)
        summary = EpisodeSummary(
            op=op,
            reward=res.reward,
            n_correction=res.checks_correction,
            result=tuple(res.subset.indices()),
        )
        self.policy.notify_reward(summary)
        if self.recorder is not None:
            self.recorder.append(
                EpisodeRecord(
                    instance=self.instance_id,
                    op=op,
                    watermark=watermark,
                    initial=tuple(seed.indices()),
                    decisions=res.actions,
                    reward=res.reward,
                    n_correction=res.checks_correction,
                    result=tuple(res.subset.indices()),
                )
            )

    def handle_unsat_seed(self, seed: SubsetMask) -> SubsetMask:
        if self.policy is None:
            mus = shrink_standard(self.oracle, seed, self.ledger)
        else:
            watermark = self.graph.watermark()
            res = shrink_with_agent(
                self.oracle, seed, self.graph, self.policy, self.ledger, mode=self.mode
            )
            mus = res.subset
            self._finish_episode("shrink", watermark, seed, res)
        self.graph.record_mus(mus)
        self.map.block_mus(mus)
        self.result.muses.append(mus)
        self._record_progress()
        return mus

    def handle_sat_seed(self, seed: SubsetMask) -> SubsetMask:
        if self.policy is None:
            mss = grow_standard(self.oracle, seed, self.ledger)
        else:
            watermark = self.graph.watermark()
            res = grow_with_agent(
                self.oracle, seed, self.graph, self.policy, self.ledger, mode=self.mode
            )
            mss = res.subset
            self._finish_episode("grow", watermark, seed, res)
        self.graph.record_mss(mss)
        self.map.block_mss(mss)
        self.result.msses.append(mss)
        self._record_progress()
        return mss

    # ------------------------------------------------------------------ MARCO

    def run_marco(self) -> RunResult:
        try:
            while True:
                self._check_deadline()
                seed = self.map.next_seed(self.cfg.seed_polarity)
                if seed is None:
                    self.result.exhausted = True
                    break
                verdict = self.oracle.check(seed, self.ledger, "seed")
                if verdict.status == UNSATISFIABLE:
                    self.handle_unsat_seed(seed)
                else:
                    self.handle_sat_seed(seed)
        except BudgetExhausted:
            pass
        return self.result

    # ------------------------------------------------------------------- TOME

    def run_tome(self) -> RunResult:
        """Chain-based enumeration: binary-search the sat/unsat boundary of a
        random chain between a minimal and a maximal unexplored mask, then
        shrink the smallest unsat element and grow the largest sat element."""
        try:
            while True:
                self._check_deadline()
                top = self.map.next_seed(MAXIMAL)
                if top is None:
                    self.result.exhausted = True
                    break
                bottom = self.map.next_seed(MINIMAL, scope=top)
                assert bottom is not None and bottom.issubset(top)
                extra = top.difference(bottom).indices()
                self.rng.shuffle(extra)
                if self.oracle.check(bottom, self.ledger, "seed").status == UNSATISFIABLE:
                    self.handle_unsat_seed(bottom)
                    continue
                if not extra:
                    self.handle_sat_seed(bottom)
                    continue
                if self.oracle.check(top, self.ledger, "seed").status != UNSATISFIABLE:
                    self.handle_sat_seed(top)
                    continue
                # invariant: chain[lo] sat, chain[hi] unsat
                lo, hi = 0, len(extra)
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    probe = SubsetMask.from_indices(
                        top.width, bottom.indices() + extra[:mid]
                    )
                    if self.oracle.check(probe, self.ledger, "seed").status == UNSATISFIABLE:
                        hi = mid
                    else:
                        lo = mid
                first_unsat = SubsetMask.from_indices(top.width, bottom.indices() + extra[:hi])
                last_sat = SubsetMask.from_indices(top.width, bottom.indices() + extra[:lo])
                self.handle_unsat_seed(first_unsat)
                self.handle_sat_seed(last_sat)
        except BudgetExhausted:
            pass
        return self.result

    # ------------------------------------------------------------------ ReMUS

    def run_remus(self) -> RunResult:
        """MARCO-style loop that recurses into a reduced universe around each
        found MUS, hunting for further MUSes before returning. Blocking is
        global, so recursion never repeats a result."""
        try:
            self._remus_scope(None, 0)
            self.result.exhausted = True
        except BudgetExhausted:
            pass
        return self.result

    def _remus_scope(self, scope: SubsetMask | None, depth: int) -> None:
        while True:
            self._check_deadline()
            seed = self.map.next_seed(MAXIMAL, scope=scope)
            if seed is None:
                return
            verdict = self.oracle.check(seed, self.ledger, "seed")
            if verdict.status == UNSATISFIABLE:
                mus = self.handle_unsat_seed(seed)
                sub = self._reduced_scope(seed, mus)
                if sub is not None and depth < self.inst.num_clauses:
                    self._remus_scope(sub, depth + 1)
            else:
                self.handle_sat_seed(seed)

    def _reduced_scope(self, seed: SubsetMask, mus: SubsetMask) -> SubsetMask | None:
        target = math.floor(self.cfg.remus_reduction * seed.popcount())
        extra = target - mus.popcount()
        pool = seed.difference(mus).indices()
        if extra < 1 or not pool:
            return None
        extra = min(extra, len(pool))
        chosen = self.rng.sample(pool, extra)
        scope = mus.union(SubsetMask.from_indices(seed.width, chosen))
        if scope.popcount() >= seed.popcount():
            return None
        return scope


def _make_run(inst, cfg, policy, budget, recorder, instance_id, mode, deadline, rng):
    if cfg is None:
        cfg = EnumeratorConfig()
    return _EnumerationRun(inst, cfg, policy, budget, recorder, instance_id, mode, deadline, rng)


def run_marco(
    inst: CnfInstance,
    cfg: EnumeratorConfig | None = None,
    policy: Policy | None = None,
    budget: int | None = None,
    *,
    recorder: EpisodeRecorder | None = None,
    instance_id: str = "",
    mode: str = "greedy",
    deadline: float | None = None,
    rng: Random | None = None,
) -> RunResult:
    return _make_run(inst, cfg, policy, budget, recorder, instance_id, mode, deadline, rng).run_marco()


def run_tome(
    inst: CnfInstance,
    cfg: EnumeratorConfig | None = None,
    policy: Policy | None = None,
    budget: int | None = None,
    *,
    recorder: EpisodeRecorder | None = None,
    instance_id: str = "",
    mode: str = "greedy",
    deadline: float | None = None,
    rng: Random | None = None,
) -> RunResult:
    return _make_run(inst, cfg, policy, budget, recorder, instance_id, mode, deadline, rng).run_tome()


def run_remus(
    inst: CnfInstance,
    cfg: EnumeratorConfig | None = None,
    policy: Policy | None = None,
    budget: int | None = None,
    *,
    recorder: EpisodeRecorder | None = None,
    instance_id: str = "",
    mode: str = "greedy",
    deadline: float | None = None,
    rng: Random | None = None,
) -> RunResult:
    return _make_run(inst, cfg, policy, budget, recorder, instance_id, mode, deadline, rng).run_remus()


RUNNERS = {"marco": run_marco, "tome": run_tome, "remus": run_remus}
