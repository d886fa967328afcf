"""A small incremental CDCL solver with assumption-based solving.

Clauses are plain literal lists whose first two positions are the watched
literals. Learned clauses persist across solve() calls: they are implied by
the clause database alone (assumptions only ever enter conflict analysis as
decision literals), so they stay valid for every future assumption set.
"""

from __future__ import annotations


class CdclSolver:
    def __init__(self, num_vars: int = 0, default_phase: bool = False, phase_saving: bool = True):
        self.num_vars = 0
        self.ok = True
        self.default_phase = default_phase
        self.phase_saving = phase_saving
        # 1-indexed per-variable state; slot 0 is padding
        self.assign: list[bool | None] = [None]
        self.phase: list[bool] = [default_phase]
        self.level: list[int] = [0]
        self.reason: list[list[int] | None] = [None]
        self.activity: list[float] = [0.0]
        self.watches: dict[int, list[list[int]]] = {}
        self.clauses: list[list[int]] = []
        self.learned: list[list[int]] = []
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.var_inc = 1.0
        self.model: list[bool] | None = None
        self.max_learned = 4000
        for _ in range(num_vars):
            self.new_var()

    # ------------------------------------------------------------------ setup

    def new_var(self, phase: bool | None = None) -> int:
        self.num_vars += 1
        self.assign.append(None)
        self.phase.append(self.default_phase if phase is None else phase)
        self.level.append(0)
        self.reason.append(None)
        self.activity.append(0.0)
        self.watches[self.num_vars] = []
        self.watches[-self.num_vars] = []
        return self.num_vars

    def value(self, lit: int) -> bool | None:
        a = self.assign[abs(lit)]
        if a is None:
            return None
        return a if lit > 0 else not a

    def set_phases(self, value: bool) -> None:
        """Set the decision polarity of every variable (used by map solvers)."""
        for v in range(1, self.num_vars + 1):
            self.phase[v] = value

    def add_clause(self, lits) -> None:
        """Add a clause at the top level. Duplicate literals are merged;
        tautologies are dropped."""
        if not self.ok:
            return
        self._cancel_until(0)
        seen: set[int] = set()
        out: list[int] = []
        for lit in lits:
            if lit in seen:
                continue
            if -lit in seen:
                return  # tautology, always satisfied
            if abs(lit) > self.num_vars:
                raise ValueError(f"literal {lit} exceeds variable count {self.num_vars}")
            seen.add(lit)
            out.append(lit)
        filtered: list[int] = []
        for lit in out:
            v = self.value(lit)
            if v is True:
                return  # satisfied at top level forever
            if v is False:
                continue  # falsified at top level forever
            filtered.append(lit)
        if not filtered:
            self.ok = False
            return
        if len(filtered) == 1:
            if not self._enqueue(filtered[0], None):
                self.ok = False
            return
        self.clauses.append(filtered)
        self._watch(filtered)

    def _watch(self, clause: list[int]) -> None:
        self.watches[clause[0]].append(clause)
        self.watches[clause[1]].append(clause)

    # ------------------------------------------------------------- trail ops

    def _decision_level(self) -> int:
        return len(self.trail_lim)

    def _enqueue(self, lit: int, reason: list[int] | None) -> bool:
        v = self.value(lit)
        if v is not None:
            return v
        var = abs(lit)
        self.assign[var] = lit > 0
        self.level[var] = self._decision_level()
        self.reason[var] = reason
        self.trail.append(lit)
        return True

    def _cancel_until(self, target: int) -> None:
        while len(self.trail_lim) > target:
            lim = self.trail_lim.pop()
            for lit in self.trail[lim:]:
                var = abs(lit)
                if self.phase_saving:
                    self.phase[var] = lit > 0
                self.assign[var] = None
                self.reason[var] = None
            del self.trail[lim:]
        if self.qhead > len(self.trail):
            self.qhead = len(self.trail)

    # ------------------------------------------------------------ propagation

    def _propagate(self) -> list[int] | None:
        """Unit propagation; returns a conflicting clause or None."""
        while self.qhead < len(self.trail):
            p = self.trail[self.qhead]
            self.qhead += 1
            neg = -p
            ws = self.watches[neg]
            kept: list[list[int]] = []
            i = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == neg:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                if self.value(first) is True:
                    kept.append(c)
                    continue
                moved = False
                for k in range(2, len(c)):
                    if self.value(c[k]) is not False:
                        c[1], c[k] = c[k], c[1]
                        self.watches[c[1]].append(c)
                        moved = True
                        break
                if moved:
                    continue
                kept.append(c)
                if not self._enqueue(first, c):
                    kept.extend(ws[i:])
                    self.watches[neg] = kept
                    return c
            self.watches[neg] = kept
        return None

    # -------------------------------------------------------------- analysis

    def _bump(self, var: int) -> None:
        self.activity[var] += self.var_inc
        if self.activity[var] > 1e100:
            for v in range(1, self.num_vars + 1):
                self.activity[v] *= 1e-100
            self.var_inc *= 1e-100

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        """First-UIP conflict analysis; returns (learnt clause, backjump level).
        learnt[0] is the asserting literal."""
        cur_level = self._decision_level()
        learnt: list[int] = [0]  # placeholder for asserting literal
        seen = [False] * (self.num_vars + 1)
        counter = 0
        p: int | None = None
        index = len(self.trail) - 1
        c: list[int] | None = confl
        while True:
            assert c is not None
            start = 0 if p is None else 1
            for q in c[start:]:
                var = abs(q)
                if not seen[var] and self.level[var] > 0:
                    seen[var] = True
                    self._bump(var)
                    if self.level[var] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(self.trail[index])]:
                index -= 1
            p = self.trail[index]
            index -= 1
            c = self.reason[abs(p)]
            seen[abs(p)] = False
            counter -= 1
            if counter == 0:
                break
        learnt[0] = -p
        if len(learnt) == 1:
            return learnt, 0
        # put a literal of the highest remaining level at position 1
        best = 1
        for k in range(2, len(learnt)):
            if self.level[abs(learnt[k])] > self.level[abs(learnt[best])]:
                best = k
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _reduce_learned(self) -> None:
        locked = {id(self.reason[abs(c[0])]) for c in self.learned if self.reason[abs(c[0])] is not None}
        ranked = sorted(self.learned, key=len)
        keep_n = len(ranked) // 2
        keep, drop = [], []
        for idx, c in enumerate(ranked):
            if idx < keep_n or id(c) in locked or len(c) <= 2:
                keep.append(c)
            else:
                drop.append(c)
        for c in drop:
            self.watches[c[0]].remove(c)
            self.watches[c[1]].remove(c)
        self.learned = keep
        self.max_learned = int(self.max_learned * 1.3)

    # ------------------------------------------------------------------ solve

    def solve(self, assumptions=()) -> bool:
        """Decide satisfiability under the given assumption literals.

        Returns False permanently (sets self.ok) only on assumption-free
        top-level conflicts; assumption failures leave the solver reusable.
        """
        self.model = None
        if not self.ok:
            return False
        assumptions = list(assumptions)
        self._cancel_until(0)
        if self._propagate() is not None:
            self.ok = False
            return False

        conflicts = 0
        restart_limit = 100.0
        while True:
            confl = self._propagate()
            if confl is not None:
                conflicts += 1
                if self._decision_level() == 0:
                    self.ok = False
                    return False
                learnt, bj = self._analyze(confl)
                self._cancel_until(bj)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    self.learned.append(learnt)
                    self._watch(learnt)
                    self._enqueue(learnt[0], learnt)
                self.var_inc /= 0.95
                continue

            if conflicts >= restart_limit:
                conflicts = 0
                restart_limit *= 1.5
                if len(self.learned) > self.max_learned:
                    self._cancel_until(0)
                    self._reduce_learned()
                else:
                    self._cancel_until(0)
                continue

            lvl = self._decision_level()
            if lvl < len(assumptions):
                p = assumptions[lvl]
                v = self.value(p)
                if v is True:
                    self.trail_lim.append(len(self.trail))  # empty level keeps indexing aligned
                    continue
                if v is False:
                    self._cancel_until(0)
                    return False
                self.trail_lim.append(len(self.trail))
                self._enqueue(p, None)
                continue

            var = self._pick_branch_var()
            if var == 0:
                self.model = [False] + [bool(self.assign[v]) for v in range(1, self.num_vars + 1)]
                self._cancel_until(0)
                return True
            self.trail_lim.append(len(self.trail))
            lit = var if self.phase[var] else -var
            self._enqueue(lit, None)

    def _pick_branch_var(self) -> int:
        best, best_act = 0, -1.0
        for v in range(1, self.num_vars + 1):
            if self.assign[v] is None and self.activity[v] > best_act:
                best, best_act = v, self.activity[v]
        return best
