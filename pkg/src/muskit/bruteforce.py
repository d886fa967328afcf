"""Truth-table reference oracle and exhaustive MUS/MSS enumeration.

Everything here is deliberately independent of the CDCL machinery: subsets
are decided by intersecting per-clause satisfying-assignment bitmasks over
all 2^num_vars assignments. Intended for tests and small-instance
verification (num_vars <= ~15).
"""

from __future__ import annotations

from .formula import CnfInstance
from .oracle import SubsetMask


def _var_masks(num_vars: int) -> list[int]:
    # masks[v] has bit a set iff assignment index a gives variable v+1 True;
    # built by doubling so construction is O(num_vars) bigint ops per mask
    total_bits = 1 << num_vars
    masks = []
    for v in range(num_vars):
        block = ((1 << (1 << v)) - 1) << (1 << v)  # 2^v zeros then 2^v ones
        width = 1 << (v + 1)
        while width < total_bits:
            block |= block << width
            width <<= 1
        masks.append(block)
    return masks


class TruthTable:
    """Per-clause satisfying-assignment masks for one instance."""

    def __init__(self, inst: CnfInstance):
        if inst.num_vars > 20:
            raise ValueError("truth-table oracle limited to 20 variables")
        self.inst = inst
        self.all_assignments = (1 << (1 << inst.num_vars)) - 1
        var_masks = _var_masks(inst.num_vars)
        self.clause_masks = []
        for clause in inst.clauses:
            m = 0
            for lit in clause:
                vm = var_masks[abs(lit) - 1]
                m |= vm if lit > 0 else (~vm & self.all_assignments)
            self.clause_masks.append(m)

    def satisfiable(self, subset: SubsetMask | None = None) -> bool:
        acc = self.all_assignments
        indices = range(self.inst.num_clauses) if subset is None else subset.indices()
        for i in indices:
            acc &= self.clause_masks[i]
            if acc == 0:
                return False
        return acc != 0

    def satisfiable_bits(self, bits: int) -> bool:
        acc = self.all_assignments
        i = 0
        while bits:
            if bits & 1:
                acc &= self.clause_masks[i]
                if acc == 0:
                    return False
            bits >>= 1
            i += 1
        return True


def brute_force_sets(inst: CnfInstance) -> tuple[set[int], set[int]]:
    """All MUSes and MSSes of an instance, as bit patterns over clause indices.

    Walks the full power set; feasible for num_clauses <= ~16.
    """
    m = inst.num_clauses
    table = TruthTable(inst)
    sat = [table.satisfiable_bits(bits) for bits in range(1 << m)]
    muses: set[int] = set()
    msses: set[int] = set()
    for bits in range(1 << m):
        if sat[bits]:
            if all(not sat[bits | (1 << i)] for i in range(m) if not (bits >> i) & 1):
                msses.add(bits)
        else:
            if all(sat[bits & ~(1 << i)] for i in range(m) if (bits >> i) & 1):
                muses.add(bits)
    return muses, msses


def brute_force_masks(inst: CnfInstance) -> tuple[set[SubsetMask], set[SubsetMask]]:
    m = inst.num_clauses
    muses, msses = brute_force_sets(inst)
    return (
        {SubsetMask(m, b) for b in muses},
        {SubsetMask(m, b) for b in msses},
    )
