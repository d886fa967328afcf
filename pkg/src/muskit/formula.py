"""CNF constraint systems: instance model, DIMACS I/O, and unsat-instance generators."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field


class DimacsError(ValueError):
    """Malformed DIMACS input; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class GenerationError(RuntimeError):
    """Instance generation could not reach an unsatisfiable instance."""


@dataclass(frozen=True)
class CnfInstance:
    """An ordered set of CNF constraints over Boolean variables 1..num_vars.

    Constraint index i (0-based) always refers to clauses[i]; clause order is
    part of the identity of the instance.
    """

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    label: str | None = None

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValueError("num_vars must be nonnegative")
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        for idx, clause in enumerate(self.clauses):
            if not clause:
                raise ValueError(f"clause {idx} is empty")
            seen = set()
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"clause {idx}: literal {lit} out of range")
                if -lit in seen:
                    raise ValueError(f"clause {idx} is tautological")
                seen.add(lit)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters for the random-instance generators.

    The clause width of the ``sr`` generator is 1 + Bernoulli(bernoulli_p) +
    Geometric(geometric_p), with the geometric term supported on {1, 2, ...};
    both probabilities are exposed because the width law is a tunable choice.
    """

    kind: str = "sr"  # "sr" | "graph_coloring"
    min_vars: int = 5
    max_vars: int = 20
    geometric_p: float = 0.3
    bernoulli_p: float = 0.3
    gc_nodes: int = 6
    gc_colors: int = 3
    gc_edge_p: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("sr", "graph_coloring"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if not (0 < self.min_vars <= self.max_vars):
            raise ValueError("need 0 < min_vars <= max_vars")
        for name in ("geometric_p", "bernoulli_p", "gc_edge_p"):
            p = getattr(self, name)
            if not (0.0 < p < 1.0):
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.gc_nodes < 1 or self.gc_colors < 1:
            raise ValueError("gc_nodes and gc_colors must be positive")


def parse_dimacs(text: str) -> CnfInstance:
    """Parse DIMACS CNF text into a CnfInstance.

    Accepts comment lines anywhere, one ``p cnf V C`` header, and
    zero-terminated clauses (which may span lines). Errors report the
    offending line number.
    """
    num_vars = None
    num_clauses = None
    header_line = 0
    clauses: list[list[int]] = []
    current: list[int] = []
    current_start = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if num_vars is not None:
                raise DimacsError("duplicate header", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[0] != "p" or parts[1] != "cnf":
                raise DimacsError(f"malformed header {line!r}", lineno)
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"malformed header {line!r}", lineno) from None
            if num_vars < 0 or num_clauses < 0:
                raise DimacsError("negative counts in header", lineno)
            header_line = lineno
            continue
        if num_vars is None:
            raise DimacsError("clause before header", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"bad literal {tok!r}", lineno) from None
            if lit == 0:
                if not current:
                    raise DimacsError("empty clause", lineno)
                seen = set(current)
                if any(-l in seen for l in current):
                    raise DimacsError("tautological clause", lineno)
                clauses.append(current)
                current = []
            else:
                if abs(lit) > num_vars:
                    raise DimacsError(f"literal {lit} out of range", lineno)
                if not current:
                    current_start = lineno
                current.append(lit)

    last = len(text.splitlines())
    if num_vars is None:
        raise DimacsError("missing header", max(last, 1))
    if current:
        raise DimacsError("unterminated clause", current_start)
    if len(clauses) != num_clauses:
        raise DimacsError(
            f"header declares {num_clauses} clauses, found {len(clauses)}",
            header_line,
        )
    return CnfInstance(num_vars, tuple(tuple(c) for c in clauses))


def emit_dimacs(inst: CnfInstance) -> str:
    """Serialize an instance to DIMACS; reparsing yields an equal instance."""
    lines = [f"p cnf {inst.num_vars} {inst.num_clauses}"]
    for clause in inst.clauses:
        lines.append(" ".join(str(l) for l in clause) + " 0")
    return "\n".join(lines) + "\n"


def _sample_geometric(rng: random.Random, p: float) -> int:
    # support {1, 2, ...}: number of Bernoulli(p) trials up to first success
    u = rng.random()
    return int(math.floor(math.log1p(-u) / math.log1p(-p))) + 1


def _sample_width(rng: random.Random, cfg: GeneratorConfig, num_vars: int) -> int:
    for _ in range(10_000):
        w = 1 + (1 if rng.random() < cfg.bernoulli_p else 0)
        w += _sample_geometric(rng, cfg.geometric_p)
        if w <= num_vars:
            return w
    raise GenerationError(f"cannot draw clause width <= {num_vars} variables")


def generate_sr(cfg: GeneratorConfig, rng: random.Random | None = None) -> CnfInstance:
    """Draw one unsatisfiable random-clause instance.

    Clauses are appended one at a time, each over a width-w sample of distinct
    variables negated with probability 0.5; generation stops at (and keeps)
    the first clause whose addition makes the instance unsatisfiable.
    """
    from .oracle import check_unbudgeted  # deferred: oracle depends on this module

    if cfg.kind != "sr":
        raise ValueError("config kind must be 'sr'")
    if rng is None:
        rng = random.Random(cfg.rng_seed)
    n = rng.randint(cfg.min_vars, cfg.max_vars)
    clauses: list[tuple[int, ...]] = []
    for _ in range(20 * n):
        w = _sample_width(rng, cfg, n)
        chosen = rng.sample(range(1, n + 1), w)
        clause = tuple(-v if rng.random() < 0.5 else v for v in chosen)
        clauses.append(clause)
        inst = CnfInstance(n, tuple(clauses), label=f"sr(n={n})")
        if check_unbudgeted(inst).status == "unsatisfiable":
            return inst
    raise GenerationError(f"no unsat instance within {20 * n} clauses (n={n})")


def _coloring_encoding(num_nodes: int, num_colors: int, edges: list[tuple[int, int]]) -> CnfInstance:
    def var(node: int, color: int) -> int:
        return 1 + node * num_colors + color

    clauses: list[tuple[int, ...]] = []
    for v in range(num_nodes):
        clauses.append(tuple(var(v, c) for c in range(num_colors)))
    for v in range(num_nodes):
        for c1 in range(num_colors):
            for c2 in range(c1 + 1, num_colors):
                clauses.append((-var(v, c1), -var(v, c2)))
    for u, v in edges:
        for c in range(num_colors):
            clauses.append((-var(u, c), -var(v, c)))
    return CnfInstance(
        num_nodes * num_colors,
        tuple(clauses),
        label=f"gc(n={num_nodes},k={num_colors})",
    )


def generate_graph_coloring(cfg: GeneratorConfig, rng: random.Random | None = None) -> CnfInstance:
    """Direct CNF encoding of coloring a random G(n, p) graph; resamples until unsat."""
    from .oracle import check_unbudgeted

    if cfg.kind != "graph_coloring":
        raise ValueError("config kind must be 'graph_coloring'")
    if rng is None:
        rng = random.Random(cfg.rng_seed)
    for _ in range(200):
        edges = [
            (u, v)
            for u in range(cfg.gc_nodes)
            for v in range(u + 1, cfg.gc_nodes)
            if rng.random() < cfg.gc_edge_p
        ]
        inst = _coloring_encoding(cfg.gc_nodes, cfg.gc_colors, edges)
        if check_unbudgeted(inst).status == "unsatisfiable":
            return inst
    raise GenerationError(
        f"no unsat coloring instance in 200 attempts "
        f"(nodes={cfg.gc_nodes}, colors={cfg.gc_colors}, p={cfg.gc_edge_p})"
    )
