"""Exploration hypergraph: constraints as vertices, found MUSes/MCSes as edges.

The graph is append-only during a run; a (mus_count, mcs_count) watermark is
enough to reconstruct any historical state, which is how episode records
reference the snapshot an agent saw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .oracle import SubsetMask

Watermark = tuple[int, int]  # (#mus edges, #mcs edges)


@dataclass(frozen=True)
class IncidenceExport:
    """Canonical 0-based incidence lists for wire transfer and features."""

    num_vertices: int
    mus: tuple[tuple[int, ...], ...]
    mcs: tuple[tuple[int, ...], ...]

    def to_json(self) -> str:
        obj = {
            "num_vertices": self.num_vertices,
            "mus": [list(e) for e in self.mus],
            "mcs": [list(e) for e in self.mcs],
        }
        return json.dumps(obj, separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "IncidenceExport":
        obj = json.loads(text)
        return cls(
            num_vertices=obj["num_vertices"],
            mus=tuple(tuple(e) for e in obj["mus"]),
            mcs=tuple(tuple(e) for e in obj["mcs"]),
        )


class ExplorationGraph:
    """Heterogeneous hypergraph of discovered MUSes and MCSes (MSS complements)."""

    def __init__(self, num_vertices: int):
        self.num_vertices = num_vertices
        self.mus_edges: list[SubsetMask] = []
        self.mcs_edges: list[SubsetMask] = []
        self._mus_seen: set[int] = set()
        self._mcs_seen: set[int] = set()
        self.whole_set_satisfiable = False

    def watermark(self) -> Watermark:
        return (len(self.mus_edges), len(self.mcs_edges))

    def record_mus(self, mask: SubsetMask) -> None:
        if mask.width != self.num_vertices:
            raise ValueError("mask width mismatch")
        if mask.popcount() == 0:
            raise ValueError("an MUS is nonempty when the empty set is satisfiable")
        if mask.bits in self._mus_seen:
            return
        self._mus_seen.add(mask.bits)
        self.mus_edges.append(mask)

    def record_mss(self, mask: SubsetMask) -> None:
        if mask.width != self.num_vertices:
            raise ValueError("mask width mismatch")
        mcs = mask.complement()
        if mcs.popcount() == 0:
            # whole constraint set satisfiable: nothing to record as a correction
            self.whole_set_satisfiable = True
            return
        if mcs.bits in self._mcs_seen:
            return
        self._mcs_seen.add(mcs.bits)
        self.mcs_edges.append(mcs)

    def export_incidence(self, watermark: Watermark | None = None) -> IncidenceExport:
        n_mus, n_mcs = watermark if watermark is not None else self.watermark()
        if n_mus > len(self.mus_edges) or n_mcs > len(self.mcs_edges):
            raise ValueError("watermark beyond current graph")
        return IncidenceExport(
            num_vertices=self.num_vertices,
            mus=tuple(tuple(e.indices()) for e in self.mus_edges[:n_mus]),
            mcs=tuple(tuple(e.indices()) for e in self.mcs_edges[:n_mcs]),
        )
