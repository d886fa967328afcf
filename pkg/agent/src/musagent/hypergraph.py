"""Hypergraph state and spectral vertex features.

Vertex features are the eigenvectors of the k smallest eigenvalues of the
normalized hypergraph Laplacian

    L = I - D_v^{-1/2} H W D_e^{-1} H^T D_v^{-1/2}

built over the union of MUS and MCS hyperedges with unit weights. Zero-degree
vertices get zero rows; the empty hypergraph yields all-zero features. Signs
are canonicalized by making each eigenvector's component sum positive (a
relabeling-invariant rule), falling back to the largest-magnitude component
when the sum vanishes. Feature extraction therefore commutes with vertex
relabeling whenever the selected spectrum is simple and every selected
eigenvector has a nonvanishing sum; degenerate eigenspaces and
automorphism-antisymmetric eigenvectors are the unavoidable exceptions.
"""

from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger("musagent.hypergraph")

Edges = list[list[int]]

_SIGN_TOL = 1e-10


def hypergraph_laplacian(num_vertices: int, edges: Edges) -> tuple[np.ndarray, np.ndarray]:
    """Normalized Laplacian restricted to covered vertices.

    Returns (laplacian over covered vertices, boolean cover mask of length m).
    """
    m = num_vertices
    covered = np.zeros(m, dtype=bool)
    for edge in edges:
        for v in edge:
            covered[v] = True
    idx = {v: j for j, v in enumerate(np.flatnonzero(covered))}
    n = len(idx)
    if n == 0:
        return np.zeros((0, 0)), covered
    H = np.zeros((n, len(edges)))
    for e, edge in enumerate(edges):
        for v in edge:
            H[idx[v], e] = 1.0
    d_v = H.sum(axis=1)
    d_e = H.sum(axis=0)
    inv_sqrt_dv = 1.0 / np.sqrt(d_v)
    inv_de = 1.0 / d_e
    A = (inv_sqrt_dv[:, None] * H) @ (inv_de[:, None] * (H.T * inv_sqrt_dv[None, :]))
    return np.eye(n) - A, covered


def spectral_init(num_vertices: int, mus: Edges, mcs: Edges, dim: int) -> np.ndarray:
    """m x dim feature matrix from the k = min(dim, m) smallest eigenvectors."""
    m = num_vertices
    features = np.zeros((m, dim))
    edges = [list(e) for e in mus] + [list(e) for e in mcs]
    if m == 0 or not edges:
        return features
    lap, covered = hypergraph_laplacian(m, edges)
    if lap.shape[0] == 0:
        return features
    try:
        eigvals, eigvecs = np.linalg.eigh(lap)
    except np.linalg.LinAlgError as exc:
        log.warning("eigendecomposition failed (%s); using zero features", exc)
        return features
    k = min(dim, m, eigvecs.shape[1])
    cover_rows = np.flatnonzero(covered)
    for col in range(k):
        vec = eigvecs[:, col]
        features[cover_rows, col] = _canonical_sign(vec)
    return features


def _canonical_sign(vec: np.ndarray) -> np.ndarray:
    """Deterministic sign choice for one eigenvector.

    The component sum is relabeling-invariant, so it is the primary rule;
    when it vanishes (e.g. eigenvectors antisymmetric under a graph
    automorphism, where no equivariant choice exists at all) the
    largest-magnitude component decides, deterministically per labeling.
    """
    total = vec.sum()
    if abs(total) > _SIGN_TOL:
        return vec if total > 0 else -vec
    anchor = vec[int(np.argmax(np.abs(vec)))]
    if abs(anchor) <= _SIGN_TOL:
        return vec
    return vec if anchor > 0 else -vec


class GraphState:
    """Incrementally accumulated MUS/MCS edges on the agent side."""

    def __init__(self, num_vertices: int):
        self.num_vertices = num_vertices
        self.mus: Edges = []
        self.mcs: Edges = []

    def extend(self, mus_new: Edges, mcs_new: Edges) -> None:
        self.mus.extend([list(e) for e in mus_new])
        self.mcs.extend([list(e) for e in mcs_new])

    def replace(self, mus: Edges, mcs: Edges) -> None:
        self.mus = [list(e) for e in mus]
        self.mcs = [list(e) for e in mcs]

    def watermark(self) -> tuple[int, int]:
        return (len(self.mus), len(self.mcs))
