"""Hypergraph-attention policy/value network.

The trunk embeds vertices with spectral features plus an op indicator, then
applies set-to-set attention layers: per layer, features flow vertices ->
edges -> vertices separately over the MUS and the MCS edge class (separate
parameters), and the two branch outputs are concatenated and linearly
projected back to the feature dimension. An edge class with no edges
contributes zeros, as do vertices with no incident edges.

Policy and value are produced by two separate transformer decoders whose
queries are the candidate vertices and whose keys/values are all vertices.
The policy head emits one logit per candidate plus a virtual finish action
with a fixed logit of zero; the value head pools candidate outputs by mean
and max and maps the concatenation to a scalar.

The trunk depends only on the hypergraph and the op, not on the subset, so
one encode() serves every step of an episode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .config import ModelConfig
from .hypergraph import spectral_init

NEG_INF = float("-inf")


def _pad_index(sets: list[list[int]], min_len: int = 1) -> tuple[torch.Tensor, torch.Tensor]:
    """Pad jagged index lists to (B, L) long tensor + validity mask."""
    b = len(sets)
    width = max(min_len, max((len(s) for s in sets), default=0))
    index = torch.zeros((b, width), dtype=torch.long)
    mask = torch.zeros((b, width), dtype=torch.bool)
    for row, members in enumerate(sets):
        if members:
            index[row, : len(members)] = torch.tensor(members, dtype=torch.long)
            mask[row, : len(members)] = True
    return index, mask


@dataclass
class GraphTensors:
    """Padded incidence structures for one hypergraph snapshot."""

    mus_edge_index: torch.Tensor
    mus_edge_mask: torch.Tensor
    mus_vert_index: torch.Tensor
    mus_vert_mask: torch.Tensor
    mcs_edge_index: torch.Tensor
    mcs_edge_mask: torch.Tensor
    mcs_vert_index: torch.Tensor
    mcs_vert_mask: torch.Tensor

    @classmethod
    def build(cls, num_vertices: int, mus, mcs) -> "GraphTensors":
        def incidence(edges):
            edge_sets = [list(e) for e in edges]
            vert_sets: list[list[int]] = [[] for _ in range(num_vertices)]
            for e, members in enumerate(edge_sets):
                for v in members:
                    vert_sets[v].append(e)
            ei, em = _pad_index(edge_sets)
            vi, vm = _pad_index(vert_sets)
            return ei, em, vi, vm

        mus_ei, mus_em, mus_vi, mus_vm = incidence(mus)
        mcs_ei, mcs_em, mcs_vi, mcs_vm = incidence(mcs)
        return cls(mus_ei, mus_em, mus_vi, mus_vm, mcs_ei, mcs_em, mcs_vi, mcs_vm)


class SetPool(nn.Module):
    """Multi-head attention pooling of a variable-size set to one vector."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.seed = nn.Parameter(torch.randn(1, 1, dim) / math.sqrt(dim))
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.ff = nn.Sequential(nn.Linear(dim, dim), nn.ReLU(), nn.Linear(dim, dim))
        self.ln1 = nn.LayerNorm(dim)
        self.ln2 = nn.LayerNorm(dim)

    def forward(self, members: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        b, _, dim = members.shape
        if b == 0:
            return torch.zeros((0, dim), device=members.device)
        empty = ~mask.any(dim=1)
        safe = mask.clone()
        safe[empty, 0] = True  # keep attention defined; rows zeroed below
        q = self.seed.expand(b, -1, -1)
        pooled, _ = self.attn(q, members, members, key_padding_mask=~safe, need_weights=False)
        y = self.ln1(q + pooled)
        out = self.ln2(y + self.ff(y)).squeeze(1)
        return torch.where(empty.unsqueeze(1), torch.zeros_like(out), out)


class AllSetBranch(nn.Module):
    """vertices -> edges -> vertices over one edge class."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.to_edges = SetPool(dim, heads)
        self.to_vertices = SetPool(dim, heads)

    def forward(self, h, edge_index, edge_mask, vert_index, vert_mask) -> torch.Tensor:
        if edge_index.shape[0] == 0:
            return torch.zeros_like(h)
        edge_feat = self.to_edges(h[edge_index], edge_mask)
        return self.to_vertices(edge_feat[vert_index], vert_mask)


class AllSetLayer(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.mus_branch = AllSetBranch(dim, heads)
        self.mcs_branch = AllSetBranch(dim, heads)
        self.proj = nn.Linear(2 * dim, dim)

    def forward(self, h: torch.Tensor, g: GraphTensors) -> torch.Tensor:
        mus_out = self.mus_branch(h, g.mus_edge_index, g.mus_edge_mask, g.mus_vert_index, g.mus_vert_mask)
        mcs_out = self.mcs_branch(h, g.mcs_edge_index, g.mcs_edge_mask, g.mcs_vert_index, g.mcs_vert_mask)
        return self.proj(torch.cat([mus_out, mcs_out], dim=-1))


def _mlp(in_dim: int, hidden: int, layers: int) -> nn.Sequential:
    mods: list[nn.Module] = []
    width = in_dim
    for _ in range(max(0, layers - 1)):
        mods += [nn.Linear(width, hidden), nn.ReLU()]
        width = hidden
    mods.append(nn.Linear(width, 1))
    return nn.Sequential(*mods)


@dataclass
class ForwardResult:
    logits: torch.Tensor  # (num_candidates + 1,), finish logit last and exactly 0
    probs: torch.Tensor  # softmax over logits
    value: torch.Tensor  # scalar


class PolicyValueNet(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.feature_dim
        self.input_proj = nn.Linear(d + 1, d)  # + op indicator column
        self.allset = nn.ModuleList(
            AllSetLayer(d, cfg.num_heads) for _ in range(cfg.num_allset_layers)
        )

        def decoder():
            layer = nn.TransformerDecoderLayer(
                d, cfg.num_heads, dim_feedforward=2 * d, dropout=0.0, batch_first=True
            )
            return nn.TransformerDecoder(layer, cfg.num_decoder_layers)

        self.policy_decoder = decoder()
        self.value_decoder = decoder()
        self.policy_head = _mlp(d, d, cfg.head_layers)
        self.value_head = _mlp(2 * d, d, cfg.head_layers)

    # ------------------------------------------------------------------ trunk

    def encode(self, num_constraints: int, mus, mcs, op: str) -> torch.Tensor:
        """Vertex embeddings for one hypergraph snapshot and op; subset-free."""
        feats = spectral_init(num_constraints, [list(e) for e in mus], [list(e) for e in mcs], self.cfg.feature_dim)
        x = torch.tensor(feats, dtype=torch.float32)
        op_col = torch.full((num_constraints, 1), 1.0 if op == "grow" else 0.0)
        h = self.input_proj(torch.cat([x, op_col], dim=1))
        tensors = GraphTensors.build(num_constraints, mus, mcs)
        for layer in self.allset:
            h = layer(h, tensors)
        return h

    # --------------------------------------------------------------- decoders

    def decode_batch(
        self, h: torch.Tensor, candidate_sets: list[list[int]]
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Batched policy logits and values for steps sharing one trunk.

        Returns (logits, values): logits has shape (B, L+1) where column L is
        the finish action (always exactly 0) and padded candidate columns are
        -inf; values has shape (B,).
        """
        b = len(candidate_sets)
        m, d = h.shape
        index, mask = _pad_index(candidate_sets)
        empty = ~mask.any(dim=1)
        queries = h[index]
        # keep self-attention defined for empty rows; outputs overridden below
        safe_mask = mask.clone()
        safe_mask[empty, 0] = True
        memory = h.unsqueeze(0).expand(b, m, d)

        dec_p = self.policy_decoder(queries, memory, tgt_key_padding_mask=~safe_mask)
        cand_logits = self.policy_head(dec_p).squeeze(-1)
        cand_logits = cand_logits.masked_fill(~mask, NEG_INF)
        logits = torch.cat([cand_logits, torch.zeros((b, 1), device=h.device)], dim=1)

        dec_v = self.value_decoder(queries, memory, tgt_key_padding_mask=~safe_mask)
        maskf = mask.unsqueeze(-1).to(dec_v.dtype)
        counts = maskf.sum(dim=1).clamp(min=1.0)
        mean_pool = (dec_v * maskf).sum(dim=1) / counts
        max_pool = dec_v.masked_fill(~mask.unsqueeze(-1), NEG_INF).max(dim=1).values
        max_pool = torch.where(empty.unsqueeze(1), torch.zeros_like(max_pool), max_pool)
        mean_pool = torch.where(empty.unsqueeze(1), torch.zeros_like(mean_pool), mean_pool)
        values = self.value_head(torch.cat([mean_pool, max_pool], dim=1)).squeeze(-1)
        return logits, values

    @torch.no_grad()
    def forward(self, num_constraints: int, mus, mcs, op: str, candidates: list[int]) -> ForwardResult:
        """Single-request inference; training goes through decode_batch."""
        h = self.encode(num_constraints, mus, mcs, op)
        logits, values = self.decode_batch(h, [list(candidates)])
        # drop padding columns: the distribution covers candidates + finish
        row = torch.cat([logits[0, : len(candidates)], logits[0, -1:]])
        probs = torch.softmax(row, dim=0)
        return ForwardResult(logits=row, probs=probs, value=values[0])


def build_net(cfg: ModelConfig, seed: int = 0) -> PolicyValueNet:
    torch.manual_seed(seed)
    net = PolicyValueNet(cfg)
    net.eval()
    return net


CHECKPOINT_FORMAT = "musagent-checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(path: str, net: PolicyValueNet, extra: dict | None = None) -> None:
    torch.save(
        {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "config": net.cfg.to_dict(),
            "state_dict": net.state_dict(),
            "extra": extra or {},
        },
        path,
    )


def load_checkpoint(path: str) -> tuple[PolicyValueNet, dict]:
    blob = torch.load(path, map_location="cpu", weights_only=True)
    if blob.get("format") != CHECKPOINT_FORMAT or blob.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"not a recognizable checkpoint: {path}")
    cfg = ModelConfig.from_dict(blob["config"])
    net = PolicyValueNet(cfg)
    net.load_state_dict(blob["state_dict"])
    net.eval()
    return net, blob.get("extra", {})
