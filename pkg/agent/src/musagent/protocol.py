"""JSON-line protocol server: answers act requests from the enumeration
engine with sampled or greedy actions plus log-probability and value.

The session negotiates delta edge transfer at handshake and keeps its own
copy of the hypergraph, so each request only carries newly discovered
edges. Trunk embeddings are cached per (watermark, op) because the trunk
does not depend on the subset being shrunk/grown.
"""

from __future__ import annotations

import json
import sys

import torch

from .hypergraph import GraphState
from .model import PolicyValueNet

PROTOCOL_VERSION = 1
FINISH = "finish"


class SessionClosed(Exception):
    pass


class AgentSession:
    def __init__(self, net: PolicyValueNet, mode: str = "greedy", seed: int = 0):
        self.net = net
        self.default_mode = mode
        self.graph: GraphState | None = None
        self.num_constraints: int | None = None
        self.generator = torch.Generator().manual_seed(seed)
        self._trunk_cache: dict[tuple[int, int, str], torch.Tensor] = {}

    def handle(self, msg: dict) -> dict | None:
        kind = msg.get("type")
        if kind == "hello":
            if msg.get("version") != PROTOCOL_VERSION:
                return {
                    "type": "error",
                    "message": f"unsupported protocol version {msg.get('version')}",
                }
            self.num_constraints = int(msg["num_constraints"])
            self.graph = GraphState(self.num_constraints)
            self._trunk_cache.clear()
            return {"type": "hello_ack", "version": PROTOCOL_VERSION, "delta": True}
        if kind == "act":
            if self.graph is None:
                return {"type": "error", "message": "act before hello"}
            try:
                return self._act(msg)
            except (KeyError, TypeError, ValueError, IndexError) as exc:
                return {"type": "error", "message": f"malformed act request: {exc}"}
        if kind == "reward":
            return None  # inference sessions have no per-episode state to close
        if kind == "bye":
            raise SessionClosed
        return {"type": "error", "message": f"unknown message type {kind!r}"}

    def _act(self, msg: dict) -> dict:
        assert self.graph is not None
        if "edges_since" in msg:
            since = tuple(msg["edges_since"])
            if since != self.graph.watermark():
                return {
                    "type": "error",
                    "message": f"edge watermark mismatch: got {since}, have {self.graph.watermark()}",
                }
            self.graph.extend(msg.get("mus", []), msg.get("mcs", []))
        else:
            self.graph.replace(msg.get("mus", []), msg.get("mcs", []))

        op = msg["op"]
        candidates = [int(c) for c in msg.get("candidates", [])]
        mode = msg.get("mode", self.default_mode)
        key = (*self.graph.watermark(), op)
        with torch.no_grad():
            h = self._trunk_cache.get(key)
            if h is None:
                h = self.net.encode(self.num_constraints, self.graph.mus, self.graph.mcs, op)
                self._trunk_cache[key] = h
            logits, values = self.net.decode_batch(h, [candidates])
        row = logits[0]
        finite = torch.isfinite(row)
        log_probs = torch.full_like(row, float("-inf"))
        log_probs[finite] = torch.log_softmax(row[finite], dim=0)
        if mode == "sample":
            probs = torch.zeros_like(row)
            probs[finite] = torch.softmax(row[finite], dim=0)
            col = int(torch.multinomial(probs, 1, generator=self.generator).item())
        else:
            col = int(torch.argmax(row.nan_to_num(nan=float("-inf"))).item())
        action = candidates[col] if col < len(candidates) else FINISH
        return {
            "type": "action",
            "action": action,
            "log_prob": float(log_probs[col].item()),
            "value": float(values[0].item()),
        }


def serve(net: PolicyValueNet, mode: str = "greedy", seed: int = 0, stdin=None, stdout=None) -> None:
    """Run a protocol session over stdio until bye/EOF."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    session = AgentSession(net, mode=mode, seed=seed)
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            reply = {"type": "error", "message": f"bad json: {exc}"}
            print(json.dumps(reply), file=stdout, flush=True)
            continue
        try:
            reply = session.handle(msg)
        except SessionClosed:
            break
        if reply is not None:
            print(json.dumps(reply), file=stdout, flush=True)
