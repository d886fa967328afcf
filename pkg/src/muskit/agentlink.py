"""Policy abstraction: baseline policies, the external-agent line protocol,
and episode recording.

Wire protocol (newline-delimited JSON objects over the agent's stdio):

    engine -> agent   {"type":"hello","version":1,"num_constraints":m}
    agent  -> engine  {"type":"hello_ack","version":1,"delta":false}
    engine -> agent   {"type":"act","op":"shrink","num_constraints":m,
                       "mus":[[0,1],...],"mcs":[[2],...],
                       "subset":[...],"candidates":[...],"mode":"greedy"}
    agent  -> engine  {"type":"action","action":3,"log_prob":-0.69,"value":0.41}
                      (action may be the string "finish")
    engine -> agent   {"type":"reward","op":"shrink","reward":0.66,
                       "n_correction":3,"result":[0,1]}
    engine -> agent   {"type":"bye"}

If the agent acknowledges with "delta":true, each act request carries only
edges appended since the previous request plus "edges_since":[n_mus,n_mcs];
the agent accumulates its own copy of the hypergraph. Unknown fields are
ignored on both sides. Transport failures (timeout, malformed response,
version mismatch) degrade the policy to immediate-finish for the remainder
of the run.
"""

from __future__ import annotations

import json
import logging
import os
import select
import shlex
import subprocess
from dataclasses import dataclass
from random import Random

PROTOCOL_VERSION = 1
FINISH = "finish"

log = logging.getLogger("muskit.agentlink")


@dataclass(frozen=True)
class PolicyDecision:
    """One agent action: a constraint index to delete/add, or FINISH."""

    action: int | str
    log_prob: float | None = None
    value_estimate: float | None = None

    def is_finish(self) -> bool:
        return self.action == FINISH


@dataclass(frozen=True)
class ActRequest:
    """One decision request: hypergraph incidence plus the current subset."""

    op: str  # "shrink" | "grow"
    num_constraints: int
    mus: tuple[tuple[int, ...], ...]
    mcs: tuple[tuple[int, ...], ...]
    subset: tuple[int, ...]  # current S_tau, ascending
    candidates: tuple[int, ...]  # shrink: S_tau; grow: complement
    mode: str = "greedy"  # "sample" | "greedy"


@dataclass(frozen=True)
class EpisodeRecord:
    """One completed shrink/grow episode; the RL training unit."""

    instance: str
    op: str
    watermark: tuple[int, int]
    initial: tuple[int, ...]
    decisions: tuple[PolicyDecision, ...]
    reward: float
    n_correction: int
    result: tuple[int, ...]

    def to_json(self) -> str:
        obj = {
            "instance": self.instance,
            "op": self.op,
            "watermark": list(self.watermark),
            "initial": list(self.initial),
            "decisions": [
                {"action": d.action, "log_prob": d.log_prob, "value": d.value_estimate}
                for d in self.decisions
            ],
            "reward": self.reward,
            "n_correction": self.n_correction,
            "result": list(self.result),
        }
        return json.dumps(obj, separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EpisodeRecord":
        obj = json.loads(text)
        return cls(
            instance=obj["instance"],
            op=obj["op"],
            watermark=tuple(obj["watermark"]),
            initial=tuple(obj["initial"]),
            decisions=tuple(
                PolicyDecision(d["action"], d.get("log_prob"), d.get("value"))
                for d in obj["decisions"]
            ),
            reward=obj["reward"],
            n_correction=obj["n_correction"],
            result=tuple(obj["result"]),
        )


@dataclass(frozen=True)
class EpisodeSummary:
    """Terminal information sent back to the policy when an episode closes."""

    op: str
    reward: float
    n_correction: int
    result: tuple[int, ...]


# --------------------------------------------------------------------- policies


def policy_immediate_finish(req: ActRequest) -> PolicyDecision:
    """Baseline reproducing the agent-free path: always finish."""
    return PolicyDecision(FINISH)


def policy_random(req: ActRequest, rng: Random, p_finish: float) -> PolicyDecision:
    """Finish with probability p_finish, otherwise a uniform candidate."""
    if not 0.0 < p_finish <= 1.0:
        raise ValueError("p_finish must lie in (0, 1]")
    if not req.candidates or rng.random() < p_finish:
        return PolicyDecision(FINISH)
    return PolicyDecision(rng.choice(req.candidates))


def policy_frequency_heuristic(req: ActRequest) -> PolicyDecision:
    """Act on hypergraph statistics: touch the candidate with the fewest
    edge memberships in the relevant class (ties to the lowest index);
    finish once every candidate is covered by at least one edge, or when
    there is no evidence at all. Deterministic.
    """
    edges = req.mus if req.op == "shrink" else req.mcs
    if not edges:
        return PolicyDecision(FINISH)
    counts = {c: 0 for c in req.candidates}
    for edge in edges:
        for v in edge:
            if v in counts:
                counts[v] += 1
    if not counts or min(counts.values()) > 0:
        return PolicyDecision(FINISH)
    best = min(req.candidates, key=lambda c: (counts[c], c))
    return PolicyDecision(best)


class Policy:
    """Engine-facing policy interface; default hooks are no-ops."""

    def decide(self, req: ActRequest) -> PolicyDecision:
        raise NotImplementedError

    def notify_reward(self, summary: EpisodeSummary) -> None:
        pass

    def close(self) -> None:
        pass


class ImmediateFinishPolicy(Policy):
    def decide(self, req: ActRequest) -> PolicyDecision:
        return policy_immediate_finish(req)


class RandomPolicy(Policy):
    def __init__(self, rng: Random, p_finish: float = 0.2):
        self.rng = rng
        self.p_finish = p_finish

    def decide(self, req: ActRequest) -> PolicyDecision:
        return policy_random(req, self.rng, self.p_finish)


class FrequencyHeuristicPolicy(Policy):
    """Stateful wrapper around the frequency heuristic with an action-ratio cap."""

    def __init__(self, max_action_ratio: float = 1.0):
        if not 0.0 < max_action_ratio <= 1.0:
            raise ValueError("max_action_ratio must lie in (0, 1]")
        self.max_action_ratio = max_action_ratio
        self._initial: int | None = None
        self._acted = 0

    def decide(self, req: ActRequest) -> PolicyDecision:
        if self._initial is None:
            self._initial = len(req.candidates)
            self._acted = 0
        if self._initial and self._acted >= self.max_action_ratio * self._initial:
            return PolicyDecision(FINISH)
        decision = policy_frequency_heuristic(req)
        if decision.is_finish():
            return decision
        self._acted += 1
        return decision

    def notify_reward(self, summary: EpisodeSummary) -> None:
        self._initial = None
        self._acted = 0


# ----------------------------------------------------------- external sessions


class _LineChannel:
    """Line-oriented reads from a subprocess pipe with a timeout."""

    def __init__(self, pipe):
        self._fd = pipe.fileno()
        self._buf = b""

    def readline(self, timeout: float) -> str:
        while b"\n" not in self._buf:
            ready, _, _ = select.select([self._fd], [], [], timeout)
            if not ready:
                raise TimeoutError("agent response timed out")
            chunk = os.read(self._fd, 65536)
            if not chunk:
                raise EOFError("agent closed its output stream")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line.decode("utf-8")


class ProtocolError(RuntimeError):
    pass


class ExternalPolicy(Policy):
    """Policy hosted by an external agent process speaking the line protocol.

    Any transport failure degrades the session to immediate-finish for the
    remainder of the run; enumeration always completes.
    """

    def __init__(self, cmd: str, num_constraints: int, timeout: float = 30.0):
        self.cmd = cmd
        self.timeout = timeout
        self.degraded = False
        self.delta = False
        self._sent_watermark = (0, 0)
        self.proc = subprocess.Popen(
            shlex.split(cmd),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=False,
            bufsize=0,
        )
        self._chan = _LineChannel(self.proc.stdout)
        try:
            self._send({"type": "hello", "version": PROTOCOL_VERSION, "num_constraints": num_constraints})
            ack = self._recv()
            if ack.get("type") != "hello_ack" or ack.get("version") != PROTOCOL_VERSION:
                raise ProtocolError(f"bad handshake: {ack}")
            self.delta = bool(ack.get("delta", False))
        except Exception as exc:  # noqa: BLE001 - any handshake failure degrades
            self._degrade(f"handshake failed: {exc}")

    def _send(self, obj: dict) -> None:
        data = (json.dumps(obj, separators=(",", ":")) + "\n").encode("utf-8")
        self.proc.stdin.write(data)
        self.proc.stdin.flush()

    def _recv(self) -> dict:
        line = self._chan.readline(self.timeout)
        obj = json.loads(line)
        if not isinstance(obj, dict):
            raise ProtocolError("agent sent a non-object message")
        return obj

    def _degrade(self, why: str) -> None:
        if not self.degraded:
            log.warning("external agent degraded to immediate-finish: %s", why)
        self.degraded = True

    def decide(self, req: ActRequest) -> PolicyDecision:
        if self.degraded:
            return PolicyDecision(FINISH)
        try:
            msg = {
                "type": "act",
                "op": req.op,
                "num_constraints": req.num_constraints,
                "subset": list(req.subset),
                "candidates": list(req.candidates),
                "mode": req.mode,
            }
            if self.delta:
                n_mus, n_mcs = self._sent_watermark
                msg["edges_since"] = [n_mus, n_mcs]
                msg["mus"] = [list(e) for e in req.mus[n_mus:]]
                msg["mcs"] = [list(e) for e in req.mcs[n_mcs:]]
                self._sent_watermark = (len(req.mus), len(req.mcs))
            else:
                msg["mus"] = [list(e) for e in req.mus]
                msg["mcs"] = [list(e) for e in req.mcs]
            self._send(msg)
            resp = self._recv()
            if resp.get("type") != "action":
                raise ProtocolError(f"expected action, got {resp}")
            action = resp["action"]
            if action != FINISH and not isinstance(action, int):
                raise ProtocolError(f"bad action value: {action!r}")
            lp = resp.get("log_prob")
            val = resp.get("value")
            return PolicyDecision(
                action,
                float(lp) if lp is not None else None,
                float(val) if val is not None else None,
            )
        except Exception as exc:  # noqa: BLE001
            self._degrade(str(exc))
            return PolicyDecision(FINISH)

    def notify_reward(self, summary: EpisodeSummary) -> None:
        if self.degraded:
            return
        try:
            self._send(
                {
                    "type": "reward",
                    "op": summary.op,
                    "reward": summary.reward,
                    "n_correction": summary.n_correction,
                    "result": list(summary.result),
                }
            )
        except Exception as exc:  # noqa: BLE001
            self._degrade(str(exc))

    def close(self) -> None:
        try:
            if self.proc.poll() is None:
                try:
                    self._send({"type": "bye"})
                except Exception:  # noqa: BLE001
                    pass
                self.proc.stdin.close()
                try:
                    self.proc.wait(timeout=5)
                except subprocess.TimeoutExpired:
                    self.proc.kill()
                    self.proc.wait()
        finally:
            if self.proc.stdout:
                self.proc.stdout.close()


def external_policy_session(cmd: str, num_constraints: int, timeout: float = 30.0) -> ExternalPolicy:
    """Spawn an external agent process and complete the protocol handshake."""
    return ExternalPolicy(cmd, num_constraints, timeout)


# ----------------------------------------------------------------- recording


class EpisodeRecorder:
    """Append-only JSONL episode log; storage failures never abort the run."""

    def __init__(self, path: str):
        self.path = path
        self.failed = False
        self._fh = None
        try:
            self._fh = open(path, "a", encoding="utf-8")
        except OSError as exc:
            self.failed = True
            log.warning("episode recording disabled: %s", exc)

    def append(self, record: EpisodeRecord) -> None:
        if self.failed or self._fh is None:
            return
        try:
            self._fh.write(record.to_json() + "\n")
            self._fh.flush()
        except OSError as exc:
            self.failed = True
            log.warning("episode recording aborted: %s", exc)

    def close(self) -> None:
        if self._fh is not None:
            try:
                self._fh.close()
            except OSError:
                pass
            self._fh = None


def read_episode_log(path: str) -> list[EpisodeRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(EpisodeRecord.from_json(line))
    return records
