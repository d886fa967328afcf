"""musagent: hypergraph-attention policy/value agent for the muskit protocol."""

from .config import ModelConfig
from .hypergraph import GraphState, hypergraph_laplacian, spectral_init
from .model import (
    AllSetLayer,
    ForwardResult,
    GraphTensors,
    PolicyValueNet,
    build_net,
    load_checkpoint,
    save_checkpoint,
)
from .ppo import ppo_loss_terms, ppo_update
from .protocol import AgentSession, serve

__all__ = [
    "AgentSession",
    "AllSetLayer",
    "ForwardResult",
    "GraphState",
    "GraphTensors",
    "ModelConfig",
    "PolicyValueNet",
    "build_net",
    "hypergraph_laplacian",
    "load_checkpoint",
    "ppo_loss_terms",
    "ppo_update",
    "save_checkpoint",
    "serve",
    "spectral_init",
]
