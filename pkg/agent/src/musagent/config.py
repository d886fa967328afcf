"""Model and training hyperparameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class ModelConfig:
    feature_dim: int = 64
    num_allset_layers: int = 3
    num_decoder_layers: int = 3
    num_heads: int = 4
    head_layers: int = 2  # feed-forward depth of the policy/value heads
    learning_rate: float = 2e-5
    batch_size: int = 1024  # via gradient accumulation
    ppo_epochs: int = 4
    clip_ratio: float = 0.2
    discount: float = 1.0  # terminal-reward episodes
    gae_lambda: float = 0.95
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    normalize_advantages: bool = True

    def __post_init__(self):
        if self.feature_dim % self.num_heads != 0:
            raise ValueError("feature_dim must be divisible by num_heads")
        for name in ("learning_rate", "clip_ratio", "discount", "gae_lambda"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in obj.items() if k in known})
