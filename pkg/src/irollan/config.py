"""Simulation configuration: every knob of every module, validated up
front and serialized verbatim into the run manifest."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

from .backends import BackendConfig
from .fields import BlendConfig

DEFAULT_AGENTS = ("AY", "LL", "MD", "SG", "WL", "WM")
DEFAULT_GOAL = "live well in IrollanValley and get along with others"


@dataclass
class SimulationConfig:
    steps: int = 75
    agents: tuple[str, ...] = DEFAULT_AGENTS
    seed: int = 42
    world_path: str | None = None  # None -> packaged default world
    out_dir: str | None = None

    blend: BlendConfig = field(default_factory=BlendConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)

    memory_capacity: int = 200
    compression_window: int = 10
    retention_window: int = 5
    activation_top_k: int = 3

    emotion_weights: tuple[float, float, float] = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    diff_scale: float = 2.0
    initial_driver: float = 1.0
    desire_per_success: float = 1.0
    desire_per_chat_received: float = 1.0
    pain_per_failure: float = 1.0
    pain_per_filtered: float = 1.0
    # Accumulated signals are capped where float tanh is still < 1, so the
    # pleasure value stays strictly inside (-1, 1).
    signal_cap: float = 15.0

    elimination_threshold: float = 3.0

    s_min: int = 1
    s_max: int = 3
    min_balance: int = -10
    max_balance: int = 10

    goal_text: str = DEFAULT_GOAL

    def __post_init__(self) -> None:
        self.agents = tuple(self.agents)
        self.validate()

    def validate(self) -> None:
        if self.steps < 1:
            raise ValueError(f"steps must be positive: {self.steps}")
        if not self.agents or len(set(self.agents)) != len(self.agents):
            raise ValueError(f"agents must be nonempty and unique: {self.agents}")
        if abs(sum(self.emotion_weights) - 1.0) > 1e-9:
            raise ValueError(f"emotion weights must sum to 1: {self.emotion_weights}")
        if not (1.0 <= self.elimination_threshold <= 5.0):
            raise ValueError(f"elimination threshold out of [1, 5]: {self.elimination_threshold}")
        if self.s_min > self.s_max:
            raise ValueError(f"s_min must not exceed s_max: {self.s_min} > {self.s_max}")
        if self.retention_window < 1 or self.memory_capacity < 1 or self.compression_window < 1:
            raise ValueError("memory windows must be positive")

    def resolved_backend(self) -> BackendConfig:
        """Backend config with the seed derived from the run seed when unset."""
        if self.backend.mode == "mock" and self.backend.seed == 0:
            return replace(self.backend, seed=self.seed)
        return self.backend

    def to_dict(self) -> dict:
        data = asdict(self)
        data["agents"] = list(self.agents)
        data["emotion_weights"] = list(self.emotion_weights)
        data["blend"] = asdict(self.blend)
        data["backend"] = self.backend.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationConfig":
        kwargs = dict(data)
        if "agents" in kwargs:
            kwargs["agents"] = tuple(kwargs["agents"])
        if "emotion_weights" in kwargs:
            kwargs["emotion_weights"] = tuple(kwargs["emotion_weights"])
        if isinstance(kwargs.get("blend"), dict):
            kwargs["blend"] = BlendConfig(**kwargs["blend"])
        if isinstance(kwargs.get("backend"), dict):
            kwargs["backend"] = BackendConfig(**kwargs["backend"])
        known = {f for f in cls.__dataclass_fields__}  # tolerate manifest extras
        return cls(**{k: v for k, v in kwargs.items() if k in known})
