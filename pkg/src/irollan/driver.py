"""Emotion (pleasure/arousal/dominance) and the motivation scalar that
biases action selection.

All compute_* functions are pure; DriverState is per-agent and mutated
only on the owning agent's turn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .fields import BlendConfig, PhenomenalField, field_similarity


@dataclass(frozen=True)
class AffectSignals:
    """Accumulated reward-like and punishment-like magnitudes."""

    desire: float = 0.0
    pain: float = 0.0

    def __post_init__(self) -> None:
        if self.desire < 0.0 or self.pain < 0.0:
            raise ValueError(f"desire and pain must be nonnegative: {self}")


@dataclass
class DriverState:
    """PAD emotion triple plus the running motivation value."""

    pleasure: float = 0.0
    arousal: float = 0.0
    dominance: float = 0.0
    previous_arousal: float = 0.0
    driver: float = 1.0
    previous_bias: float = 0.0
    weights: tuple[float, float, float] = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)

    def __post_init__(self) -> None:
        _check_weights(self.weights)

    def emotion_triple(self) -> list[float]:
        """Log order is [P, A, D]."""
        return [self.pleasure, self.arousal, self.dominance]


def _check_weights(weights: Sequence[float]) -> None:
    if len(weights) != 3 or any(w < 0.0 for w in weights):
        raise ValueError(f"weights must be three nonnegative values: {weights}")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError(f"emotion weights must sum to 1: {weights}")


def field_diff(x: PhenomenalField, y: PhenomenalField, diff_scale: float, cfg: BlendConfig) -> float:
    """Scaled dissimilarity, floored at zero. Empty operands count as
    fully novel (similarity 0)."""
    if not x.rows or not y.rows:
        similarity = 0.0
    else:
        similarity = field_similarity(x, y, cfg)
    return max(diff_scale * (1.0 - similarity), 0.0)


def compute_pleasure(signals: AffectSignals) -> float:
    """tanh(desire) - tanh(pain), strictly inside (-1, 1)."""
    return math.tanh(signals.desire) - math.tanh(signals.pain)


def arousal_weight(n: int, t: int) -> float:
    """Recency weight of the n-th oldest retained frame at step t."""
    return 2.0 * n / (t * (t - 1))


def compute_arousal(
    pi: PhenomenalField,
    retention: Sequence[PhenomenalField],
    t: int,
    diff_scale: float,
    cfg: BlendConfig,
) -> float:
    """tanh of the recency-weighted novelty of the impression against
    retention. Degenerate inputs (t < 2 or no retention) give 0."""
    if t < 2 or not retention:
        return 0.0
    total = 0.0
    for n, retained in enumerate(retention, start=1):
        total += arousal_weight(n, t) * field_diff(pi, retained, diff_scale, cfg)
    return math.tanh(total)


def compute_dominance(
    pi: PhenomenalField,
    previous_protention: PhenomenalField | None,
    diff_scale: float,
    cfg: BlendConfig,
) -> float:
    """tanh of how far the present diverged from the previous forecast.
    Absent or empty forecast (first step) gives 0."""
    if previous_protention is None or not previous_protention.rows or not pi.rows:
        return 0.0
    return math.tanh(field_diff(pi, previous_protention, diff_scale, cfg))


def compute_bias(state: DriverState) -> float:
    """w_P*P + w_D*D + w_A*(1 - |A_t - A_{t-1}|)."""
    _check_weights(state.weights)
    w_p, w_a, w_d = state.weights
    stability = 1.0 - abs(state.arousal - state.previous_arousal)
    return w_p * state.pleasure + w_d * state.dominance + w_a * stability


def update_driver(state: DriverState, new_bias: float) -> DriverState:
    """Accumulate motivation: the need is half the bias swing, and the
    driver moves by need * bias."""
    need = abs(new_bias - state.previous_bias) / 2.0
    state.driver += need * new_bias
    state.previous_bias = new_bias
    return state
