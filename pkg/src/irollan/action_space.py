"""Zero-shot action-space reduction: every candidate action is scored for
relevance to the agent's goal before any forecasting happens, and
low-scoring candidates are dropped."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Protocol, Sequence

# Rendered verbatim, including the source grammar of the final question;
# scoring backends may be sensitive to the exact string.
ELIMINATION_TEMPLATE = "Your task is to: {goal}. The actions you can take are: {actions}. The {candidate} will be relevant?"

SCORE_MIN = 1.0
SCORE_MAX = 5.0
NEUTRAL_SCORE = 3.0

_NUMBER = re.compile(r"-?\d+(?:\.\d+)?")


class Scorer(Protocol):
    def score(self, prompt: str) -> str:
        """Return a decimal confidence score as text."""


@dataclass
class ActionCandidate:
    text: str
    score: float | None = None
    eliminated: bool = False


@dataclass(frozen=True)
class EliminationRequest:
    goal: str
    action_space: tuple[str, ...]
    prompt: str


def render_elimination_prompt(goal: str, action_space: Sequence[str], candidate: str) -> str:
    if not goal:
        raise ValueError("goal must be nonempty")
    if not candidate:
        raise ValueError("candidate must be nonempty")
    return ELIMINATION_TEMPLATE.format(goal=goal, actions=", ".join(action_space), candidate=candidate)


def _parse_score(reply: str) -> float | None:
    match = _NUMBER.search(reply)
    return float(match.group()) if match else None


def score_action(request: EliminationRequest, candidate: str, scorer: Scorer) -> float:
    """Score one candidate, clamped to [1, 5].

    An unparseable reply is retried once, then defaults to the neutral
    midpoint. Transport errors propagate to the caller.
    """
    value = _parse_score(scorer.score(request.prompt))
    if value is None:
        value = _parse_score(scorer.score(request.prompt))
    if value is None:
        return NEUTRAL_SCORE
    return min(max(value, SCORE_MIN), SCORE_MAX)


def reduce_action_space(
    goal: str,
    actions: Sequence[str],
    threshold: float,
    scorer: Scorer,
) -> tuple[list[ActionCandidate], list[ActionCandidate]]:
    """Partition actions into (kept, eliminated) by score >= threshold.

    Input order is preserved within each partition. The kept side is never
    empty: if everything scores below the threshold, the single best
    candidate survives.
    """
    if not actions:
        raise ValueError("action space must be nonempty")
    if not (SCORE_MIN <= threshold <= SCORE_MAX):
        raise ValueError(f"threshold out of [{SCORE_MIN}, {SCORE_MAX}]: {threshold}")

    space = tuple(actions)
    candidates = []
    for text in space:
        request = EliminationRequest(goal=goal, action_space=space, prompt=render_elimination_prompt(goal, space, text))
        candidates.append(ActionCandidate(text=text, score=score_action(request, text, scorer)))

    kept = [c for c in candidates if c.score >= threshold]
    eliminated = [c for c in candidates if c.score < threshold]
    if not kept:
        best = max(candidates, key=lambda c: c.score)
        eliminated = [c for c in candidates if c is not best]
        kept = [best]
    for c in eliminated:
        c.eliminated = True
    return kept, eliminated
