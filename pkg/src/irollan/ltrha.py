"""The social layer: sub-environment topics, resource-gated execution,
ranked zero-sum resource reallocation, and habitus-informed action
composition.

Names follow the engine's domain terms: the "topic" is an area's scalar
emotional atmosphere, the "matrix" is the ranking-and-reallocation
mechanism, and "habitus" is an agent's per-context action disposition.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from random import Random
from typing import Iterable, Mapping, Protocol, Sequence

FILTER_MARKER = "(This action has been filtered by LTRHA) "

GENERATION_PROMPT = """You are {agent} in IrollanValley.
Goal: {goal}
Observation: {observation}
Consciousness: {channel}
Driver: {driver}
Habitus: {habitus}
Balance: {balance}
Topic: {topic}
Actions you may take: {candidates}
Reply in two lines:
Thought: <first-person reflection>
Action: <exactly one action from the list>"""

RANKER_PROMPT = """Rank the agents from most to least conducive to the scene.
Topic: {topic}
Agents:
{agents}
Reply with the agent ids, most conducive first, comma-separated."""

_RANKER_LINE = "- id: {id} | balance: {balance} | action: {action} | goal: {goal}"


class RankingError(ValueError):
    """The ranker reply is not a permutation of the scene's agents."""


class Ranker(Protocol):
    def rank(self, prompt: str, agent_ids: Sequence[str]) -> str: ...


class Generator(Protocol):
    def generate(self, prompt: str) -> str: ...


@dataclass
class SubEnvironment:
    """One area viewed as an interactive space: its objects, its
    occupants, and the scalar atmosphere they produce."""

    area_id: str
    locale: tuple[str, ...]
    occupants: tuple[str, ...]
    topic: float = 0.0


@dataclass
class ResourceLedger:
    """Per-agent resource balances with the allocation bounds."""

    balances: dict[str, int]
    s_min: int = 1
    s_max: int = 3
    min_balance: int = -10
    max_balance: int = 10

    @classmethod
    def initial(cls, agent_ids: Iterable[str], s_min: int = 1, s_max: int = 3) -> "ResourceLedger":
        return cls(balances={a: 1 for a in agent_ids}, s_min=s_min, s_max=s_max)

    def snapshot_line(self) -> str:
        pairs = ", ".join(f"{a}: {b}" for a, b in self.balances.items())
        return f"Resource Allocation: {pairs}"

    def total(self) -> int:
        return sum(self.balances.values())


@dataclass
class HabitusRecord:
    """Execution counts per (area, primitive kind) pair."""

    counts: dict[tuple[str, str], int] = field(default_factory=dict)
    last_updated: int = 0

    def top(self, n: int = 3) -> list[tuple[tuple[str, str], int]]:
        ranked = sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return ranked[:n]

    def render_top(self, n: int = 3) -> str:
        entries = self.top(n)
        if not entries:
            return "none yet"
        return ", ".join(f"{kind} in {area} x{count}" for (area, kind), count in entries)


def primitive_kind(action: str) -> str:
    """First word of the action text: go/use/leave/take/put/chat."""
    return action.split(maxsplit=1)[0] if action.strip() else ""


def update_habitus(record: HabitusRecord, area: str, action: str, step: int = 0) -> HabitusRecord:
    key = (area, primitive_kind(action))
    record.counts[key] = record.counts.get(key, 0) + 1
    record.last_updated = step
    return record


def compute_topic(occupants: Sequence) -> float:
    """Mean of P_i * (A_i + 1) / 2 over occupant emotion states.

    An empty area has no atmosphere: 0 by convention.
    """
    if not occupants:
        return 0.0
    total = sum(s.pleasure * (s.arousal + 1.0) / 2.0 for s in occupants)
    return total / len(occupants)


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def act_probability(balance: int) -> float:
    """Probability the gate lets an action through: 0.5 + sigmoid(S)/2."""
    return 0.5 + _sigmoid(balance) / 2.0


def rank_to_allocation(rank_j: int, n: int, s_min: int, s_max: int) -> float:
    """Zero-sum allocation ramp over rank positions 1..n.

    Positive for the top half, mirrored negative for the bottom half,
    zero at the exact midpoint of an odd-sized scene.
    """
    if n < 3:
        raise ValueError(f"allocation needs at least 3 agents, got {n}")
    if not (1 <= rank_j <= n):
        raise ValueError(f"rank {rank_j} out of 1..{n}")
    if s_min > s_max:
        raise ValueError(f"s_min must not exceed s_max: {s_min} > {s_max}")
    if 2 * rank_j == n + 1:
        return 0.0
    half = n / 2.0
    scale = (s_max - s_min) / abs(half - 1.0)
    if rank_j <= half:
        return s_min + abs(rank_j - half) * scale
    return -(s_min + abs(rank_j - half - 1.0) * scale)


def _round_toward_zero_ties(x: float) -> int:
    """Nearest integer; exact halves round toward zero."""
    return int(math.copysign(math.ceil(abs(x) - 0.5), x))


@dataclass
class AllocationReport:
    """Outcome of one matrix step over one sub-environment."""

    ranking: tuple[str, ...] = ()
    deltas: dict[str, int] = field(default_factory=dict)
    residue: int = 0
    clamp_adjustment: int = 0
    skipped: bool = False
    reason: str | None = None


def render_ranker_prompt(
    entries: Sequence[tuple[str, str, int, str]], topic: float
) -> str:
    lines = "\n".join(
        _RANKER_LINE.format(id=a, balance=balance, action=action, goal=goal)
        for a, action, balance, goal in entries
    )
    return RANKER_PROMPT.format(topic=topic, agents=lines)


def parse_ranking(reply: str, agent_ids: Sequence[str]) -> tuple[str, ...]:
    tokens = [t for t in re.split(r"[^\w']+", reply) if t]
    ranked = [t for t in tokens if t in set(agent_ids)]
    if sorted(ranked) != sorted(agent_ids):
        raise RankingError(f"reply is not a permutation of {list(agent_ids)}: {reply!r}")
    return tuple(ranked)


def matrix_step(
    actions: Mapping[str, str],
    ledger: ResourceLedger,
    topic: float,
    ranker: Ranker,
    goals: Mapping[str, str] | None = None,
) -> AllocationReport:
    """Rank the scene's agents and redistribute resources by rank.

    Applies the rounded allocation (ties toward zero) and clamps balances
    to the ledger bounds. Scenes below 3 agents skip allocation. A
    non-permutation ranker reply raises RankingError with the ledger
    untouched.
    """
    ids = sorted(actions)
    n = len(ids)
    if n < 3:
        return AllocationReport(skipped=True, reason=f"only {n} occupants")

    goals = goals or {}
    entries = [(a, actions[a], ledger.balances.get(a, 0), goals.get(a, "")) for a in ids]
    prompt = render_ranker_prompt(entries, topic)
    ranking = parse_ranking(ranker.rank(prompt, ids), ids)

    deltas: dict[str, int] = {}
    clamp_adjustment = 0
    for position, agent in enumerate(ranking, start=1):
        delta = _round_toward_zero_ties(rank_to_allocation(position, n, ledger.s_min, ledger.s_max))
        deltas[agent] = delta
        raw = ledger.balances.get(agent, 0) + delta
        clamped = min(max(raw, ledger.min_balance), ledger.max_balance)
        clamp_adjustment += clamped - raw
        ledger.balances[agent] = clamped
    return AllocationReport(
        ranking=ranking,
        deltas=deltas,
        residue=sum(deltas.values()),
        clamp_adjustment=clamp_adjustment,
    )


def social_gate(
    agent_id: str, action: str, ledger: ResourceLedger, rng: Random
) -> tuple[bool, str | None]:
    """Resource-probability gate over a composed action.

    Returns (executed, marked_text); a filtered action carries the marker
    prefix and must have no world effect.
    """
    probability = act_probability(ledger.balances.get(agent_id, 0))
    if rng.random() < probability:
        return True, None
    return False, FILTER_MARKER + action


def action_in_space(action: str, candidates: Sequence[str]) -> bool:
    """Exact membership, or a chat stem extended with ': content'."""
    if action in candidates:
        return True
    for stem in candidates:
        if stem.startswith("chat with ") and action.startswith(stem + ":"):
            return True
    return False


def render_generation_prompt(
    agent,
    observation: str,
    channel_summary: str,
    topic: float,
    balance: int,
    candidates: Sequence[str],
) -> str:
    return GENERATION_PROMPT.format(
        agent=agent.id,
        goal=agent.goal,
        observation=observation,
        channel=channel_summary,
        driver=agent.driver_state.driver,
        habitus=agent.habitus.render_top(3),
        balance=balance,
        topic=topic,
        candidates=", ".join(candidates),
    )


def parse_generation(reply: str) -> tuple[str, str]:
    thought, action = "", ""
    for line in reply.splitlines():
        stripped = line.strip()
        if stripped.startswith("Thought:"):
            thought = stripped[len("Thought:"):].strip()
        elif stripped.startswith("Action:"):
            action = stripped[len("Action:"):].strip()
    return thought, action


def compose_action(
    agent,
    env: SubEnvironment,
    candidates: Sequence[str],
    generator: Generator,
    observation: str,
    channel_summary: str,
    balance: int,
) -> tuple[str, str]:
    """Generate (thought, action) for the agent's turn.

    `agent` provides id, goal, driver_state, and habitus; `candidates` is
    the reduced action space, best candidate first. A generated action
    outside the space is regenerated once and then falls back to the top
    candidate. Transport errors propagate to the runtime.
    """
    if not candidates:
        raise ValueError("reduced action space must be nonempty")
    prompt = render_generation_prompt(agent, observation, channel_summary, env.topic, balance, candidates)
    thought = ""
    for _ in range(2):
        reply = generator.generate(prompt)
        thought, action = parse_generation(reply)
        if action and action_in_space(action, candidates):
            return thought, action
    return thought, candidates[0]
