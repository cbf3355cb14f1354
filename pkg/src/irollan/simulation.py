"""Turn-loop orchestration: perception, memory, emotion, action-space
reduction, forecast-guided selection, the social gate, world mutation,
and per-area resource reallocation.

One simulation is one logical writer over world/ledger/memory; every
random draw comes from a per-agent seeded stream so replays are exact.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from random import Random

from . import action_space as elimination
from .backends import BackendError, embed_row, field_from_clauses, make_backend, observation_clauses, tokenize
from .config import SimulationConfig
from .driver import (
    AffectSignals,
    DriverState,
    compute_arousal,
    compute_bias,
    compute_dominance,
    compute_pleasure,
    update_driver,
)
from .fields import EmptyFieldError, PhenomenalField, field_similarity
from .ltrha import (
    AllocationReport,
    HabitusRecord,
    RankingError,
    ResourceLedger,
    SubEnvironment,
    compose_action,
    compute_topic,
    matrix_step,
    social_gate,
    update_habitus,
)
from .logio import MetricsSeries, RunWriter, StepRecord
from .memory import (
    ConsciousnessChannel,
    MemoryFrame,
    MemoryStore,
    activate,
    imagine,
    make_drift_predictor,
    persistence_with_drift,
)
from .world import WorldState, parse_action


@dataclass
class AgentState:
    """Everything one agent carries across turns."""

    id: str
    goal: str
    driver_state: DriverState
    habitus: HabitusRecord
    memory: MemoryStore
    retention: deque
    context_tokens: deque
    rng_blend: Random
    rng_gate: Random
    desire: float = 0.0
    pain: float = 0.0
    previous_protention: PhenomenalField | None = None
    last_action: str = ""


class Simulation:
    def __init__(self, config: SimulationConfig, world: WorldState | None = None, backend=None):
        config.validate()
        self.config = config
        self.world = world if world is not None else self._load_world(config)
        self.backend = backend if backend is not None else make_backend(config.resolved_backend())

        if set(config.agents) != set(self.world.agents):
            raise ValueError(
                f"config agents {sorted(config.agents)} do not match world agents {sorted(self.world.agents)}"
            )
        self.agent_order = sorted(config.agents)
        self.area_order = list(self.world.areas)

        self.agents: dict[str, AgentState] = {}
        for agent_id in self.agent_order:
            self.agents[agent_id] = AgentState(
                id=agent_id,
                goal=config.goal_text,
                driver_state=DriverState(driver=config.initial_driver, weights=config.emotion_weights),
                habitus=HabitusRecord(),
                memory=MemoryStore(capacity=config.memory_capacity, compression_window=config.compression_window),
                retention=deque(maxlen=config.retention_window),
                context_tokens=deque(maxlen=config.retention_window),
                rng_blend=Random(f"{config.seed}:{agent_id}:blend"),
                rng_gate=Random(f"{config.seed}:{agent_id}:gate"),
            )

        self.ledger = ResourceLedger.initial(self.agent_order, s_min=config.s_min, s_max=config.s_max)
        self.ledger.min_balance = config.min_balance
        self.ledger.max_balance = config.max_balance

        self.metrics = MetricsSeries(agent_order=self.agent_order, area_order=self.area_order)
        self.records: list[StepRecord] = []
        self.allocation_reports: list[tuple[int, str, AllocationReport]] = []
        self.current_topics: dict[str, float] = {area: 0.0 for area in self.area_order}
        self.step_index = 0
        self.version = 0
        self.elapsed_seconds = 0.0
        self._goal_fields: dict[str, PhenomenalField] = {}

    @staticmethod
    def _load_world(config: SimulationConfig) -> WorldState:
        if config.world_path:
            return WorldState.from_file(config.world_path)
        return WorldState.default()

    # -- one full time step -------------------------------------------------

    def run_step(self) -> list[StepRecord]:
        self.step_index += 1
        step_records = [self._agent_turn(agent_id, self.step_index) for agent_id in self.agent_order]

        for area in self.area_order:
            occupants = self.world.occupants(area)
            self.current_topics[area] = compute_topic([self.agents[a].driver_state for a in occupants])

        for area in self.area_order:
            occupants = sorted(self.world.occupants(area))
            if len(occupants) < 3:
                continue
            actions = {a: self.agents[a].last_action for a in occupants}
            goals = {a: self.agents[a].goal for a in occupants}
            try:
                report = matrix_step(actions, self.ledger, self.current_topics[area], self.backend, goals)
            except (RankingError, BackendError) as exc:
                report = AllocationReport(skipped=True, reason=f"allocation-skipped: {exc}")
            self.allocation_reports.append((self.step_index, area, report))

        self.metrics.append_step(
            driver={a: self.agents[a].driver_state.driver for a in self.agent_order},
            pleasure={a: self.agents[a].driver_state.pleasure for a in self.agent_order},
            arousal={a: self.agents[a].driver_state.arousal for a in self.agent_order},
            dominance={a: self.agents[a].driver_state.dominance for a in self.agent_order},
            resources=dict(self.ledger.balances),
            topics=dict(self.current_topics),
        )
        self.records.extend(step_records)
        self.version += 1
        return step_records

    def run(self, writer: RunWriter | None = None) -> list[StepRecord]:
        started = time.monotonic()
        for _ in range(self.config.steps):
            records = self.run_step()
            if writer is not None:
                writer.write_records(records)
        self.elapsed_seconds = time.monotonic() - started
        if writer is not None:
            ids, counts = self.world.interaction_matrix(self.agent_order)
            writer.finish(self.metrics, ids, counts)
        return self.records

    # -- the agent turn -------------------------------------------------------

    def _agent_turn(self, agent_id: str, t: int) -> StepRecord:
        state = self.agents[agent_id]
        world = self.world
        cfg = self.config
        faults: list[str] = []

        placement = world.placement(agent_id)
        place = placement.area
        resources_snapshot = dict(self.ledger.balances)

        observation = world.observe(agent_id)
        world.clear_chats(agent_id)
        clauses = observation_clauses(observation)
        context = set().union(*state.context_tokens) if state.context_tokens else set()

        try:
            pi = field_from_clauses(self.backend, clauses, context)
        except BackendError:
            faults.append("embedder")
            pi = PhenomenalField()

        ds = state.driver_state
        ds.previous_arousal = ds.arousal
        ds.pleasure = compute_pleasure(AffectSignals(desire=state.desire, pain=state.pain))
        ds.arousal = compute_arousal(pi, list(state.retention), t, cfg.diff_scale, cfg.blend)
        ds.dominance = compute_dominance(pi, state.previous_protention, cfg.diff_scale, cfg.blend)
        update_driver(ds, compute_bias(ds))

        activated = activate(state.memory, pi, list(state.retention), cfg.activation_top_k, cfg.blend, state.rng_blend)
        imagination = imagine(pi, activated, cfg.blend, state.rng_blend)
        channel = ConsciousnessChannel(
            retention=tuple(state.retention),
            primal_impression=pi,
            activated_memory=activated,
            imagination=imagination,
        )

        space = world.action_space_for(agent_id)
        if not space:
            # Degenerate area (custom worlds): nothing to do this turn.
            return self._idle_record(state, t, place, observation, pi, resources_snapshot)
        try:
            kept, _ = elimination.reduce_action_space(state.goal, space, cfg.elimination_threshold, self.backend)
            kept_texts = [c.text for c in kept]
        except BackendError:
            faults.append("scorer")
            kept_texts = list(space)

        ranked, protentions = self._rank_by_protention(state, channel, kept_texts, context, faults)
        channel.protention = protentions.get(ranked[0]) if ranked else None

        env = SubEnvironment(
            area_id=place,
            locale=world.locale(place),
            occupants=tuple(sorted(world.occupants(place))),
            topic=self.current_topics[place],
        )
        try:
            thought, action = compose_action(
                state, env, ranked, self.backend, observation, channel.summary(),
                balance=self.ledger.balances[agent_id],
            )
        except BackendError:
            faults.append("generator")
            thought, action = "", self._fallback_action(space)
        self._maybe_rewrite_goal(state, thought)

        cap = cfg.signal_cap
        executed, marked = social_gate(agent_id, action, self.ledger, state.rng_gate)
        if executed:
            outcome = world.apply_action(agent_id, action)
            if outcome.success:
                state.desire = min(state.desire + cfg.desire_per_success, cap)
                update_habitus(state.habitus, place, action, t)
                parsed = parse_action(action)
                if parsed and parsed[0] == "chat":
                    target = self.agents[parsed[1]]
                    target.desire = min(target.desire + cfg.desire_per_chat_received, cap)
            else:
                state.pain = min(state.pain + cfg.pain_per_failure, cap)
            outcome_label = outcome.label()
            logged_action = action
            filtered = False
        else:
            state.pain = min(state.pain + cfg.pain_per_filtered, cap)
            outcome_label = "filtered"
            logged_action = marked
            filtered = True
        if faults:
            outcome_label += " [faults: " + ",".join(faults) + "]"

        state.previous_protention = self._protention_for(action, protentions, channel)
        state.last_action = action

        state.memory.store_frame(
            MemoryFrame(
                field=pi,
                timestamp=t,
                arousal_at_encoding=ds.arousal,
                pleasure_at_encoding=ds.pleasure,
            ),
            cfg.blend,
            state.rng_blend,
        )
        state.retention.append(pi)
        state.context_tokens.append({token for clause in clauses for token in tokenize(clause)})

        return StepRecord(
            step=t,
            agent=agent_id,
            place=place,
            observation=observation,
            driver=ds.driver,
            emotion=ds.emotion_triple(),
            thought=thought,
            action=logged_action,
            filtered=filtered,
            outcome=outcome_label,
            resources=resources_snapshot,
        )

    # -- selection helpers ------------------------------------------------------

    def _goal_field(self, goal: str) -> PhenomenalField:
        # Token-level rows give the goal lexical resolution: an action row
        # sharing vocabulary with the goal wins its pairing decisively
        # instead of drowning in whole-bag hash noise.
        if goal not in self._goal_fields:
            clauses = [goal] + tokenize(goal)
            self._goal_fields[goal] = field_from_clauses(self.backend, clauses, set())
        return self._goal_fields[goal]

    def _rank_by_protention(
        self,
        state: AgentState,
        channel: ConsciousnessChannel,
        kept: list[str],
        context: set[str],
        faults: list[str],
    ) -> tuple[list[str], dict[str, PhenomenalField]]:
        """Forecast each surviving action and order them by driver-weighted
        similarity of the forecast to the goal (ties keep input order).

        A failed forecast substitutes the primal impression and notes the
        fault, so one bad prediction never aborts the turn.
        """
        goal_field = self._goal_field(state.goal)
        predict = make_drift_predictor(channel)
        scored: list[tuple[float, int, str]] = []
        protentions: dict[str, PhenomenalField] = {}
        for index, action in enumerate(kept):
            try:
                action_row = embed_row(self.backend, action, context)
                candidate = PhenomenalField(channel.imagination.rows + (action_row,))
                forecast = predict(candidate, state.driver_state.driver)
            except Exception as exc:
                fault = "embedder" if isinstance(exc, BackendError) else "protention"
                if fault not in faults:
                    faults.append(fault)
                forecast = channel.primal_impression
            protentions[action] = forecast
            try:
                similarity = field_similarity(forecast, goal_field, self.config.blend)
            except EmptyFieldError:
                similarity = 0.0
            scored.append((similarity * (1.0 + state.driver_state.driver), index, action))
        scored.sort(key=lambda item: (-item[0], item[1]))
        return [action for _, _, action in scored], protentions

    def _protention_for(
        self, action: str, protentions: dict[str, PhenomenalField], channel: ConsciousnessChannel
    ) -> PhenomenalField:
        if action in protentions:
            return protentions[action]
        # Chat actions extend a scored stem with generated content.
        parsed = parse_action(action)
        if parsed and parsed[0] == "chat":
            stem = f"chat with {parsed[1]}"
            if stem in protentions:
                return protentions[stem]
        return persistence_with_drift(channel, channel.imagination, 0.0)

    def _fallback_action(self, space: list[str]) -> str:
        """Degraded turn: prefer a no-op use of present furniture."""
        for action in space:
            if action.startswith("use "):
                return action
        return space[0]

    def _idle_record(self, state, t, place, observation, pi, resources_snapshot) -> StepRecord:
        """Close out a turn that offered no legal action."""
        ds = state.driver_state
        state.last_action = ""
        state.previous_protention = pi
        state.memory.store_frame(
            MemoryFrame(field=pi, timestamp=t, arousal_at_encoding=ds.arousal, pleasure_at_encoding=ds.pleasure),
            self.config.blend,
            state.rng_blend,
        )
        state.retention.append(pi)
        state.context_tokens.append({token for clause in observation_clauses(observation) for token in tokenize(clause)})
        return StepRecord(
            step=t,
            agent=state.id,
            place=place,
            observation=observation,
            driver=ds.driver,
            emotion=ds.emotion_triple(),
            thought="",
            action="",
            filtered=False,
            outcome="failure:no-legal-action",
            resources=resources_snapshot,
        )

    @staticmethod
    def _maybe_rewrite_goal(state: AgentState, thought: str) -> None:
        for line in thought.splitlines():
            stripped = line.strip()
            if stripped.startswith("Goal:"):
                new_goal = stripped[len("Goal:"):].strip()
                if new_goal:
                    state.goal = new_goal


def run_simulation(config: SimulationConfig, world: WorldState | None = None, backend=None) -> Simulation:
    """Run a configured simulation to completion, exporting if out_dir set."""
    simulation = Simulation(config, world=world, backend=backend)
    writer = RunWriter(config.out_dir, config) if config.out_dir else None
    try:
        simulation.run(writer)
    except Exception:
        if writer is not None:
            writer.abort()
        raise
    return simulation
