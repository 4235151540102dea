"""Turn loop, seeding, and episode lifecycle.

Within a turn the order is fixed: validate both defender actions, execute
the user agent's then the operational agent's valid actions, let the
attacker plan and act, draw exploit detection, score, encode observations,
advance the clock. Randomness comes from four independent counter-based
streams split from one seed (attacker, detection, and one per defender), so
episodes replay byte-identically regardless of which consumer draws first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attacker import AttackerEvent, execute_attacker_action, plan_action
from .defender import (
    ActionSpace,
    AgentId,
    DefenderAction,
    DefenderEvent,
    DefenderKnowledge,
    execute_defender_action,
    new_knowledge,
    validate,
    well_formed,
)
from .errors import PolicyError, ProtocolError
from .scoring import (
    ObservationFrame,
    RewardBreakdown,
    compromised_hosts,
    encode_observation,
    step_reward,
)
from .world import (
    GlobalState,
    ScenarioConfig,
    build_topology,
    topology_digest,
)

STREAM_NAMES = ("attacker", "detection", "defender_user", "defender_op")


@dataclass
class RngStreams:
    attacker: np.random.Generator
    detection: np.random.Generator
    defender_user: np.random.Generator
    defender_op: np.random.Generator

    def for_agent(self, agent: AgentId) -> np.random.Generator:
        return self.defender_user if agent is AgentId.USER else self.defender_op


def make_streams(seed: int) -> RngStreams:
    children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
    return RngStreams(*(np.random.Generator(np.random.Philox(c)) for c in children))


@dataclass
class StepResult:
    observations: dict[AgentId, ObservationFrame]
    reward: float
    done: bool
    info: dict


def state_summary(state: GlobalState) -> list[int]:
    """Flat ground-truth vector (per host: privilege code, tampered flag,
    denial processes, decoys) for centralised critics."""
    out: list[int] = []
    for host in state.hosts:
        session = host.session
        priv = 0 if session is None else (1 if session.privilege.value == "user" else 2)
        out.extend(
            [priv, int(host.has_tampered_file()), len(host.dos_processes()), len(host.decoy_services)]
        )
    return out


class SubnetDefenseEnv:
    """Two-defender environment over the fixed nine-host network."""

    def __init__(self, config: ScenarioConfig):
        config.validate()
        self.config = config
        self.space = ActionSpace(config)
        self.state: GlobalState | None = None
        self.knowledge: dict[AgentId, DefenderKnowledge] = {}
        self.streams: RngStreams | None = None
        self.done = False
        self.seed: int | None = None
        self.last_turn_events: list = []
        self.reward_history: list[RewardBreakdown] = []

    def reset(self, seed: int | None = None) -> dict[AgentId, ObservationFrame]:
        self.seed = self.config.seed if seed is None else seed
        self.streams = make_streams(self.seed)
        self.state = build_topology(self.config)
        self.knowledge = {agent: new_knowledge(agent) for agent in AgentId}
        self.done = False
        self.last_turn_events = []
        self.reward_history = []
        return self.frames()

    def frames(self) -> dict[AgentId, ObservationFrame]:
        return {
            agent: encode_observation(
                self.state, self.knowledge[agent], self.last_turn_events, agent, self.space
            )
            for agent in AgentId
        }

    def step(self, actions: dict[AgentId, DefenderAction]) -> StepResult:
        if self.state is None:
            raise ProtocolError("no_game", "reset before stepping")
        if self.done:
            raise ProtocolError("episode_done", "episode finished; reset to continue")
        if set(actions) != set(AgentId):
            raise ProtocolError("bad_action", "exactly one action per defender agent")
        for agent, action in actions.items():
            if action.agent is not agent:
                raise ProtocolError(
                    "wrong_agent", f"action for {action.agent.value} filed under {agent.value}"
                )
            well_formed(self.config, action)

        state = self.state
        validity = {
            agent: validate(state, self.knowledge[agent], actions[agent]) for agent in AgentId
        }
        defender_events: list[DefenderEvent] = []
        for agent in (AgentId.USER, AgentId.OP):
            action = actions[agent]
            if validity[agent]:
                defender_events.append(
                    execute_defender_action(
                        state, self.knowledge[agent], action, self.streams.for_agent(agent)
                    )
                )
            else:
                defender_events.append(
                    DefenderEvent(
                        turn=state.turn,
                        agent=agent.value,
                        verb=action.verb.value,
                        target=action.target,
                        valid=False,
                    )
                )

        attacker_action = plan_action(state, self.streams.attacker)
        attacker_events = execute_attacker_action(state, attacker_action, self.streams.attacker)
        for event in attacker_events:
            if event.verb == "exploit":
                event.detected = self.streams.detection.random() < self.config.detection_prob

        turn_events = [*defender_events, *attacker_events]
        state.event_log.extend(turn_events)
        breakdown = step_reward(state, defender_events)
        self.reward_history.append(breakdown)
        self.last_turn_events = turn_events

        played_turn = state.turn
        state.turn += 1
        self.done = state.turn >= self.config.episode_length
        info = {
            "turn": played_turn,
            "compromised": compromised_hosts(state),
            "attacker": {
                "verb": attacker_events[0].verb,
                "target": attacker_events[0].target,
            },
            "reward_breakdown": breakdown.to_dict(),
            "state": state_summary(state),
        }
        return StepResult(
            observations=self.frames(),
            reward=breakdown.total,
            done=self.done,
            info=info,
        )


@dataclass
class EpisodeRecord:
    config: ScenarioConfig
    seed: int
    topology_digest: str
    events: list = field(default_factory=list)
    breakdowns: list[RewardBreakdown] = field(default_factory=list)

    @property
    def episode_return(self) -> float:
        return sum(b.total for b in self.breakdowns)

    @property
    def per_turn_rewards(self) -> list[float]:
        return [b.total for b in self.breakdowns]


def run_episode(
    config: ScenarioConfig,
    seed: int,
    policies: dict,
    replay_path=None,
) -> EpisodeRecord:
    """Play one full episode with the given per-agent policies.

    Policies expose reset(env) and act(env, frame) -> DefenderAction. If a
    policy raises, the partial episode is still written (when a path was
    given) and a PolicyError carrying the partial record propagates.
    """
    from .replay import write_replay

    env = SubnetDefenseEnv(config)
    frames = env.reset(seed)
    for policy in policies.values():
        policy.reset(env)
    record = EpisodeRecord(
        config=config, seed=env.seed, topology_digest=topology_digest(env.state)
    )
    while not env.done:
        try:
            actions = {agent: policies[agent].act(env, frames[agent]) for agent in AgentId}
        except Exception as exc:
            record.events = list(env.state.event_log)
            record.breakdowns = list(env.reward_history)
            if replay_path is not None:
                write_replay(record, replay_path, partial=True)
            raise PolicyError(f"policy failed on turn {env.state.turn}: {exc}", record) from exc
        result = env.step(actions)
        frames = result.observations
    record.events = list(env.state.event_log)
    record.breakdowns = list(env.reward_history)
    if replay_path is not None:
        write_replay(record, replay_path)
    return record
