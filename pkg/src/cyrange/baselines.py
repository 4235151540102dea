"""Scripted defender policies: passive, uniform-random, and the alert-queue
heuristic used as the learning baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .defender import (
    AGENT_SUBNET,
    ActionSpace,
    AgentId,
    DefenderAction,
    DefenderVerb,
)
from .world import GlobalState, Goal

MISINFORM_TURNS = 5


class PassivePolicy:
    """Monitors every turn. Useful as a no-defence floor."""

    def __init__(self, agent: AgentId):
        self.agent = agent

    def reset(self, env) -> None:
        pass

    def act(self, env, frame) -> DefenderAction:
        return DefenderAction(self.agent, DefenderVerb.MONITOR)


def random_act(
    space: ActionSpace, agent: AgentId, avail_mask, rng: np.random.Generator
) -> DefenderAction:
    available = [i for i, bit in enumerate(avail_mask) if bit]
    if not available:
        raise ValueError("no available actions in mask")
    return space.decode(agent, available[int(rng.integers(len(available)))])


class RandomPolicy:
    """Uniform over currently available action indices."""

    def __init__(self, agent: AgentId):
        self.agent = agent
        self.rng: np.random.Generator | None = None

    def reset(self, env) -> None:
        self.rng = env.streams.for_agent(self.agent)

    def act(self, env, frame) -> DefenderAction:
        return random_act(env.space, self.agent, frame.avail_mask, self.rng)


def heuristic_alerts(state: GlobalState, turn_events, agent: AgentId) -> dict[int, str]:
    """True-state alerts for one agent's subnet, keyed by host.

    Session creation (confidentiality/integrity) and denial-process creation
    (availability) alert from the turn's events; under the integrity goal a
    host keeps alerting "tamper" for as long as any of its files is tampered.
    Insertion order is deterministic: event order first, then id order.
    """
    goal = state.config.goal
    subnet = AGENT_SUBNET[agent]
    alerts: dict[int, str] = {}
    for event in turn_events:
        verb = getattr(event, "verb", None)
        if not getattr(event, "success", False):
            continue
        if verb == "exploit" and goal in (Goal.CONFIDENTIALITY, Goal.INTEGRITY):
            kind = "session"
        elif verb == "deny" and goal is Goal.AVAILABILITY:
            kind = "dos"
        else:
            continue
        if state.host(event.target).subnet is subnet:
            alerts.setdefault(event.target, kind)
    if goal is Goal.INTEGRITY:
        for host in state.hosts_in(subnet):
            if host.has_tampered_file():
                alerts.setdefault(host.id, "tamper")
    return alerts


@dataclass
class HeuristicMemory:
    pending: list[tuple[int, str]] = field(default_factory=list)
    queued: set[int] = field(default_factory=set)


class HeuristicPolicy:
    """Alert-driven responder. Alerts join a FIFO queue (one entry per host);
    the head is serviced with restore, except tampered-file alerts which are
    met with remove or restore at even odds. While misinform is enabled the
    first five turns instead plant decoys on random hosts. Idle turns
    monitor."""

    def __init__(self, agent: AgentId):
        self.agent = agent
        self.memory = HeuristicMemory()
        self.rng: np.random.Generator | None = None

    def reset(self, env) -> None:
        self.memory = HeuristicMemory()
        self.rng = env.streams.for_agent(self.agent)

    def act(self, env, frame) -> DefenderAction:
        state = env.state
        memory = self.memory
        for host_id, kind in heuristic_alerts(state, env.last_turn_events, self.agent).items():
            if host_id not in memory.queued:
                memory.pending.append((host_id, kind))
                memory.queued.add(host_id)
        if env.config.misinform_enabled and state.turn < MISINFORM_TURNS:
            candidates = [
                h.id
                for h in state.hosts_in(AGENT_SUBNET[self.agent])
                if len(h.decoy_services) < env.config.max_decoys
            ]
            if candidates:
                target = candidates[int(self.rng.integers(len(candidates)))]
                return DefenderAction(self.agent, DefenderVerb.MISINFORM, target)
        if memory.pending:
            host_id, kind = memory.pending.pop(0)
            memory.queued.discard(host_id)
            if kind == "tamper" and self.rng.random() < 0.5:
                return DefenderAction(self.agent, DefenderVerb.REMOVE, host_id)
            return DefenderAction(self.agent, DefenderVerb.RESTORE, host_id)
        return DefenderAction(self.agent, DefenderVerb.MONITOR)


POLICY_BUILDERS = {
    "passive": PassivePolicy,
    "random": RandomPolicy,
    "heuristic": HeuristicPolicy,
}


def make_policies(name: str) -> dict[AgentId, object]:
    builder = POLICY_BUILDERS[name]
    return {agent: builder(agent) for agent in AgentId}
