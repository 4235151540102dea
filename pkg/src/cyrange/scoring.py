"""Joint reward and per-agent observation encoding.

Rewards are shared and never positive: a compromise term (importance-weighted,
by scenario goal), restore costs, and a flat charge per invalid action.
Observations are six flags per subnet host -- scanned-this-turn,
exploit-attempt-detected-this-turn, then a one-hot belief over
clean/unknown/user/root -- zero-padded to a fixed frame length so both agents
share one shape.
"""

from __future__ import annotations

from dataclasses import dataclass

from .attacker import AttackerEvent
from .defender import (
    AGENT_SUBNET,
    ActionSpace,
    AgentId,
    Belief,
    DefenderKnowledge,
)
from .world import GlobalState, Goal, Host, Privilege, USER_HOST_IDS, OP_HOST_IDS

FLAGS_PER_HOST = 6
MAX_SUBNET_HOSTS = max(len(USER_HOST_IDS), len(OP_HOST_IDS))
FRAME_LENGTH = FLAGS_PER_HOST * MAX_SUBNET_HOSTS

_BELIEF_SLOT = {
    Belief.CLEAN: 0,
    Belief.UNKNOWN: 1,
    Belief.USER_SESSION: 2,
    Belief.ROOT_SESSION: 3,
}

INVALID_ACTION_PENALTY = 0.1


@dataclass
class RewardBreakdown:
    compromise_term: float
    restore_penalties: float
    invalid_penalties: float

    @property
    def total(self) -> float:
        return self.compromise_term + self.restore_penalties + self.invalid_penalties

    def to_dict(self) -> dict:
        return {
            "compromise_term": self.compromise_term,
            "restore_penalties": self.restore_penalties,
            "invalid_penalties": self.invalid_penalties,
            "total": self.total,
        }


@dataclass
class ObservationFrame:
    agent: AgentId
    flags: list[int]
    avail_mask: list[int]


def is_compromised(host: Host, goal: Goal) -> bool:
    """Goal-dependent loss condition for one host."""
    if goal is Goal.CONFIDENTIALITY:
        return host.session is not None
    if goal is Goal.INTEGRITY:
        return host.has_tampered_file()
    return len(host.dos_processes()) > 0


def compromised_hosts(state: GlobalState) -> list[int]:
    goal = state.config.goal
    return [h.id for h in state.hosts if is_compromised(h, goal)]


def step_reward(state: GlobalState, defender_events) -> RewardBreakdown:
    goal = state.config.goal
    compromise = 0.0
    for host in state.hosts:  # id order, so float sums replay identically
        if is_compromised(host, goal):
            compromise -= host.importance
    restore = 0.0
    invalid = 0
    for event in defender_events:
        if not event.valid:
            invalid += 1
        elif event.verb == "restore":
            restore -= event.penalty
    return RewardBreakdown(
        compromise_term=compromise,
        restore_penalties=restore,
        invalid_penalties=-INVALID_ACTION_PENALTY * invalid,
    )


def encode_observation(
    state: GlobalState,
    knowledge: DefenderKnowledge,
    turn_events,
    agent: AgentId,
    space: ActionSpace,
) -> ObservationFrame:
    """Pure encoding of one agent's view after a turn's events.

    `turn_events` are the just-resolved turn's events; the caller draws any
    detection randomness beforehand (exploit events arrive with `detected`
    already set).
    """
    scanned = set()
    exploit_seen = set()
    for event in turn_events:
        if not isinstance(event, AttackerEvent):
            continue
        if event.verb == "scan":
            scanned.add(event.target)
        elif event.verb == "exploit" and event.detected:
            exploit_seen.add(event.target)
    flags: list[int] = []
    for host in state.hosts_in(AGENT_SUBNET[agent]):
        group = [0] * FLAGS_PER_HOST
        group[0] = 1 if host.id in scanned else 0
        group[1] = 1 if host.id in exploit_seen else 0
        group[2 + _BELIEF_SLOT[knowledge.belief[host.id]]] = 1
        flags.extend(group)
    flags += [0] * (FRAME_LENGTH - len(flags))
    return ObservationFrame(
        agent=agent,
        flags=flags,
        avail_mask=space.avail_mask(state, knowledge, agent),
    )
