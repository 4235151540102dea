"""Heuristic red agent: knowledge tracking, planning, execution.

Planning walks a fixed priority ladder -- payload, exploit, escalate, scan,
discover, sleep -- with deterministic target preferences (operational subnet
before user, higher importance before lower, lower id breaks ties), so a
whole episode is reproducible from the seed alone. Escalation is gated on
reconnaissance having happened at least once, which makes discovery the
opening move; an alternative ordering that escalates before exploiting sits
behind `ScenarioConfig.escalate_first`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EngineInvariantError
from .world import (
    GlobalState,
    Goal,
    Host,
    Privilege,
    Process,
    ProcessKind,
    Session,
    Subnet,
    visible_hosts,
)


class AttackerVerb(str, Enum):
    DISCOVER = "discover"
    SCAN = "scan"
    EXPLOIT = "exploit"
    ESCALATE = "escalate"
    TAMPER = "tamper"
    DENY = "deny"
    SLEEP = "sleep"


PAYLOAD_VERBS = (AttackerVerb.TAMPER, AttackerVerb.DENY)


@dataclass
class AttackerState:
    """What the attacker knows and holds. `discovered`/`scanned` only grow;
    `sessions` maps host id to current privilege; `payload_done` marks hosts
    whose goal payload already fired (cleared when the session is lost)."""

    goal: Goal
    discovered: set[int] = field(default_factory=set)
    scanned: set[int] = field(default_factory=set)
    sessions: dict[int, Privilege] = field(default_factory=dict)
    payload_done: set[int] = field(default_factory=set)


@dataclass
class AttackerAction:
    verb: AttackerVerb
    target: int | None = None
    subnet: Subnet | None = None
    service: str | None = None


@dataclass
class AttackerEvent:
    turn: int
    verb: str
    target: int | None
    success: bool
    service: str | None = None
    # Whether the defender's sensors flagged the attempt; drawn by the
    # engine from the detection stream, exploit events only.
    detected: bool = False
    subnet: str | None = None


def _reachable(state: GlobalState) -> set[int]:
    seen: set[int] = set()
    for source in state.attacker.sessions:
        seen |= visible_hosts(state, source)
    return seen


def _preference_key(host: Host) -> tuple:
    return (host.subnet is not Subnet.OPERATIONAL, -host.importance, host.id)


def _plan_payload(state: GlobalState, rng) -> AttackerAction | None:
    att = state.attacker
    if att.goal is Goal.CONFIDENTIALITY:
        return None
    candidates = [
        h
        for h, priv in att.sessions.items()
        if priv is Privilege.ROOT and h not in att.payload_done
    ]
    if not candidates:
        return None
    target = min(candidates, key=lambda h: (-state.host(h).importance, h))
    verb = AttackerVerb.TAMPER if att.goal is Goal.INTEGRITY else AttackerVerb.DENY
    return AttackerAction(verb, target=target)


def _plan_exploit(state: GlobalState, rng) -> AttackerAction | None:
    att = state.attacker
    candidates = [
        state.host(h)
        for h in att.scanned & _reachable(state)
        if h not in att.sessions
    ]
    if not candidates:
        return None
    target = min(candidates, key=_preference_key)
    services = target.apparent_services()
    service = services[int(rng.integers(len(services)))]
    return AttackerAction(AttackerVerb.EXPLOIT, target=target.id, service=service)


def _plan_escalate(state: GlobalState, rng) -> AttackerAction | None:
    att = state.attacker
    # Reconnaissance gate: never escalate before the first discover.
    if not att.discovered:
        return None
    candidates = [h for h, priv in att.sessions.items() if priv is Privilege.USER]
    if not candidates:
        return None
    return AttackerAction(AttackerVerb.ESCALATE, target=min(candidates))


def _plan_scan(state: GlobalState, rng) -> AttackerAction | None:
    att = state.attacker
    candidates = [
        state.host(h)
        for h in (att.discovered - att.scanned) & _reachable(state)
        if h not in att.sessions
    ]
    if not candidates:
        return None
    return AttackerAction(AttackerVerb.SCAN, target=min(candidates, key=_preference_key).id)


def _plan_discover(state: GlobalState, rng) -> AttackerAction | None:
    att = state.attacker
    reachable = _reachable(state)
    for subnet in (Subnet.OPERATIONAL, Subnet.USER):
        addable = [
            h
            for h in reachable
            if state.host(h).subnet is subnet
            and h not in att.discovered
            and h not in att.sessions
        ]
        if addable:
            return AttackerAction(AttackerVerb.DISCOVER, subnet=subnet)
    return None


def plan_action(state: GlobalState, rng: np.random.Generator) -> AttackerAction:
    if state.config.escalate_first:
        ladder = (_plan_payload, _plan_escalate, _plan_exploit, _plan_scan, _plan_discover)
    else:
        ladder = (_plan_payload, _plan_exploit, _plan_escalate, _plan_scan, _plan_discover)
    for planner in ladder:
        action = planner(state, rng)
        if action is not None:
            return action
    return AttackerAction(AttackerVerb.SLEEP)


def execute_attacker_action(
    state: GlobalState, action: AttackerAction, rng: np.random.Generator
) -> list[AttackerEvent]:
    """Apply one attacker action to the ground truth and return its event.

    Events are returned, not appended to the log; the engine owns the log.
    """
    att = state.attacker
    turn = state.turn
    verb = action.verb

    if verb is AttackerVerb.SLEEP:
        return [AttackerEvent(turn, verb.value, None, True)]

    if verb is AttackerVerb.DISCOVER:
        if action.subnet is None:
            raise EngineInvariantError("discover needs a subnet")
        for h in _reachable(state):
            if state.host(h).subnet is action.subnet:
                att.discovered.add(h)
        return [AttackerEvent(turn, verb.value, None, True, subnet=action.subnet.value)]

    if action.target is None:
        raise EngineInvariantError(f"{verb.value} needs a target")
    host = state.host(action.target)

    if verb is AttackerVerb.SCAN:
        att.scanned.add(host.id)
        return [AttackerEvent(turn, verb.value, host.id, True)]

    if verb is AttackerVerb.EXPLOIT:
        if host.id in att.sessions:
            raise EngineInvariantError(f"exploit against owned host {host.id}")
        if action.service in host.decoy_services:
            success = False
        else:
            success = rng.random() < state.config.exploit_success_prob
        if success:
            host.sessions.append(Session(privilege=Privilege.USER))
            att.sessions[host.id] = Privilege.USER
        return [AttackerEvent(turn, verb.value, host.id, success, service=action.service)]

    if verb is AttackerVerb.ESCALATE:
        if att.sessions.get(host.id) is not Privilege.USER or host.session is None:
            raise EngineInvariantError(f"escalate needs a user session on {host.id}")
        host.session.privilege = Privilege.ROOT
        att.sessions[host.id] = Privilege.ROOT
        return [AttackerEvent(turn, verb.value, host.id, True)]

    if verb is AttackerVerb.TAMPER:
        if att.sessions.get(host.id) is not Privilege.ROOT:
            raise EngineInvariantError(f"tamper needs root on {host.id}")
        for record in host.files:
            if not record.tampered:
                record.tampered = True
                break
        att.payload_done.add(host.id)
        return [AttackerEvent(turn, verb.value, host.id, True)]

    if verb is AttackerVerb.DENY:
        if att.sessions.get(host.id) is not Privilege.ROOT:
            raise EngineInvariantError(f"deny needs root on {host.id}")
        host.processes.append(
            Process(pid=host.next_pid(), kind=ProcessKind.DOS_MALWARE, created_turn=turn)
        )
        att.payload_done.add(host.id)
        return [AttackerEvent(turn, verb.value, host.id, True)]

    raise EngineInvariantError(f"unhandled attacker verb {verb!r}")
