"""Blue-side actions, per-agent knowledge, and the padded action space.

Each defender agent owns one subnet. Its knowledge holds a per-host set of
suspicious artifact markers (filled by monitor), a belief level per host,
and for the integrity goal the hosts whose files it has confirmed tampered.
Markers are tuples: ("session", privilege) or ("dos", pid).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ProtocolError
from .world import (
    OP_HOST_IDS,
    USER_HOST_IDS,
    DECOY_POOL,
    GlobalState,
    Goal,
    Privilege,
    ProcessKind,
    ScenarioConfig,
    Subnet,
    reimage_host,
)


class AgentId(str, Enum):
    USER = "user_agent"
    OP = "op_agent"


AGENT_SUBNET = {AgentId.USER: Subnet.USER, AgentId.OP: Subnet.OPERATIONAL}
AGENT_HOST_IDS = {AgentId.USER: USER_HOST_IDS, AgentId.OP: OP_HOST_IDS}


class DefenderVerb(str, Enum):
    MONITOR = "monitor"
    REMOVE = "remove"
    RESTORE = "restore"
    ANALYZE = "analyze"
    DATA_REPAIR = "data_repair"
    MISINFORM = "misinform"


class Belief(str, Enum):
    UNKNOWN = "unknown"
    CLEAN = "clean"
    USER_SESSION = "user_session"
    ROOT_SESSION = "root_session"


_PRIV_BELIEF = {"user": Belief.USER_SESSION, "root": Belief.ROOT_SESSION}


@dataclass
class DefenderAction:
    agent: AgentId
    verb: DefenderVerb
    target: int | None = None


@dataclass
class DefenderEvent:
    turn: int
    agent: str
    verb: str
    target: int | None
    valid: bool
    # Restore cost; invalid-action charges are accounted in the reward layer.
    penalty: float = 0.0
    removed_session: bool = False
    removed_dos: list[int] = field(default_factory=list)


@dataclass
class DefenderKnowledge:
    agent: AgentId
    suspicious: dict[int, set[tuple]] = field(default_factory=dict)
    belief: dict[int, Belief] = field(default_factory=dict)
    known_tampered: set[int] = field(default_factory=set)


def new_knowledge(agent: AgentId) -> DefenderKnowledge:
    hosts = AGENT_HOST_IDS[agent]
    return DefenderKnowledge(
        agent=agent,
        suspicious={h: set() for h in hosts},
        belief={h: Belief.UNKNOWN for h in hosts},
    )


def well_formed(config: ScenarioConfig, action: DefenderAction) -> None:
    """Reject structurally bad actions with ProtocolError before any state
    is touched. Validity (can this fire right now) is `validate`'s job."""
    if action.verb is DefenderVerb.MONITOR:
        if action.target is not None:
            raise ProtocolError("bad_action", "monitor takes no target")
        return
    if action.target not in AGENT_HOST_IDS[action.agent]:
        raise ProtocolError(
            "bad_action",
            f"{action.verb.value} target {action.target!r} outside {action.agent.value} subnet",
        )
    if action.verb in (DefenderVerb.ANALYZE, DefenderVerb.DATA_REPAIR):
        if config.goal is not Goal.INTEGRITY:
            raise ProtocolError("bad_action", f"{action.verb.value} needs the integrity goal")
    elif action.verb is DefenderVerb.MISINFORM:
        if not config.misinform_enabled:
            raise ProtocolError("bad_action", "misinform is disabled in this scenario")
    elif action.verb not in (DefenderVerb.REMOVE, DefenderVerb.RESTORE):
        raise ProtocolError("bad_action", f"unknown verb {action.verb!r}")


def validate(state: GlobalState, knowledge: DefenderKnowledge, action: DefenderAction) -> bool:
    """Whether a well-formed action can execute this turn. Invalid actions
    are charged but skipped."""
    verb = action.verb
    if verb in (DefenderVerb.MONITOR, DefenderVerb.RESTORE, DefenderVerb.ANALYZE):
        return True
    if verb is DefenderVerb.REMOVE:
        return bool(knowledge.suspicious.get(action.target))
    if verb is DefenderVerb.DATA_REPAIR:
        return state.host(action.target).has_tampered_file()
    if verb is DefenderVerb.MISINFORM:
        host = state.host(action.target)
        return len(host.decoy_services) < state.config.max_decoys
    return False


def _execute_monitor(state, knowledge, rng) -> None:
    p = state.config.detection_prob
    for host in state.hosts_in(AGENT_SUBNET[knowledge.agent]):
        truth: set[tuple] = set()
        detected: set[tuple] = set()
        session = host.session
        if session is not None:
            marker = ("session", session.privilege.value)
            truth.add(marker)
            if rng.random() < p:
                detected.add(marker)
        for proc in sorted(host.dos_processes(), key=lambda q: q.pid):
            marker = ("dos", proc.pid)
            truth.add(marker)
            if rng.random() < p:
                detected.add(marker)
        # Keep remembered markers that are still true, drop stale ones, add
        # fresh detections. With detection_prob=1 this mirrors the truth.
        knowledge.suspicious[host.id] = (knowledge.suspicious[host.id] & truth) | detected
        session_markers = [m for m in knowledge.suspicious[host.id] if m[0] == "session"]
        if session_markers:
            knowledge.belief[host.id] = _PRIV_BELIEF[session_markers[0][1]]
        else:
            knowledge.belief[host.id] = Belief.CLEAN


def _execute_remove(state, knowledge, target: int, event: DefenderEvent) -> None:
    host = state.host(target)
    markers = knowledge.suspicious[target]
    for marker in sorted(markers):
        kind = marker[0]
        if kind == "dos":
            pid = marker[1]
            proc = next((q for q in host.dos_processes() if q.pid == pid), None)
            if proc is not None:
                host.processes.remove(proc)
                event.removed_dos.append(pid)
            markers.discard(marker)
        elif marker == ("session", "user"):
            session = host.session
            if session is not None and session.privilege is Privilege.USER:
                if session.persistent:
                    continue  # the foothold survives remove; keep the marker
                host.sessions = []
                state.attacker.sessions.pop(target, None)
                state.attacker.payload_done.discard(target)
                event.removed_session = True
            markers.discard(marker)
        # Root-session markers stay: remove cannot evict root.
    if not markers:
        knowledge.belief[target] = Belief.CLEAN


def execute_defender_action(
    state: GlobalState,
    knowledge: DefenderKnowledge,
    action: DefenderAction,
    rng: np.random.Generator,
) -> DefenderEvent:
    """Apply one valid defender action; returns its event (engine logs it)."""
    event = DefenderEvent(
        turn=state.turn,
        agent=action.agent.value,
        verb=action.verb.value,
        target=action.target,
        valid=True,
    )
    verb = action.verb
    if verb is DefenderVerb.MONITOR:
        _execute_monitor(state, knowledge, rng)
    elif verb is DefenderVerb.REMOVE:
        _execute_remove(state, knowledge, action.target, event)
    elif verb is DefenderVerb.RESTORE:
        host = state.host(action.target)
        event.penalty = host.importance * state.config.restore_cost_factor
        if host.session is not None and not host.session.persistent:
            event.removed_session = True
        event.removed_dos = [q.pid for q in host.dos_processes()]
        reimage_host(state, action.target)
        knowledge.suspicious[action.target] = set()
        knowledge.belief[action.target] = Belief.CLEAN
        knowledge.known_tampered.discard(action.target)
    elif verb is DefenderVerb.ANALYZE:
        if state.host(action.target).has_tampered_file():
            knowledge.known_tampered.add(action.target)
        else:
            knowledge.known_tampered.discard(action.target)
    elif verb is DefenderVerb.DATA_REPAIR:
        for record in state.host(action.target).files:
            record.tampered = False
        knowledge.known_tampered.discard(action.target)
    elif verb is DefenderVerb.MISINFORM:
        host = state.host(action.target)
        k = len(host.decoy_services)
        name = DECOY_POOL[k] if k < len(DECOY_POOL) else f"decoy{k}"
        host.decoy_services.append(name)
    return event


class ActionSpace:
    """Flat, padded action indexing shared by the protocol and learners.

    Index 0 is monitor; then per-host verbs with hosts in id order. Both
    agents are padded to the larger per-agent count so frames line up.
    """

    def __init__(self, config: ScenarioConfig):
        verbs = [DefenderVerb.REMOVE, DefenderVerb.RESTORE]
        if config.goal is Goal.INTEGRITY:
            verbs += [DefenderVerb.ANALYZE, DefenderVerb.DATA_REPAIR]
        if config.misinform_enabled:
            verbs += [DefenderVerb.MISINFORM]
        self._entries: dict[AgentId, list[tuple[DefenderVerb, int | None]]] = {}
        for agent in AgentId:
            entries: list[tuple[DefenderVerb, int | None]] = [(DefenderVerb.MONITOR, None)]
            for h in AGENT_HOST_IDS[agent]:
                entries.extend((verb, h) for verb in verbs)
            self._entries[agent] = entries
        self.size = max(len(e) for e in self._entries.values())

    def entries(self, agent: AgentId) -> list[tuple[DefenderVerb, int | None]]:
        return list(self._entries[agent])

    def legend(self, agent: AgentId) -> list[str]:
        names = [
            verb.value if target is None else f"{verb.value}:{target}"
            for verb, target in self._entries[agent]
        ]
        names += ["pad"] * (self.size - len(names))
        return names

    def decode(self, agent: AgentId, index: int) -> DefenderAction:
        entries = self._entries[agent]
        if not isinstance(index, int) or not 0 <= index < len(entries):
            raise ProtocolError(
                "out_of_range",
                f"action index {index!r} not playable for {agent.value} "
                f"(valid 0..{len(entries) - 1})",
            )
        verb, target = entries[index]
        return DefenderAction(agent=agent, verb=verb, target=target)

    def avail_mask(
        self, state: GlobalState, knowledge: DefenderKnowledge, agent: AgentId
    ) -> list[int]:
        mask = [
            1 if validate(state, knowledge, DefenderAction(agent, verb, target)) else 0
            for verb, target in self._entries[agent]
        ]
        mask += [0] * (self.size - len(mask))
        return mask
