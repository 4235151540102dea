"""Episode replay files and an independent reward rescorer.

One JSON object per line: a header (version, scenario config, seed, topology
digest), every event in execution order, then a footer with the per-turn
rewards and episode return. `verify_replay` rebuilds per-host truth from the
event stream alone -- deliberately bypassing the scoring module -- and checks
the footer to the last bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .attacker import AttackerEvent
from .defender import DefenderEvent
from .errors import ConfigError
from .scoring import INVALID_ACTION_PENALTY
from .world import (
    GlobalState,
    Goal,
    ScenarioConfig,
    WorldEvent,
    build_topology,
    canonical_json,
    topology_digest,
)

REPLAY_VERSION = 1


def event_to_dict(event) -> dict:
    if isinstance(event, AttackerEvent):
        doc = {
            "kind": "attacker",
            "turn": event.turn,
            "verb": event.verb,
            "target": event.target,
            "success": event.success,
        }
        if event.service is not None:
            doc["service"] = event.service
        if event.subnet is not None:
            doc["subnet"] = event.subnet
        if event.verb == "exploit":
            doc["detected"] = event.detected
        return doc
    if isinstance(event, DefenderEvent):
        return {
            "kind": "defender",
            "turn": event.turn,
            "agent": event.agent,
            "verb": event.verb,
            "target": event.target,
            "valid": event.valid,
            "penalty": event.penalty,
            "removed_session": event.removed_session,
            "removed_dos": list(event.removed_dos),
        }
    if isinstance(event, WorldEvent):
        return {"kind": "world", "turn": event.turn, "verb": event.verb, "target": event.target}
    raise TypeError(f"unserialisable event {event!r}")


def replay_lines(record, partial: bool = False) -> list[str]:
    header = {
        "kind": "header",
        "version": REPLAY_VERSION,
        "config": record.config.to_dict(),
        "seed": record.seed,
        "topology_digest": record.topology_digest,
    }
    if partial:
        header["partial"] = True
    lines = [canonical_json(header)]
    lines.extend(canonical_json(event_to_dict(e)) for e in record.events)
    footer = {
        "kind": "footer",
        "turns": len(record.breakdowns),
        "per_turn_rewards": record.per_turn_rewards,
        "episode_return": record.episode_return,
    }
    lines.append(canonical_json(footer))
    return lines


def write_replay(record, path: str | Path, partial: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(replay_lines(record, partial)) + "\n")
    return path


def load_replay(path: str | Path) -> tuple[dict, list[dict], dict]:
    header = None
    footer = None
    events: list[dict] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        doc = json.loads(line)
        kind = doc.get("kind")
        if kind == "header":
            if header is not None:
                raise ConfigError(f"line {lineno}: duplicate header")
            header = doc
        elif kind == "footer":
            footer = doc
        else:
            events.append(doc)
    if header is None or footer is None:
        raise ConfigError("replay is missing its header or footer")
    return header, events, footer


@dataclass
class _HostTruth:
    privilege: str | None = None
    tampered: bool = False
    dos: int = 0


@dataclass
class VerifyResult:
    ok: bool
    episode_return: float
    recomputed_return: float
    per_turn_rewards: list[float]
    recomputed_rewards: list[float]
    mismatches: list[str]


def rescore(header: dict, events: list[dict]) -> list[float]:
    """Recompute per-turn rewards from the event stream alone.

    This is a second, minimal implementation of the scoring rules: it never
    touches the engine's reward code, only the static topology (for
    importances) and the effect deltas each event carries.
    """
    config = ScenarioConfig.from_dict(header["config"])
    pristine = build_topology(config)
    if topology_digest(pristine) != header["topology_digest"]:
        raise ConfigError("topology digest mismatch: replay from another world")
    importance = {h.id: h.importance for h in pristine.hosts}
    foothold = pristine.foothold
    truth = {h.id: _HostTruth() for h in pristine.hosts}
    truth[foothold].privilege = "user"

    by_turn: dict[int, list[dict]] = {}
    last_turn = -1
    for event in events:
        by_turn.setdefault(event["turn"], []).append(event)
        last_turn = max(last_turn, event["turn"])

    rewards = []
    for turn in range(last_turn + 1):
        restore_pen = 0.0
        invalid = 0
        for event in by_turn.get(turn, ()):
            kind = event["kind"]
            if kind == "defender":
                if not event["valid"]:
                    invalid += 1
                    continue
                target = event["target"]
                verb = event["verb"]
                if verb == "restore":
                    restore_pen -= event["penalty"]
                    truth[target] = _HostTruth(
                        privilege="user" if target == foothold else None
                    )
                elif verb == "remove":
                    if event["removed_session"]:
                        truth[target].privilege = None
                    truth[target].dos -= len(event["removed_dos"])
                elif verb == "data_repair":
                    truth[target].tampered = False
            elif kind == "attacker":
                if not event["success"]:
                    continue
                verb = event["verb"]
                target = event["target"]
                if verb == "exploit":
                    truth[target].privilege = "user"
                elif verb == "escalate":
                    truth[target].privilege = "root"
                elif verb == "tamper":
                    truth[target].tampered = True
                elif verb == "deny":
                    truth[target].dos += 1
        compromise = 0.0
        for host_id in sorted(truth):  # match the engine's id-order summation
            t = truth[host_id]
            hit = (
                t.privilege is not None
                if config.goal is Goal.CONFIDENTIALITY
                else t.tampered if config.goal is Goal.INTEGRITY else t.dos > 0
            )
            if hit:
                compromise -= importance[host_id]
        rewards.append(compromise + restore_pen + (-INVALID_ACTION_PENALTY * invalid))
    return rewards


def verify_replay(path: str | Path) -> VerifyResult:
    header, events, footer = load_replay(path)
    recomputed = rescore(header, events)
    expected = footer["per_turn_rewards"]
    mismatches = []
    if len(recomputed) != len(expected):
        mismatches.append(f"turn count: footer {len(expected)}, rescored {len(recomputed)}")
    for i, (want, got) in enumerate(zip(expected, recomputed)):
        if want != got:
            mismatches.append(f"turn {i}: footer {want!r}, rescored {got!r}")
    recomputed_return = sum(recomputed)
    if footer["episode_return"] != recomputed_return:
        mismatches.append(
            f"return: footer {footer['episode_return']!r}, rescored {recomputed_return!r}"
        )
    return VerifyResult(
        ok=not mismatches,
        episode_return=footer["episode_return"],
        recomputed_return=recomputed_return,
        per_turn_rewards=expected,
        recomputed_rewards=recomputed,
        mismatches=mismatches,
    )
