"""World model for the two-subnet defence game.

Nine hosts: five low-value user workstations (ids 0-4) and an operational
subnet (ids 5-8) whose last member, the operational server, carries most of
the value. Two user hosts are dual-homed and bridge into the operational
subnet. `build_topology` produces the initial ground truth from a
`ScenarioConfig`; `visible_hosts` defines lateral reachability; and
`reimage_host` is the restore primitive shared by the defender engine.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING

from .errors import ConfigError, UnknownHostError

if TYPE_CHECKING:
    from .attacker import AttackerState


class Goal(str, Enum):
    CONFIDENTIALITY = "confidentiality"
    INTEGRITY = "integrity"
    AVAILABILITY = "availability"


class Subnet(str, Enum):
    USER = "user"
    OPERATIONAL = "operational"


class HostOS(str, Enum):
    WINDOWS = "windows"
    LINUX = "linux"


class Privilege(str, Enum):
    USER = "user"
    ROOT = "root"


class ProcessKind(str, Enum):
    BENIGN = "benign"
    DOS_MALWARE = "dos_malware"


N_HOSTS = 9
USER_HOST_IDS = (0, 1, 2, 3, 4)
OP_HOST_IDS = (5, 6, 7, 8)
OP_SERVER_ID = 8
# Dual-homed user hosts whose second interface reaches the operational subnet.
BRIDGE_HOST_IDS = (3, 4)

VULNERABLE_SERVICE = {HostOS.WINDOWS: "smb", HostOS.LINUX: "ssh"}

# Decoy service names handed out by misinform, in stacking order.
DECOY_POOL = ("ftp", "http", "telnet")

SCHEMA_VERSION = 1


@dataclass
class Process:
    pid: int
    kind: ProcessKind
    created_turn: int = 0


@dataclass
class Session:
    """An attacker session. At most one lives on a host; only the initial
    foothold session is persistent (survives remove, recreated on reimage)."""

    privilege: Privilege
    persistent: bool = False


@dataclass
class FileRecord:
    name: str
    tampered: bool = False


@dataclass
class Host:
    id: int
    name: str
    os: HostOS
    subnet: Subnet
    importance: float
    interfaces: frozenset[Subnet]
    vulnerable_service: str
    processes: list[Process] = field(default_factory=list)
    sessions: list[Session] = field(default_factory=list)
    files: list[FileRecord] = field(default_factory=list)
    decoy_services: list[str] = field(default_factory=list)

    @property
    def session(self) -> Session | None:
        return self.sessions[0] if self.sessions else None

    def dos_processes(self) -> list[Process]:
        return [p for p in self.processes if p.kind is ProcessKind.DOS_MALWARE]

    def has_tampered_file(self) -> bool:
        return any(f.tampered for f in self.files)

    def apparent_services(self) -> list[str]:
        """Services the attacker can see: the real one plus any decoys."""
        return [self.vulnerable_service, *self.decoy_services]

    def next_pid(self) -> int:
        return max((p.pid for p in self.processes), default=0) + 1


@dataclass
class ScenarioConfig:
    goal: Goal = Goal.CONFIDENTIALITY
    misinform_enabled: bool = False
    episode_length: int = 50
    detection_prob: float = 0.95
    exploit_success_prob: float = 1.0
    restore_cost_factor: float = 1.0
    max_decoys: int = 3
    seed: int = 0
    foothold: int = 0
    escalate_first: bool = False

    def validate(self) -> None:
        if not isinstance(self.goal, Goal):
            raise ConfigError(f"unknown goal {self.goal!r}")
        for name in ("detection_prob", "exploit_success_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if self.episode_length < 1:
            raise ConfigError("episode_length must be at least 1")
        if self.max_decoys < 1:
            raise ConfigError("max_decoys must be positive")
        if self.restore_cost_factor < 0:
            raise ConfigError("restore_cost_factor must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        if self.foothold not in USER_HOST_IDS:
            raise ConfigError(f"foothold must be a user host id, got {self.foothold}")

    def to_dict(self) -> dict:
        return {
            "goal": self.goal.value,
            "misinform_enabled": self.misinform_enabled,
            "episode_length": self.episode_length,
            "detection_prob": self.detection_prob,
            "exploit_success_prob": self.exploit_success_prob,
            "restore_cost_factor": self.restore_cost_factor,
            "max_decoys": self.max_decoys,
            "seed": self.seed,
            "foothold": self.foothold,
            "escalate_first": self.escalate_first,
        }

    @classmethod
    def from_dict(cls, values: dict) -> "ScenarioConfig":
        known = set(cls().to_dict())
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged = cls().to_dict() | dict(values)
        config = cls(
            goal=Goal(merged["goal"]),
            misinform_enabled=bool(merged["misinform_enabled"]),
            episode_length=int(merged["episode_length"]),
            detection_prob=float(merged["detection_prob"]),
            exploit_success_prob=float(merged["exploit_success_prob"]),
            restore_cost_factor=float(merged["restore_cost_factor"]),
            max_decoys=int(merged["max_decoys"]),
            seed=int(merged["seed"]),
            foothold=int(merged["foothold"]),
            escalate_first=bool(merged["escalate_first"]),
        )
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        """Parse a `key = value` scenario file. `#` starts a comment."""
        values: dict[str, object] = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, text = line.partition("=")
            values[key.strip()] = _parse_scalar(text.strip())
        return cls.from_dict(values)


def _parse_scalar(text: str) -> object:
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


@dataclass
class WorldEvent:
    """A world-level mutation outside the two engines (currently: reimage)."""

    turn: int
    verb: str
    target: int


@dataclass
class GlobalState:
    config: ScenarioConfig
    hosts: list[Host]
    foothold: int
    operational_server: int
    attacker: "AttackerState"
    turn: int = 0
    event_log: list = field(default_factory=list)

    def host(self, host_id: int) -> Host:
        if not isinstance(host_id, int) or not 0 <= host_id < len(self.hosts):
            raise UnknownHostError(f"no host with id {host_id!r}")
        return self.hosts[host_id]

    def hosts_in(self, subnet: Subnet) -> list[Host]:
        return [h for h in self.hosts if h.subnet is subnet]


def _baseline_processes() -> list[Process]:
    return [Process(pid=1, kind=ProcessKind.BENIGN, created_turn=0)]


def _baseline_files() -> list[FileRecord]:
    return [FileRecord("system.log"), FileRecord("records.db")]


def build_topology(config: ScenarioConfig) -> GlobalState:
    """Build the fixed nine-host network in its pristine state, with the
    attacker's persistent user-privilege foothold already planted."""
    from .attacker import AttackerState

    config.validate()
    hosts = []
    for i in range(N_HOSTS):
        in_user = i in USER_HOST_IDS
        subnet = Subnet.USER if in_user else Subnet.OPERATIONAL
        interfaces = {subnet}
        if i in BRIDGE_HOST_IDS:
            interfaces.add(Subnet.OPERATIONAL)
        os_ = HostOS.WINDOWS if i % 2 == 0 else HostOS.LINUX
        if in_user:
            importance, name = 0.1, f"User{i}"
        elif i == OP_SERVER_ID:
            importance, name = 10.0, "OpServer"
        else:
            importance, name = 1.0, f"Op{i - 5}"
        hosts.append(
            Host(
                id=i,
                name=name,
                os=os_,
                subnet=subnet,
                importance=importance,
                interfaces=frozenset(interfaces),
                vulnerable_service=VULNERABLE_SERVICE[os_],
                processes=_baseline_processes(),
                files=_baseline_files(),
            )
        )
    hosts[config.foothold].sessions.append(
        Session(privilege=Privilege.USER, persistent=True)
    )
    attacker = AttackerState(
        goal=config.goal, sessions={config.foothold: Privilege.USER}
    )
    return GlobalState(
        config=config,
        hosts=hosts,
        foothold=config.foothold,
        operational_server=OP_SERVER_ID,
        attacker=attacker,
    )


def visible_hosts(state: GlobalState, source: int) -> set[int]:
    """Hosts reachable from `source`: every other host whose home subnet is
    on one of the source's interfaces."""
    src = state.host(source)
    return {h.id for h in state.hosts if h.id != source and h.subnet in src.interfaces}


def reimage_host(state: GlobalState, target: int) -> GlobalState:
    """Reset a host to its pristine baseline. The attacker's persistent
    foothold session survives at user privilege; everything else is wiped."""
    host = state.host(target)
    host.processes = _baseline_processes()
    host.files = _baseline_files()
    host.decoy_services = []
    host.sessions = []
    attacker = state.attacker
    if target == state.foothold:
        host.sessions.append(Session(privilege=Privilege.USER, persistent=True))
        attacker.sessions[target] = Privilege.USER
    else:
        attacker.sessions.pop(target, None)
    attacker.payload_done.discard(target)
    state.event_log.append(WorldEvent(turn=state.turn, verb="reimage", target=target))
    return state


def serialize_topology(state: GlobalState) -> dict:
    """Static topology document: everything seed-independent about the net."""
    return {
        "version": SCHEMA_VERSION,
        "hosts": [
            {
                "id": h.id,
                "name": h.name,
                "os": h.os.value,
                "subnet": h.subnet.value,
                "importance": h.importance,
                "interfaces": sorted(s.value for s in h.interfaces),
                "vulnerable_service": h.vulnerable_service,
            }
            for h in state.hosts
        ],
        "foothold": state.foothold,
        "operational_server": state.operational_server,
    }


def serialize_state(state: GlobalState) -> dict:
    """Full ground-truth snapshot, suitable for byte-identical comparison."""
    return {
        "version": SCHEMA_VERSION,
        "turn": state.turn,
        "config": state.config.to_dict(),
        "hosts": [
            {
                "id": h.id,
                "processes": [
                    {"pid": p.pid, "kind": p.kind.value, "created_turn": p.created_turn}
                    for p in h.processes
                ],
                "sessions": [
                    {"privilege": s.privilege.value, "persistent": s.persistent}
                    for s in h.sessions
                ],
                "files": [{"name": f.name, "tampered": f.tampered} for f in h.files],
                "decoy_services": list(h.decoy_services),
            }
            for h in state.hosts
        ],
        "attacker": {
            "discovered": sorted(state.attacker.discovered),
            "scanned": sorted(state.attacker.scanned),
            "sessions": {
                str(k): v.value for k, v in sorted(state.attacker.sessions.items())
            },
            "payload_done": sorted(state.attacker.payload_done),
        },
    }


def canonical_json(doc: object) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def topology_digest(state: GlobalState) -> str:
    return hashlib.sha256(canonical_json(serialize_topology(state)).encode()).hexdigest()
