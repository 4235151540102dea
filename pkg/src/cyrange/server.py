"""JSON-lines environment protocol over stdio or TCP.

Requests and replies are single-line JSON envelopes:
    {"kind": ..., "session_id": ..., "payload": {...}}
Request kinds: hello, reset, step, close. Replies: spaces, obs, step_result,
close, error. One session per connection; the server never advances the game
except on a well-formed step (or when a server-side baseline was requested
in hello, in which case step payloads may omit actions).
"""

from __future__ import annotations

import itertools
import json
import logging
import socketserver
import sys
import threading

from .baselines import POLICY_BUILDERS
from .defender import AgentId
from .engine import SubnetDefenseEnv
from .errors import ProtocolError
from .world import ScenarioConfig

log = logging.getLogger("cyrange.server")

_session_counter = itertools.count(1)
_counter_lock = threading.Lock()

AGENT_ORDER = (AgentId.USER, AgentId.OP)


def _next_session_id() -> int:
    with _counter_lock:
        return next(_session_counter)


class EnvSession:
    """One client's environment instance and its protocol state machine."""

    def __init__(self, config: ScenarioConfig, include_info: bool = True):
        self.session_id = _next_session_id()
        self.config = config
        self.include_info = include_info
        self.env = SubnetDefenseEnv(config)
        self.policies = None
        self.closed = False

    def _reply(self, kind: str, payload: dict) -> dict:
        return {"kind": kind, "session_id": self.session_id, "payload": payload}

    def _error(self, code: str, message: str) -> dict:
        return self._reply("error", {"code": code, "message": message})

    def handle(self, msg: dict) -> dict:
        try:
            return self._dispatch(msg)
        except ProtocolError as exc:
            return self._error(exc.code, exc.message)

    def _dispatch(self, msg: dict) -> dict:
        if not isinstance(msg, dict):
            raise ProtocolError("bad_payload", "request must be a JSON object")
        kind = msg.get("kind")
        payload = msg.get("payload") or {}
        if not isinstance(payload, dict):
            raise ProtocolError("bad_payload", "payload must be an object")
        if kind == "hello":
            return self._on_hello(payload)
        if kind == "reset":
            return self._on_reset(payload)
        if kind == "step":
            return self._on_step(payload)
        if kind == "close":
            self.closed = True
            return self._reply("close", {"ok": True})
        raise ProtocolError("bad_kind", f"unknown request kind {kind!r}")

    def _on_hello(self, payload: dict) -> dict:
        baseline = payload.get("baseline")
        if baseline in (None, "external"):
            self.policies = None
        elif baseline in POLICY_BUILDERS:
            self.policies = {agent: POLICY_BUILDERS[baseline](agent) for agent in AGENT_ORDER}
        else:
            raise ProtocolError("bad_payload", f"unknown baseline {baseline!r}")
        space = self.env.space
        return self._reply(
            "spaces",
            {
                "protocol_version": 1,
                "n_agents": len(AGENT_ORDER),
                "agents": [a.value for a in AGENT_ORDER],
                "obs_length": 30,
                "action_space_size": space.size,
                "legends": {a.value: space.legend(a) for a in AGENT_ORDER},
                "scenario": self.config.to_dict(),
                "baseline": baseline if self.policies else None,
            },
        )

    def _on_reset(self, payload: dict) -> dict:
        seed = payload.get("seed")
        if seed is not None and not isinstance(seed, int):
            raise ProtocolError("bad_payload", "seed must be an integer")
        frames = self.env.reset(seed)
        if self.policies:
            for policy in self.policies.values():
                policy.reset(self.env)
        return self._reply(
            "obs",
            {
                "turn": 0,
                "observations": [frames[a].flags for a in AGENT_ORDER],
                "avail_masks": [frames[a].avail_mask for a in AGENT_ORDER],
            },
        )

    def _on_step(self, payload: dict) -> dict:
        env = self.env
        if self.policies:
            if env.state is None:
                raise ProtocolError("no_game", "reset before stepping")
            if env.done:
                raise ProtocolError("episode_done", "episode finished; reset to continue")
            frames = env.frames()
            actions = {
                agent: self.policies[agent].act(env, frames[agent]) for agent in AGENT_ORDER
            }
        else:
            indices = payload.get("actions")
            if (
                not isinstance(indices, list)
                or len(indices) != len(AGENT_ORDER)
                or not all(isinstance(i, int) for i in indices)
            ):
                raise ProtocolError(
                    "bad_payload", f"actions must be {len(AGENT_ORDER)} integer indices"
                )
            actions = {
                agent: env.space.decode(agent, index)
                for agent, index in zip(AGENT_ORDER, indices)
            }
        result = env.step(actions)
        payload_out = {
            "turn": result.info["turn"],
            "observations": [result.observations[a].flags for a in AGENT_ORDER],
            "avail_masks": [result.observations[a].avail_mask for a in AGENT_ORDER],
            "reward": result.reward,
            "done": result.done,
        }
        if self.include_info:
            payload_out["info"] = result.info
        return self._reply("step_result", payload_out)


def handle_line(session: EnvSession, line: str) -> str:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        return json.dumps(
            session._error("bad_json", f"undecodable request: {exc}"),
            separators=(",", ":"),
        )
    return json.dumps(session.handle(msg), separators=(",", ":"))


def serve_stdio(config: ScenarioConfig, include_info: bool = True) -> None:
    session = EnvSession(config, include_info)
    log.info("session %d serving on stdio", session.session_id)
    for line in sys.stdin:
        if not line.strip():
            continue
        sys.stdout.write(handle_line(session, line) + "\n")
        sys.stdout.flush()
        if session.closed:
            break


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        server: "ProtocolServer" = self.server
        session = EnvSession(server.config, server.include_info)
        log.info("session %d connected from %s", session.session_id, self.client_address)
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace")
            if not line.strip():
                continue
            self.wfile.write((handle_line(session, line) + "\n").encode())
            self.wfile.flush()
            if session.closed:
                break


class ProtocolServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, config: ScenarioConfig, host: str, port: int, include_info: bool = True):
        self.config = config
        self.include_info = include_info
        super().__init__((host, port), _Handler)


def serve_tcp(config: ScenarioConfig, host: str, port: int, include_info: bool = True) -> None:
    with ProtocolServer(config, host, port, include_info) as server:
        log.info("listening on %s:%d", *server.server_address[:2])
        server.serve_forever()
