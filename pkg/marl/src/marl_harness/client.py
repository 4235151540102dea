"""Client side of the JSON-lines environment protocol.

The harness never imports the game engine; everything it knows about the
environment arrives through this client: the spaces payload from hello,
observation/availability lists from reset, and step_result payloads.
"""

from __future__ import annotations

import json
import socket
import subprocess
import sys


class ProtocolClientError(RuntimeError):
    """An error reply from the server, with its wire code preserved."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class ConnectionLost(ProtocolClientError):
    """The transport died mid-session (EOF, broken pipe, socket error)."""

    def __init__(self, message: str):
        super().__init__("connection_lost", message)


class EnvClient:
    """Single-session protocol client over a stdio subprocess or TCP."""

    def __init__(self, reader, writer, proc: subprocess.Popen | None = None, sock=None):
        self._reader = reader
        self._writer = writer
        self._proc = proc
        self._sock = sock
        self._closed = False
        self.spaces: dict | None = None

    @classmethod
    def spawn(cls, goal: str = "confidentiality", misinform: bool = False,
              episode_length: int = 50, seed: int = 0, no_info: bool = False,
              python: str = sys.executable) -> "EnvClient":
        """Launch a game server subprocess and attach to its stdio."""
        cmd = [
            python, "-m", "cyrange", "serve", "--stdio",
            "--goal", goal,
            "--episode-length", str(episode_length),
            "--seed", str(seed),
        ]
        if misinform:
            cmd.append("--misinform")
        if no_info:
            cmd.append("--no-info")
        proc = subprocess.Popen(
            cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1
        )
        return cls(proc.stdout, proc.stdin, proc=proc)

    @classmethod
    def connect(cls, host: str, port: int) -> "EnvClient":
        sock = socket.create_connection((host, port))
        return cls(sock.makefile("r"), sock.makefile("w"), sock=sock)

    def request(self, kind: str, payload: dict | None = None) -> dict:
        line = json.dumps({"kind": kind, "payload": payload or {}}, separators=(",", ":"))
        try:
            self._writer.write(line + "\n")
            self._writer.flush()
            reply_line = self._reader.readline()
        except (BrokenPipeError, OSError, ValueError) as exc:
            # ValueError covers writes after the stream was closed
            raise ConnectionLost(str(exc)) from exc
        if not reply_line:
            raise ConnectionLost("server closed the stream")
        reply = json.loads(reply_line)
        if reply.get("kind") == "error":
            detail = reply.get("payload", {})
            raise ProtocolClientError(detail.get("code", "unknown"), detail.get("message", ""))
        return reply

    def hello(self, baseline: str | None = None) -> dict:
        payload = {"baseline": baseline} if baseline is not None else {}
        self.spaces = self.request("hello", payload)["payload"]
        return self.spaces

    def reset(self, seed: int | None = None) -> dict:
        payload = {"seed": seed} if seed is not None else {}
        return self.request("reset", payload)["payload"]

    def step(self, actions: list[int] | None = None) -> dict:
        payload = {"actions": actions} if actions is not None else {}
        return self.request("step", payload)["payload"]

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self.request("close")
        except (ProtocolClientError, ConnectionLost):
            pass
        if self._proc is not None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        if self._sock is not None:
            self._sock.close()

    def __enter__(self) -> "EnvClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def legend_hosts(spaces: dict) -> list[int]:
    """Distinct host ids named anywhere in the action legends."""
    hosts = set()
    for legend in spaces["legends"].values():
        for entry in legend:
            verb, _, target = entry.partition(":")
            if target:
                hosts.add(int(target))
    return sorted(hosts)


def pristine_state(spaces: dict) -> list[float]:
    """Ground-truth state vector at turn zero.

    Four slots per host (privilege, tampered, denial processes, decoys),
    all zero except the standing user session on the foothold host.
    """
    hosts = legend_hosts(spaces)
    state = [0.0] * (4 * len(hosts))
    foothold = spaces["scenario"]["foothold"]
    state[4 * hosts.index(foothold)] = 1.0
    return state
