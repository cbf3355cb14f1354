"""JSON control server over one simulation.

Endpoints:
  GET  /observe/{agent} -> {agent, observation, action_space, version}
  POST /act {agent, action} -> {outcome, observation, version}
  GET  /state -> full world snapshot
  GET  /metrics -> metric series plus the interaction matrix
  POST /step -> advance one autonomous step

Requests against one simulation are processed strictly serially: every
handler holds the simulation lock, and each mutation bumps a version
counter that responses expose.
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .simulation import Simulation
from .world import UnknownAgentError

_OBSERVE = re.compile(r"^/observe/(?P<agent>[^/]+)$")


class SimulationServer:
    """Thread-safe facade the HTTP handler talks to."""

    def __init__(self, simulation: Simulation):
        self.simulation = simulation
        self.lock = threading.Lock()

    # Each public method is one atomic request.

    def observe(self, agent: str) -> dict:
        with self.lock:
            sim = self.simulation
            observation = sim.world.observe(agent)
            return {
                "agent": agent,
                "observation": observation,
                "action_space": sim.world.action_space_for(agent),
                "version": sim.version,
            }

    def act(self, agent: str, action: str) -> dict:
        with self.lock:
            sim = self.simulation
            sim.world.placement(agent)  # 404 before any mutation
            outcome = sim.world.apply_action(agent, action)
            sim.version += 1
            return {
                "outcome": {"status": "success" if outcome.success else "failure", "reason": outcome.reason},
                "observation": sim.world.observe(agent),
                "version": sim.version,
            }

    def state(self) -> dict:
        with self.lock:
            sim = self.simulation
            snapshot = sim.world.canonical_state()
            snapshot["step"] = sim.step_index
            snapshot["version"] = sim.version
            snapshot["resources"] = dict(sim.ledger.balances)
            return snapshot

    def metrics(self) -> dict:
        with self.lock:
            sim = self.simulation
            ids, counts = sim.world.interaction_matrix(sim.agent_order)
            payload = sim.metrics.to_dict()
            payload["interaction_matrix"] = {"agents": ids, "counts": counts}
            payload["version"] = sim.version
            return payload

    def step(self) -> dict:
        with self.lock:
            sim = self.simulation
            records = sim.run_step()
            return {
                "step": sim.step_index,
                "version": sim.version,
                "records": [json.loads(r.to_json_line()) for r in records],
            }


class _Handler(BaseHTTPRequestHandler):
    server_version = "irollan"
    facade: SimulationServer  # set by make_server

    def log_message(self, *args) -> None:  # deterministic test output
        pass

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict | None:
        try:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length) if length else b""
            data = json.loads(raw.decode("utf-8")) if raw else {}
        except (ValueError, UnicodeDecodeError):
            return None
        return data if isinstance(data, dict) else None

    def do_GET(self) -> None:
        match = _OBSERVE.match(self.path)
        try:
            if match:
                self._send(200, self.facade.observe(match.group("agent")))
            elif self.path == "/state":
                self._send(200, self.facade.state())
            elif self.path == "/metrics":
                self._send(200, self.facade.metrics())
            else:
                self._send(404, {"error": f"no route {self.path}"})
        except UnknownAgentError as exc:
            self._send(404, {"error": str(exc)})

    def do_POST(self) -> None:
        try:
            if self.path == "/act":
                data = self._read_json()
                if data is None or "agent" not in data or "action" not in data:
                    self._send(400, {"error": "body must be JSON with agent and action"})
                    return
                self._send(200, self.facade.act(str(data["agent"]), str(data["action"])))
            elif self.path == "/step":
                self._send(200, self.facade.step())
            else:
                self._send(404, {"error": f"no route {self.path}"})
        except UnknownAgentError as exc:
            self._send(404, {"error": str(exc)})


def make_server(simulation: Simulation, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    facade = SimulationServer(simulation)
    handler = type("BoundHandler", (_Handler,), {"facade": facade})
    return ThreadingHTTPServer((host, port), handler)


def serve(simulation: Simulation, host: str, port: int) -> None:  # pragma: no cover - CLI path
    server = make_server(simulation, host, port)
    address = server.server_address
    print(f"serving IrollanValley on http://{address[0]}:{address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
