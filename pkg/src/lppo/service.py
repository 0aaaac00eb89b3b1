"""Line-delimited JSON front end to the scheduler, for trainers that own their own policy.

Requests and responses are single JSON objects, one per line::

    {"op": "report", "id": "q1", "pass_rate": 0.25, "epoch": 2}
        -> {"id": "q1", "weight": 1.12, "disposition": "use"}
    {"op": "weight", "id": "q1"}            -> {"id": "q1", "weight": 1.12}
    {"op": "prefix", "id": "q1"}            -> {"id": ..., "prefix_text": ..., "prefix_len": ..., "lambda": ...}
    {"op": "snapshot"}                      -> {"path": ".../tracker-0001.jsonl"}

Errors come back as ``{"error": ...}`` and never end the session.
"""

from __future__ import annotations

import json
import logging
import socketserver
import threading
from pathlib import Path
from typing import IO

from .config import RunConfig
from .curation import CurationScheduler, Disposition
from .dataset import Pool, Problem
from .env import substream
from .prefix import sample_prefix
from .stats import StatsTracker

log = logging.getLogger(__name__)


class RequestError(ValueError):
    pass


class SchedulerService:
    def __init__(self, problems: list[Problem] | None = None, config: RunConfig | None = None,
                 snapshot_dir: str | Path = "."):
        self.config = config or RunConfig()
        self.problems = {p.id: p for p in problems or []}
        self.tracker = StatsTracker(self.config.weighting())
        self.sched = CurationScheduler(self.problems, self.config.epsilon_c, self.config.pg_enabled,
                                       self.config.max_requeue, self.config.readmit_every)
        self.snapshot_dir = Path(snapshot_dir)
        self._rng = substream(self.config.seed, "serve")
        self._n_snapshots = 0

    def _weight(self, pid: str) -> float:
        return self.tracker.weight(pid) if self.config.lp_enabled else 1.0

    def _pool(self, pid: str, req: dict) -> Pool:
        if pid in self.problems:
            return self.problems[pid].pool
        return Pool(req.get("pool", Pool.STANDARD.value))

    @staticmethod
    def _field(req: dict, name: str):
        if name not in req:
            raise RequestError(f"missing field {name!r}")
        return req[name]

    def op_report(self, req: dict) -> dict:
        pid = str(self._field(req, "id"))
        rate = self._field(req, "pass_rate")
        epoch = self._field(req, "epoch")
        if not isinstance(rate, (int, float)) or isinstance(rate, bool):
            raise RequestError("pass_rate must be a number")
        self.tracker.update_pass_rate(pid, float(rate), int(epoch))
        disp = self.sched.classify(pid, float(rate), self._pool(pid, req))
        if disp is Disposition.SKIP_AND_RETIRE:
            self.sched.retire(pid)
            self.tracker.mark_excluded(pid)
        return {"id": pid, "weight": self._weight(pid), "disposition": disp.value}

    def op_weight(self, req: dict) -> dict:
        pid = str(self._field(req, "id"))
        if pid not in self.tracker:
            raise RequestError(f"unknown id {pid!r}")
        return {"id": pid, "weight": self._weight(pid)}

    def op_prefix(self, req: dict) -> dict:
        pid = str(self._field(req, "id"))
        prob = self.problems.get(pid)
        if prob is None:
            raise RequestError(f"unknown id {pid!r}")
        if prob.pool is not Pool.PREFIX_ELIGIBLE:
            raise RequestError(f"no expert solution for {pid!r}")
        cfg = self.config
        return sample_prefix(prob, self._rng, cfg.beta_min, cfg.beta_max, cfg.clip_rule).to_dict()

    def op_snapshot(self, req: dict) -> dict:
        self._n_snapshots += 1
        self.snapshot_dir.mkdir(parents=True, exist_ok=True)
        path = self.snapshot_dir / f"tracker-{self._n_snapshots:04d}.jsonl"
        self.tracker.save(path)
        return {"path": str(path)}

    def handle(self, req) -> dict:
        if not isinstance(req, dict):
            return {"error": "request must be a JSON object"}
        op = req.get("op")
        fn = getattr(self, f"op_{op}", None) if isinstance(op, str) else None
        if fn is None:
            return {"error": f"unknown op {op!r}"}
        try:
            return fn(req)
        except (RequestError, ValueError, KeyError, TypeError) as exc:
            msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
            return {"error": msg}

    def handle_line(self, line: str) -> str:
        try:
            req = json.loads(line)
        except json.JSONDecodeError as exc:
            resp = {"error": f"unparseable request ({exc.msg})", "line": line.rstrip("\n")}
        else:
            resp = self.handle(req)
        return json.dumps(resp) + "\n"

    def serve_stream(self, fin: IO[str], fout: IO[str]) -> None:
        for line in fin:
            if not line.strip():
                continue
            fout.write(self.handle_line(line))
            fout.flush()


def parse_address(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not port.isdigit():
        raise ValueError(f"socket address must look like host:port, got {addr!r}")
    return host or "127.0.0.1", int(port)


def make_server(service: SchedulerService, addr: str) -> socketserver.ThreadingTCPServer:
    """TCP server that talks to one client at a time and turns others away."""
    busy = threading.Lock()

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            if not busy.acquire(blocking=False):
                self.wfile.write(b'{"error": "scheduler busy: another connection is active"}\n')
                return
            try:
                for raw in self.rfile:
                    line = raw.decode("utf-8")
                    if not line.strip():
                        continue
                    self.wfile.write(service.handle_line(line).encode("utf-8"))
                    self.wfile.flush()
            finally:
                busy.release()

    socketserver.ThreadingTCPServer.allow_reuse_address = True
    server = socketserver.ThreadingTCPServer(parse_address(addr), Handler)
    server.daemon_threads = True
    return server


def replay_weights(service: SchedulerService, weight_log: list[dict]) -> list[float]:
    """Feed a training run's evaluation stream through ``service``; returns the weights it hands back."""
    out = []
    for ev in weight_log:
        if ev["kind"] == "standard":
            req = {"op": "report", "id": ev["id"], "pass_rate": ev["pass_rate"], "epoch": ev["epoch"]}
        else:
            req = {"op": "weight", "id": ev["id"]}
        resp = json.loads(service.handle_line(json.dumps(req)))
        if "error" in resp:
            raise RuntimeError(f"replay failed at {ev}: {resp['error']}")
        out.append(resp["weight"])
    return out
