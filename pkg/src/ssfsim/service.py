"""Interactive session service: newline-delimited JSON over one TCP socket.

Client messages:
  {"type": "wrench", "seq": n, "f": [fx, fy, fz], "tau": [tx, ty, tz],
   "hold_s": 0.05}          # hold_s only meaningful in stepped mode
  {"type": "command", "seq": n, "name": "start_autonomous" | "abort" | "reset"}

Server messages:
  {"type": "state", "seq": n, "stage": ..., "pose": ..., "guide_mm": ...,
   "elapsed_s": ..., "removed": ..., "align_mm": ..., "progress_mm": ...}
  {"type": "report", "seq": n, "cutting_time_s": ..., "report": {...} | null}
  {"type": "error", "seq": n, "echo_seq": m | null, "message": ...}

One session at a time; a disconnect pauses the procedure and a reconnect
resumes it.  In realtime mode the state machine advances on the wall clock
(states at >= 30 Hz); in stepped mode simulated time advances only while
processing messages, which makes scripted sessions deterministic and fast.
"""
from __future__ import annotations

import json
import logging
import math
import socket
import threading
import time

import numpy as np

from . import evaluation
from .control import ControlConfig, Stage, Wrench
from .errors import MisalignedEntry, SsfError, StageInputMismatch
from .phantom import VoxelPhantom, build_phantom
from .simulate import DrillingSession
from .tracker import synthesize_tracker_log
from .trajectory import TrajectoryPlan

log = logging.getLogger("ssfsim.service")

PROTOCOL_VERSION = 1


class SessionServer:
    """Serves one interactive drilling session until it completes."""

    def __init__(self, plan: TrajectoryPlan, phantom: VoxelPhantom,
                 cfg: ControlConfig | None = None, port: int = 0, host: str = "127.0.0.1",
                 realtime: bool = True, initial_offset_mm=(0.0, 0.0, 0.0),
                 noise_sigma_mm: float = 0.2, seed: int = 0, state_hz: float = 30.0):
        self.plan = plan
        self.phantom = phantom
        self.cfg = cfg or ControlConfig()
        self.realtime = realtime
        self.noise_sigma_mm = noise_sigma_mm
        self.seed = seed
        self.initial_offset_mm = tuple(initial_offset_mm)
        self.session = DrillingSession(plan, phantom, self.cfg, initial_offset_mm)
        self._state_every = max(1, round((1.0 / state_hz) / self.cfg.dt_s))
        self._step_count = 0
        self._sock = socket.create_server((host, port))
        self.port = self._sock.getsockname()[1]
        self._conn: socket.socket | None = None
        self._conn_file = None
        self._send_lock = threading.Lock()
        self._step_lock = threading.Lock()
        self._seq = 0
        self._last_client_seq = None
        self._wrench: Wrench | None = None
        self._stop = threading.Event()
        self._report_sent = threading.Event()
        self._threads: list[threading.Thread] = []

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        t = threading.Thread(target=self._accept_loop, name="ssf-accept", daemon=True)
        t.start()
        self._threads.append(t)
        if self.realtime:
            t2 = threading.Thread(target=self._realtime_loop, name="ssf-loop", daemon=True)
            t2.start()
            self._threads.append(t2)

    def stop(self) -> None:
        self._stop.set()
        try:
            self._sock.close()
        except OSError:
            pass
        with self._send_lock:
            if self._conn is not None:
                try:
                    self._conn.close()
                except OSError:
                    pass
                self._conn = None

    def join(self, timeout: float | None = None) -> None:
        self._report_sent.wait(timeout)
        self.stop()
        for t in self._threads:
            t.join(timeout=2.0)

    # -- networking ---------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, addr = self._sock.accept()
            except OSError:
                return
            log.info("client connected: %s", addr)
            with self._send_lock:
                self._conn = conn
                self._conn_file = conn.makefile("r", encoding="utf-8")
            self._send_state(extra={"protocol": PROTOCOL_VERSION})
            self._reader_loop()
            with self._send_lock:
                self._conn = None
                self._conn_file = None
            self._wrench = None
            if self._report_sent.is_set():
                self._stop.set()
                return

    def _reader_loop(self) -> None:
        f = self._conn_file
        while not self._stop.is_set():
            try:
                line = f.readline()
            except (OSError, ValueError):
                return
            if not line:
                return
            line = line.strip()
            if not line:
                continue
            self._handle_line(line)
            if self._report_sent.is_set():
                return

    def _send(self, msg: dict) -> None:
        with self._send_lock:
            if self._conn is None:
                return
            msg["seq"] = self._seq
            self._seq += 1
            try:
                self._conn.sendall((json.dumps(msg) + "\n").encode("utf-8"))
            except OSError:
                self._conn = None

    def _send_state(self, extra: dict | None = None) -> None:
        with self._step_lock:
            body = self.session.state_summary()
        msg = {"type": "state", **body}
        if extra:
            msg.update(extra)
        self._send(msg)

    def _send_error(self, message: str, echo_seq=None) -> None:
        self._send({"type": "error", "echo_seq": echo_seq, "message": message})

    # -- message handling ---------------------------------------------------

    def _handle_line(self, line: str) -> None:
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as e:
            self._send_error(f"malformed JSON: {e}")
            return
        seq = msg.get("seq")
        if not isinstance(seq, int) or (self._last_client_seq is not None
                                        and seq <= self._last_client_seq):
            self._send_error("missing or non-monotone seq", echo_seq=seq)
            return
        self._last_client_seq = seq
        mtype = msg.get("type")
        if mtype == "wrench":
            self._handle_wrench(msg)
        elif mtype == "command":
            self._handle_command(msg)
        else:
            self._send_error(f"unknown message type {mtype!r}", echo_seq=seq)

    def _handle_wrench(self, msg: dict) -> None:
        seq = msg["seq"]
        try:
            f = [float(v) for v in msg["f"]]
            tau = [float(v) for v in msg.get("tau", (0.0, 0.0, 0.0))]
            if len(f) != 3 or len(tau) != 3 or not all(map(math.isfinite, f + tau)):
                raise ValueError("wrench needs 6 finite numbers")
            w = Wrench(np.array(f), np.array(tau))
        except (KeyError, TypeError, ValueError) as e:
            self._send_error(f"bad wrench payload: {e}", echo_seq=seq)
            return
        if self.session.state.stage != Stage.ADMITTANCE:
            self._send_error(f"wrench ignored in stage {self.session.state.stage.label}",
                             echo_seq=seq)
            return
        if self.realtime:
            self._wrench = w
            return
        hold_s = float(msg.get("hold_s", 1.0 / 20.0))
        n = max(1, round(hold_s / self.cfg.dt_s))
        with self._step_lock:
            for _ in range(n):
                self.session.step(wrench=w)
                self._step_count += 1
                if self._step_count % self._state_every == 0:
                    self._send_unlocked_state()

    def _handle_command(self, msg: dict) -> None:
        seq = msg["seq"]
        name = msg.get("name")
        if name == "reset":
            with self._step_lock:
                self.phantom = build_phantom(self.phantom.spec)
                self.session = DrillingSession(self.plan, self.phantom, self.cfg,
                                               self.initial_offset_mm)
                self._wrench = None
                self._step_count = 0
            self._send_state()
            return
        if name not in ("start_autonomous", "abort"):
            self._send_error(f"unknown command {name!r}", echo_seq=seq)
            return
        try:
            with self._step_lock:
                self.session.step(command=name)
        except MisalignedEntry as e:
            self._send_error(f"MisalignedEntry: {e}", echo_seq=seq)
            return
        except (StageInputMismatch, SsfError) as e:
            self._send_error(f"{type(e).__name__}: {e}", echo_seq=seq)
            return
        self._send_state()
        if not self.realtime:
            self._run_to_done()

    def _send_unlocked_state(self) -> None:
        # caller already holds the step lock
        body = self.session.state_summary()
        self._send({"type": "state", **body})

    def _run_to_done(self) -> None:
        with self._step_lock:
            while self.session.state.stage not in (Stage.DONE, Stage.ADMITTANCE, Stage.IDLE):
                self.session.step()
                self._step_count += 1
                if self._step_count % self._state_every == 0:
                    self._send_unlocked_state()
            done = self.session.state.stage == Stage.DONE
        if done:
            self._send_state()
            self._send_report()

    def _realtime_loop(self) -> None:
        dt = self.cfg.dt_s
        next_t = time.monotonic()
        while not self._stop.is_set():
            if self._conn is None or self._report_sent.is_set():
                time.sleep(0.02)   # paused: no client, or finished
                next_t = time.monotonic()
                continue
            with self._step_lock:
                stage = self.session.state.stage
                if stage == Stage.ADMITTANCE:
                    self.session.step(wrench=self._wrench)
                elif stage in (Stage.AUTONOMOUS_STRAIGHT, Stage.STATIONARY_CURVE,
                               Stage.RETRACTING):
                    self.session.step()
                done = self.session.state.stage == Stage.DONE
                self._step_count += 1
                emit = self._step_count % self._state_every == 0
            if emit or done:
                self._send_state()
            if done:
                self._send_report()
                continue
            next_t += dt
            delay = next_t - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            else:
                next_t = time.monotonic()

    def _send_report(self) -> None:
        if self._report_sent.is_set():
            return
        simlog = self.session.finish()
        payload = {
            "type": "report",
            "plan_label": simlog.plan_label,
            "cutting_time_s": round(simlog.cutting_time_s, 3),
            "removed_voxel_count": simlog.removed_voxel_count,
            "report": None,
        }
        try:
            tlog = synthesize_tracker_log(simlog.achieved_centerline,
                                          noise_sigma_mm=self.noise_sigma_mm, seed=self.seed)
            model = self.phantom.surface_cloud()
            rep = evaluation.evaluate_trial(tlog, self.plan, model, trial_id="session")
            payload["report"] = rep.to_dict()
        except SsfError as e:
            payload["evaluation_error"] = type(e).__name__
        self._send(payload)
        self._report_sent.set()


def serve_session(plan: TrajectoryPlan, phantom: VoxelPhantom, port: int,
                  cfg: ControlConfig | None = None, realtime: bool = True,
                  **kwargs) -> None:
    """Blocking convenience wrapper: serve one session until it completes."""
    server = SessionServer(plan, phantom, cfg=cfg, port=port, realtime=realtime, **kwargs)
    server.start()
    server.join()
