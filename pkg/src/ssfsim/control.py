"""Semi-autonomous procedure control.

Stages run strictly forward: Idle -> Admittance -> AutonomousStraight ->
StationaryCurve -> Retracting -> Done.  During admittance the operator's
hand wrench maps to an end-effector twist v = z * K * deadzone(F); the
autonomous straight stage advances the tool along the insertion axis, the
stationary stage holds the manipulator while the steering guide advances
through the curve, and retraction mirrors insertion at reduced drill speed.
I-shape plans pass through StationaryCurve as well, advancing the guide
straight.  Units: mm, s, N, N*mm, rpm.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .errors import NonPositiveSpeed, StageInputMismatch
from .geometry import RigidTransform, rotation_about_axis
from .trajectory import TrajectoryPlan

_EPS_MM = 1e-9


@dataclass(frozen=True)
class Wrench:
    """Operator hand force (N) and torque (N*mm) on the end effector."""

    force: np.ndarray
    torque: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.force, dtype=float).reshape(3)
        t = np.asarray(self.torque, dtype=float).reshape(3)
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(t))):
            raise ValueError("wrench components must be finite")
        object.__setattr__(self, "force", f)
        object.__setattr__(self, "torque", t)

    @staticmethod
    def zero() -> "Wrench":
        return Wrench(np.zeros(3), np.zeros(3))


@dataclass(frozen=True)
class Twist:
    """Commanded end-effector velocity: linear mm/s, angular rad/s."""

    linear: np.ndarray
    angular: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float).reshape(3))
        object.__setattr__(self, "angular", np.asarray(self.angular, dtype=float).reshape(3))


@dataclass(frozen=True)
class AdmittanceConfig:
    """Admittance law parameters: v = z * K * F after per-axis dead zone."""

    z: float = 15.0                                   # (mm/s) per N
    k_diag: tuple = (1.0, 1.0, 1.0, 0.0, 0.0, 0.0)
    deadzone_n: float = 0.5
    deadzone_nmm: float = 50.0

    def __post_init__(self):
        if len(self.k_diag) != 6 or any(k < 0 for k in self.k_diag):
            raise ValueError("k_diag must be 6 non-negative gains")
        if self.deadzone_n < 0 or self.deadzone_nmm < 0:
            raise ValueError("dead-zone thresholds must be non-negative")


def _shrink(v: np.ndarray, threshold: float) -> np.ndarray:
    # continuous dead zone: zero inside, shrink toward zero outside
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def apply_deadzone(w: Wrench, cfg: AdmittanceConfig) -> Wrench:
    """Per-axis continuous dead zone on force and torque components."""
    return Wrench(_shrink(w.force, cfg.deadzone_n), _shrink(w.torque, cfg.deadzone_nmm))


def admittance_step(w: Wrench, cfg: AdmittanceConfig) -> Twist:
    """Admittance law v = z * K * deadzone(F)."""
    wd = apply_deadzone(w, cfg)
    k = np.asarray(cfg.k_diag, dtype=float)
    return Twist(cfg.z * k[:3] * wd.force, cfg.z * k[3:] * wd.torque)


class Stage(IntEnum):
    IDLE = 0
    ADMITTANCE = 1
    AUTONOMOUS_STRAIGHT = 2
    STATIONARY_CURVE = 3
    RETRACTING = 4
    DONE = 5

    @property
    def label(self) -> str:
        return _STAGE_LABELS[self]


_STAGE_LABELS = {
    Stage.IDLE: "Idle",
    Stage.ADMITTANCE: "Admittance",
    Stage.AUTONOMOUS_STRAIGHT: "AutonomousStraight",
    Stage.STATIONARY_CURVE: "StationaryCurve",
    Stage.RETRACTING: "Retracting",
    Stage.DONE: "Done",
}

stage_from_label = {v: k for k, v in _STAGE_LABELS.items()}


@dataclass(frozen=True)
class ControlConfig:
    """Procedure-level configuration (admittance law, speeds, drill rpm)."""

    admittance: AdmittanceConfig = field(default_factory=AdmittanceConfig)
    dt_s: float = 0.01
    straight_speed_mm_s: float = 1.0
    curve_speed_mm_s: float = 2.0
    drill_rpm: float = 8250.0
    retract_rpm: float = 1000.0
    align_tol_mm: float = 1.0      # channel radius minus drill radius
    align_tol_deg: float = 2.0

    def __post_init__(self):
        if self.dt_s <= 0:
            raise ValueError("dt_s must be positive")
        if self.straight_speed_mm_s <= 0 or self.curve_speed_mm_s <= 0:
            raise NonPositiveSpeed("stage speeds must be positive")

    def to_dict(self) -> dict:
        a = self.admittance
        return {"z": a.z, "k_diag": list(a.k_diag), "deadzone_n": a.deadzone_n,
                "deadzone_nmm": a.deadzone_nmm, "dt_s": self.dt_s,
                "straight_speed": self.straight_speed_mm_s, "curve_speed": self.curve_speed_mm_s,
                "drill_rpm": self.drill_rpm, "retract_rpm": self.retract_rpm,
                "align_tol_mm": self.align_tol_mm, "align_tol_deg": self.align_tol_deg}

    @staticmethod
    def from_dict(d: dict) -> "ControlConfig":
        adm = AdmittanceConfig(z=d.get("z", 15.0), k_diag=tuple(d.get("k_diag", (1, 1, 1, 0, 0, 0))),
                               deadzone_n=d.get("deadzone_n", 0.5),
                               deadzone_nmm=d.get("deadzone_nmm", 50.0))
        return ControlConfig(admittance=adm, dt_s=d.get("dt_s", 0.01),
                             straight_speed_mm_s=d.get("straight_speed", 1.0),
                             curve_speed_mm_s=d.get("curve_speed", 2.0),
                             drill_rpm=d.get("drill_rpm", 8250.0),
                             retract_rpm=d.get("retract_rpm", 1000.0),
                             align_tol_mm=d.get("align_tol_mm", 1.0),
                             align_tol_deg=d.get("align_tol_deg", 2.0))


def save_config(path, cfg: ControlConfig) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(cfg.to_dict(), f, indent=2)
        f.write("\n")


def load_config(path) -> ControlConfig:
    with open(path, encoding="utf-8") as f:
        return ControlConfig.from_dict(json.load(f))


@dataclass(frozen=True)
class TimelinePhase:
    stage: Stage
    duration_s: float
    speed_mm_s: float
    rpm: float


@dataclass(frozen=True)
class Timeline:
    phases: tuple

    @property
    def cutting_time_s(self) -> float:
        return sum(p.duration_s for p in self.phases
                   if p.stage in (Stage.AUTONOMOUS_STRAIGHT, Stage.STATIONARY_CURVE))

    @property
    def total_s(self) -> float:
        return sum(p.duration_s for p in self.phases)

    def to_json_list(self) -> list:
        return [{"stage": p.stage.label, "duration_s": p.duration_s,
                 "speed_mm_s": p.speed_mm_s, "rpm": p.rpm} for p in self.phases]


def procedure_schedule(plan: TrajectoryPlan, straight_speed_mm_s: float, curve_speed_mm_s: float,
                       drill_rpm: float = 8250.0, retract_rpm: float = 1000.0) -> Timeline:
    """Phase durations for a plan: straight and curve insertion at the cutting
    rpm, then a mirrored retraction (curve out, straight out) at retract rpm.
    """
    if straight_speed_mm_s <= 0 or curve_speed_mm_s <= 0:
        raise NonPositiveSpeed("speeds must be positive")
    t_straight = plan.straight_len_mm / straight_speed_mm_s
    t_curve = plan.arc_len_mm / curve_speed_mm_s
    phases = (
        TimelinePhase(Stage.AUTONOMOUS_STRAIGHT, t_straight, straight_speed_mm_s, drill_rpm),
        TimelinePhase(Stage.STATIONARY_CURVE, t_curve, curve_speed_mm_s, drill_rpm),
        TimelinePhase(Stage.RETRACTING, t_curve, curve_speed_mm_s, retract_rpm),
        TimelinePhase(Stage.RETRACTING, t_straight, straight_speed_mm_s, retract_rpm),
    )
    return Timeline(phases)


@dataclass(frozen=True)
class ProcedureState:
    """Immutable snapshot of the procedure, advanced by :func:`step`."""

    stage: Stage
    tool_pose: RigidTransform
    straight_progress_mm: float = 0.0
    guide_insertion_mm: float = 0.0
    drill_rpm: float = 0.0
    elapsed_s: float = 0.0

    @property
    def tip_arclen_mm(self) -> float:
        """Arc-length of the drill tip along the plan centerline."""
        return self.straight_progress_mm + self.guide_insertion_mm


@dataclass(frozen=True)
class StageInput:
    """Operator input for one step: a hand wrench and/or a command.

    Commands: "begin" (Idle -> Admittance), "start_autonomous"
    (Admittance -> AutonomousStraight), "abort" (-> Retracting).
    """

    wrench: Wrench | None = None
    command: str | None = None


def initial_state(tool_pose: RigidTransform, stage: Stage = Stage.ADMITTANCE) -> ProcedureState:
    return ProcedureState(stage=stage, tool_pose=tool_pose)


_COMMANDS = ("begin", "start_autonomous", "abort")


def step(state: ProcedureState, plan: TrajectoryPlan, cfg: ControlConfig,
         inp: StageInput | None, dt_s: float) -> ProcedureState:
    """Advance the procedure by dt.  Deterministic; returns a new state.

    Wrench input is only meaningful in the Admittance stage; commands are
    validated against the current stage.  Alignment is not checked here;
    callers that own the phantom decide whether start_autonomous is safe.
    """
    if dt_s <= 0:
        raise ValueError("dt_s must be positive")
    inp = inp or StageInput()
    if inp.wrench is not None and state.stage != Stage.ADMITTANCE:
        raise StageInputMismatch(f"wrench input invalid in stage {state.stage.label}")
    if inp.command is not None:
        if inp.command not in _COMMANDS:
            raise StageInputMismatch(f"unknown command {inp.command!r}")
        if inp.command == "begin":
            if state.stage != Stage.IDLE:
                raise StageInputMismatch("begin only valid from Idle")
            return replace(state, stage=Stage.ADMITTANCE)
        if inp.command == "start_autonomous":
            if state.stage != Stage.ADMITTANCE:
                raise StageInputMismatch("start_autonomous only valid from Admittance")
            return replace(state, stage=Stage.AUTONOMOUS_STRAIGHT, drill_rpm=cfg.drill_rpm)
        if inp.command == "abort":
            if state.stage in (Stage.IDLE, Stage.DONE):
                raise StageInputMismatch(f"abort invalid in stage {state.stage.label}")
            return replace(state, stage=Stage.RETRACTING, drill_rpm=cfg.retract_rpm)

    if state.stage in (Stage.IDLE, Stage.DONE):
        return state

    elapsed = state.elapsed_s + dt_s

    if state.stage == Stage.ADMITTANCE:
        tw = admittance_step(inp.wrench or Wrench.zero(), cfg.admittance)
        pos = state.tool_pose.translation + tw.linear * dt_s
        rot = state.tool_pose.rotation
        wmag = np.linalg.norm(tw.angular)
        if wmag > 0.0:
            rot = rotation_about_axis(tw.angular / wmag, wmag * dt_s) @ rot
        return replace(state, tool_pose=RigidTransform(rot, pos), elapsed_s=elapsed)

    if state.stage == Stage.AUTONOMOUS_STRAIGHT:
        ds = cfg.straight_speed_mm_s * dt_s
        axis = state.tool_pose.rotation[:, 0]
        progress = state.straight_progress_mm + ds
        stage = state.stage
        if progress >= plan.straight_len_mm - _EPS_MM:
            ds -= progress - plan.straight_len_mm
            progress = plan.straight_len_mm
            stage = Stage.STATIONARY_CURVE
        pos = state.tool_pose.translation + axis * ds
        return replace(state, stage=stage, tool_pose=RigidTransform(state.tool_pose.rotation, pos),
                       straight_progress_mm=progress, elapsed_s=elapsed)

    if state.stage == Stage.STATIONARY_CURVE:
        # manipulator holds; the steering guide advances through the curve
        guide = state.guide_insertion_mm + cfg.curve_speed_mm_s * dt_s
        stage = state.stage
        rpm = state.drill_rpm
        if guide >= plan.arc_len_mm - _EPS_MM:
            guide = plan.arc_len_mm
            stage = Stage.RETRACTING
            rpm = cfg.retract_rpm
        return replace(state, stage=stage, guide_insertion_mm=guide, drill_rpm=rpm,
                       elapsed_s=elapsed)

    # Retracting: reverse guide first, then the straight insertion
    guide = state.guide_insertion_mm
    progress = state.straight_progress_mm
    pos = state.tool_pose.translation
    if guide > _EPS_MM:
        guide = max(0.0, guide - cfg.curve_speed_mm_s * dt_s)
    else:
        ds = min(cfg.straight_speed_mm_s * dt_s, progress)
        progress -= ds
        pos = pos - state.tool_pose.rotation[:, 0] * ds
    stage = Stage.RETRACTING
    rpm = state.drill_rpm
    if guide <= _EPS_MM and progress <= _EPS_MM:
        stage = Stage.DONE
        guide = 0.0
        progress = 0.0
        rpm = 0.0
    return replace(state, stage=stage, tool_pose=RigidTransform(state.tool_pose.rotation, pos),
                   straight_progress_mm=progress, guide_insertion_mm=guide, drill_rpm=rpm,
                   elapsed_s=elapsed)
