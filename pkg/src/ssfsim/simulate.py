"""Kinematic drilling simulation against the voxel phantom.

A session couples the control state machine with a plan and a phantom: at
each step the 6 mm ball-nose sphere centered at the drill tip removes any
phantom material it covers.  The headless driver runs a pre-aligned plan to
completion; interactive use (CLI service / UI) drives a DrillingSession
directly with wrenches and commands.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import control
from .control import ControlConfig, ProcedureState, Stage, StageInput, Timeline, Wrench
from .errors import MisalignedEntry, PlanPhantomMismatch
from .geometry import RigidTransform
from .phantom import VoxelPhantom
from .trajectory import Polyline3, TrajectoryPlan, centerline

DRILL_D_MM = 6.0  # ball-nose end mill diameter


@dataclass
class SimLog:
    """Result of one simulated procedure."""

    plan_label: str
    dt_s: float
    cutting_time_s: float
    total_time_s: float
    removed_voxel_count: int
    removed_volume_mm3: float
    timeline: Timeline
    stage_transitions: list          # [(stage label, t_s), ...]
    tip_t_s: np.ndarray
    tip_positions: np.ndarray
    removed_per_step: np.ndarray
    achieved_centerline: Polyline3

    def to_json_dict(self) -> dict:
        return {
            "plan_label": self.plan_label,
            "dt_s": self.dt_s,
            "cutting_time_s": round(self.cutting_time_s, 6),
            "total_time_s": round(self.total_time_s, 6),
            "removed_voxel_count": self.removed_voxel_count,
            "removed_volume_mm3": round(self.removed_volume_mm3, 6),
            "timeline": self.timeline.to_json_list(),
            "stage_transitions": [{"stage": s, "t_s": round(t, 6)} for s, t in self.stage_transitions],
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json_dict(), f, indent=2, ensure_ascii=False)
            f.write("\n")


class DrillingSession:
    """Stateful, steerable drilling procedure against one phantom.

    The session starts in the Admittance stage with the tool at the plan
    entry plus an optional offset.  start_autonomous is accepted only when
    the tool is within the alignment tolerance of the plan entry; drilling
    then follows the plan geometry from the actual (slightly offset) pose.
    """

    def __init__(self, plan: TrajectoryPlan, phantom: VoxelPhantom,
                 cfg: ControlConfig | None = None, initial_offset_mm=(0.0, 0.0, 0.0),
                 drill_d_mm: float = DRILL_D_MM, carve_spacing_mm: float = 0.05):
        self.plan = plan
        self.phantom = phantom
        self.cfg = cfg or ControlConfig()
        self.drill_r_mm = drill_d_mm / 2.0
        self.carve_spacing_mm = carve_spacing_mm
        self._validate_plan_fits()

        pose = RigidTransform(plan.entry_pose.rotation,
                              plan.entry_pose.translation + np.asarray(initial_offset_mm, dtype=float))
        self.state = control.initial_state(pose, Stage.ADMITTANCE)
        self.path: Polyline3 | None = None   # achieved centerline, set at start_autonomous
        self.tip_trace: list = [(0.0, self.tip_position().copy())]
        self.removed_per_step: list = []
        self.stage_transitions: list = [(self.state.stage.label, 0.0)]
        self._last_carve_pos: np.ndarray | None = None
        self._cutting_s = 0.0

    def _validate_plan_fits(self) -> None:
        entry = self.phantom.entry_pose()
        dpos = np.linalg.norm(self.plan.entry_pose.translation - entry.translation)
        axis = self.plan.entry_pose.rotation[:, 0]
        cosang = float(np.clip(axis @ entry.rotation[:, 0], -1.0, 1.0))
        if dpos > self.cfg.align_tol_mm or math.degrees(math.acos(cosang)) > self.cfg.align_tol_deg:
            raise PlanPhantomMismatch(
                f"plan entry is {dpos:.2f} mm off the phantom channel entry")
        path = centerline(self.plan, 0.5)
        if not np.all(self.phantom.contains(path.points)):
            raise PlanPhantomMismatch("plan centerline exits the phantom volume")

    def alignment_error(self) -> tuple:
        """(distance mm, angle deg) between the tool and the plan entry."""
        d = float(np.linalg.norm(self.state.tool_pose.translation - self.plan.entry_pose.translation))
        c = float(np.clip(self.state.tool_pose.rotation[:, 0] @ self.plan.entry_pose.rotation[:, 0],
                          -1.0, 1.0))
        return d, math.degrees(math.acos(c))

    def tip_position(self) -> np.ndarray:
        if self.path is not None and self.state.stage.value >= Stage.AUTONOMOUS_STRAIGHT.value:
            return self.path.point_at(self.state.tip_arclen_mm)
        return self.state.tool_pose.translation

    def step(self, wrench: Wrench | None = None, command: str | None = None) -> ProcedureState:
        """Advance one control step of cfg.dt_s; carves the phantom while
        the drill is engaged.  Raises MisalignedEntry on an unsafe
        start_autonomous command."""
        if command == "start_autonomous":
            dist, ang = self.alignment_error()
            if dist > self.cfg.align_tol_mm or ang > self.cfg.align_tol_deg:
                raise MisalignedEntry(
                    f"tool is {dist:.2f} mm / {ang:.2f} deg off the channel entry "
                    f"(tolerance {self.cfg.align_tol_mm} mm / {self.cfg.align_tol_deg} deg)")
            # freeze the achieved path: plan geometry anchored at the actual pose
            achieved = TrajectoryPlan(self.plan.shape, self.plan.radius_mm, self.plan.alpha_deg,
                                      self.plan.straight_len_mm, self.plan.arc_len_mm,
                                      RigidTransform(self.plan.entry_pose.rotation,
                                                     self.state.tool_pose.translation))
            self.path = centerline(achieved, 0.05)

        prev_stage = self.state.stage
        inp = StageInput(wrench=wrench, command=command)
        self.state = control.step(self.state, self.plan, self.cfg, inp, self.cfg.dt_s)
        if command is not None:
            if self.state.stage != prev_stage:
                self.stage_transitions.append((self.state.stage.label, self.state.elapsed_s))
            return self.state

        removed = 0
        if self.state.stage in (Stage.AUTONOMOUS_STRAIGHT, Stage.STATIONARY_CURVE, Stage.RETRACTING):
            tip = self.tip_position()
            if (self._last_carve_pos is None
                    or np.linalg.norm(tip - self._last_carve_pos) >= self.carve_spacing_mm):
                removed = self.phantom.carve_sphere(tip, self.drill_r_mm)
                self._last_carve_pos = tip.copy()
        if prev_stage in (Stage.AUTONOMOUS_STRAIGHT, Stage.STATIONARY_CURVE):
            self._cutting_s += self.cfg.dt_s

        self.removed_per_step.append(removed)
        self.tip_trace.append((self.state.elapsed_s, self.tip_position().copy()))
        if self.state.stage != prev_stage:
            self.stage_transitions.append((self.state.stage.label, self.state.elapsed_s))
        return self.state

    @property
    def cutting_time_s(self) -> float:
        return self._cutting_s

    def state_summary(self) -> dict:
        """JSON-ready snapshot for the session service."""
        d, _ = self.alignment_error()
        return {
            "stage": self.state.stage.label,
            "pose": self.state.tool_pose.to_pose_dict(),
            "guide_mm": round(self.state.guide_insertion_mm, 6),
            "elapsed_s": round(self.state.elapsed_s, 6),
            "removed": self.phantom.removed_count,
            "align_mm": round(d, 6),
            "progress_mm": round(self.state.straight_progress_mm, 6),
            "rpm": self.state.drill_rpm,
        }

    def finish(self) -> SimLog:
        t, p = zip(*self.tip_trace)
        timeline = control.procedure_schedule(self.plan, self.cfg.straight_speed_mm_s,
                                              self.cfg.curve_speed_mm_s, self.cfg.drill_rpm,
                                              self.cfg.retract_rpm)
        path = self.path if self.path is not None else centerline(self.plan, 0.05)
        return SimLog(
            plan_label=self.plan.label,
            dt_s=self.cfg.dt_s,
            cutting_time_s=self._cutting_s,
            total_time_s=self.state.elapsed_s,
            removed_voxel_count=self.phantom.removed_count,
            removed_volume_mm3=self.phantom.removed_volume_mm3,
            timeline=timeline,
            stage_transitions=self.stage_transitions,
            tip_t_s=np.asarray(t),
            tip_positions=np.asarray(p),
            removed_per_step=np.asarray(self.removed_per_step, dtype=int),
            achieved_centerline=path,
        )


def simulate_procedure(plan: TrajectoryPlan, phantom: VoxelPhantom,
                       cfg: ControlConfig | None = None, operator=None,
                       max_admittance_s: float = 120.0) -> SimLog:
    """Run a procedure to completion and return its log.

    With operator=None the plan must already be aligned with the phantom
    channel (MisalignedEntry otherwise) and the autonomous stages start
    immediately.  An operator callable(t_s, session) -> StageInput | None is
    polled once per step during the admittance stage and may steer and then
    issue the start_autonomous command itself.
    """
    session = DrillingSession(plan, phantom, cfg)
    cfg = session.cfg
    if operator is None:
        session.step(command="start_autonomous")
    else:
        steps = 0
        max_steps = int(max_admittance_s / cfg.dt_s)
        while session.state.stage == Stage.ADMITTANCE:
            inp = operator(session.state.elapsed_s, session) or StageInput()
            session.step(wrench=inp.wrench, command=inp.command)
            steps += 1
            if steps > max_steps:
                raise MisalignedEntry("operator never reached alignment within the time budget")

    guard = int((plan.total_len_mm * 4.0 / min(cfg.straight_speed_mm_s, cfg.curve_speed_mm_s))
                / cfg.dt_s) + 10
    while session.state.stage != Stage.DONE and guard > 0:
        session.step()
        guard -= 1
    if session.state.stage != Stage.DONE:
        raise RuntimeError("simulation failed to reach Done within the step budget")
    return session.finish()
