"""The semi-autonomous control law and procedure schedule.

Demonstrates the dead zone, the admittance mapping v = z K F, the stage
timeline for the reference trajectory, and a manually stepped state machine
run from alignment to completion.
"""
import numpy as np

from ssfsim import (AdmittanceConfig, ControlConfig, RigidTransform, Stage, StageInput,
                    Wrench, admittance_step, apply_deadzone, make_plan, procedure_schedule,
                    step)
from ssfsim.control import initial_state

cfg = AdmittanceConfig()
print(f"admittance: z={cfg.z} (mm/s)/N, K=diag{cfg.k_diag}, "
      f"dead zone {cfg.deadzone_n} N / {cfg.deadzone_nmm} N*mm")

for f in ([0.3, 0, 0], [2.0, 0, 0], [-1.0, 0.2, 0]):
    w = Wrench(np.array(f, dtype=float), np.zeros(3))
    dz = apply_deadzone(w, cfg)
    tw = admittance_step(w, cfg)
    print(f"  F={f} N -> deadzoned {dz.force} -> v={tw.linear} mm/s")

w = Wrench(np.zeros(3), np.array([500.0, 0, 0]))
print("  torque-only wrench -> angular twist", admittance_step(w, cfg).angular,
      "(rotational gains are zero)")

plan = make_plan("J", 50, 0, 17, 35)
timeline = procedure_schedule(plan, straight_speed_mm_s=1.0, curve_speed_mm_s=2.0)
print(f"\nschedule for {plan.label}:")
for phase in timeline.phases:
    print(f"  {phase.stage.label:<18} {phase.duration_s:6.1f} s "
          f"@ {phase.speed_mm_s} mm/s, {phase.rpm:.0f} rpm")
print(f"  cutting time {timeline.cutting_time_s} s, total {timeline.total_s} s")

# drive the state machine by hand: steer 0.5 s, then run autonomously
ctrl = ControlConfig()
state = initial_state(RigidTransform.identity())
push = Wrench(np.array([1.5, 0.0, 0.0]), np.zeros(3))
for _ in range(50):
    state = step(state, plan, ctrl, StageInput(wrench=push), ctrl.dt_s)
print(f"\nafter 0.5 s of a 1.5 N push: tool at {np.round(state.tool_pose.translation, 3)}")

state = initial_state(RigidTransform.identity())          # re-align, then go
state = step(state, plan, ctrl, StageInput(command="start_autonomous"), ctrl.dt_s)
transitions = []
while state.stage != Stage.DONE:
    prev = state.stage
    state = step(state, plan, ctrl, None, ctrl.dt_s)
    if state.stage != prev:
        transitions.append((state.stage.label, round(state.elapsed_s, 2)))
print("stage transitions:", transitions)
