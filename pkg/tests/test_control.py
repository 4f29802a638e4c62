import numpy as np
import pytest

from ssfsim import (AdmittanceConfig, ControlConfig, RigidTransform, Stage, StageInput,
                    Wrench, admittance_step, apply_deadzone, make_plan, procedure_schedule,
                    step)
from ssfsim.control import ProcedureState, initial_state, load_config, save_config
from ssfsim.errors import NonPositiveSpeed, StageInputMismatch

NO_DEADZONE = AdmittanceConfig(deadzone_n=0.0, deadzone_nmm=0.0)


class TestDeadzone:
    def test_below_threshold_zeroed(self):
        cfg = AdmittanceConfig(deadzone_n=0.5)
        out = apply_deadzone(Wrench(np.array([0.3, 0, 0]), np.zeros(3)), cfg)
        np.testing.assert_array_equal(out.force, [0, 0, 0])

    def test_continuous_shrink(self):
        cfg = AdmittanceConfig(deadzone_n=0.5)
        out = apply_deadzone(Wrench(np.array([2.5, 0, 0]), np.zeros(3)), cfg)
        np.testing.assert_allclose(out.force, [2.0, 0, 0])

    def test_per_axis_sign_preserving(self):
        cfg = AdmittanceConfig(deadzone_n=0.5)
        out = apply_deadzone(Wrench(np.array([-1.0, 0.2, 0]), np.zeros(3)), cfg)
        np.testing.assert_allclose(out.force, [-0.5, 0, 0])

    def test_torque_threshold_separate(self):
        cfg = AdmittanceConfig(deadzone_n=0.5, deadzone_nmm=50.0)
        out = apply_deadzone(Wrench(np.zeros(3), np.array([40.0, 80.0, -60.0])), cfg)
        np.testing.assert_allclose(out.torque, [0.0, 30.0, -10.0])


class TestAdmittanceLaw:
    def test_paper_constants(self):
        tw = admittance_step(Wrench(np.array([2.0, 0, 0]), np.zeros(3)), NO_DEADZONE)
        np.testing.assert_allclose(tw.linear, [30.0, 0, 0])
        np.testing.assert_array_equal(tw.angular, [0, 0, 0])

    def test_torque_only_gives_zero_twist(self):
        tw = admittance_step(Wrench(np.zeros(3), np.array([5.0, 0, 0])), NO_DEADZONE)
        np.testing.assert_array_equal(tw.linear, [0, 0, 0])
        np.testing.assert_array_equal(tw.angular, [0, 0, 0])

    def test_deadzone_nullifies(self):
        cfg = AdmittanceConfig(deadzone_n=0.5)
        tw = admittance_step(Wrench(np.array([0.3, 0, 0]), np.zeros(3)), cfg)
        np.testing.assert_array_equal(tw.linear, [0, 0, 0])

    def test_linear_scaling_property(self):
        rng = np.random.default_rng(11)
        wrenches = rng.uniform(-10, 10, size=(10_000, 6))
        scales = rng.uniform(-3, 3, size=10_000)
        for row, a in zip(wrenches[:200], scales[:200]):
            w = Wrench(row[:3], row[3:])
            wa = Wrench(a * row[:3], a * row[3:])
            v1 = admittance_step(w, NO_DEADZONE)
            v2 = admittance_step(wa, NO_DEADZONE)
            np.testing.assert_allclose(v2.linear, a * v1.linear, rtol=1e-12, atol=1e-12)

    def test_zero_angular_under_default_k_corpus(self):
        rng = np.random.default_rng(12)
        rows = rng.uniform(-100, 100, size=(10_000, 6))
        cfg = AdmittanceConfig()
        k = np.asarray(cfg.k_diag)
        f = np.sign(rows[:, :3]) * np.maximum(np.abs(rows[:, :3]) - cfg.deadzone_n, 0.0)
        tau = np.sign(rows[:, 3:]) * np.maximum(np.abs(rows[:, 3:]) - cfg.deadzone_nmm, 0.0)
        ang = cfg.z * k[3:] * tau
        lin = cfg.z * k[:3] * f
        assert np.all(ang == 0.0)
        for i in (0, 1234, 9999):
            tw = admittance_step(Wrench(rows[i, :3], rows[i, 3:]), cfg)
            np.testing.assert_array_equal(tw.angular, [0, 0, 0])
            np.testing.assert_allclose(tw.linear, lin[i], atol=1e-12)


class TestSchedule:
    def test_reference_cutting_time(self, j050):
        tl = procedure_schedule(j050, 1.0, 2.0)
        assert tl.cutting_time_s == pytest.approx(17.0 + 17.5, abs=1e-12)
        assert tl.cutting_time_s == pytest.approx(34.5)

    def test_simple_case(self):
        plan = make_plan("I", None, 0, 10, 10)
        tl = procedure_schedule(plan, 1.0, 1.0)
        assert tl.cutting_time_s == pytest.approx(20.0)

    def test_zero_arc(self):
        plan = make_plan("I", None, 0, 10, 0)
        tl = procedure_schedule(plan, 1.0, 2.0)
        curve = [p for p in tl.phases if p.stage == Stage.STATIONARY_CURVE]
        assert curve[0].duration_s == 0.0

    def test_retraction_mirrors_insertion(self, j050):
        tl = procedure_schedule(j050, 1.0, 2.0, drill_rpm=8250, retract_rpm=1000)
        retract = [p for p in tl.phases if p.stage == Stage.RETRACTING]
        assert sum(p.duration_s for p in retract) == pytest.approx(34.5)
        assert all(p.rpm == 1000 for p in retract)
        assert tl.total_s == pytest.approx(69.0)

    def test_non_positive_speed(self, j050):
        with pytest.raises(NonPositiveSpeed):
            procedure_schedule(j050, 0.0, 2.0)

    def test_json_shape(self, j050):
        rows = procedure_schedule(j050, 1.0, 2.0).to_json_list()
        assert rows[0] == {"stage": "AutonomousStraight", "duration_s": 17.0,
                           "speed_mm_s": 1.0, "rpm": 8250.0}


class TestStep:
    def test_admittance_integration(self, j050):
        cfg = ControlConfig(admittance=NO_DEADZONE)
        state = initial_state(RigidTransform.identity())
        out = step(state, j050, cfg, StageInput(wrench=Wrench(np.array([1.0, 0, 0]),
                                                              np.zeros(3))), 0.1)
        np.testing.assert_allclose(out.tool_pose.translation, [1.5, 0, 0], atol=1e-12)
        assert out.stage == Stage.ADMITTANCE

    def test_straight_clamps_and_transitions(self, j050):
        cfg = ControlConfig()
        state = ProcedureState(Stage.AUTONOMOUS_STRAIGHT, RigidTransform.identity(),
                               straight_progress_mm=16.95, drill_rpm=8250.0)
        out = step(state, j050, cfg, None, 0.1)
        assert out.straight_progress_mm == pytest.approx(17.0, abs=1e-12)
        assert out.stage == Stage.STATIONARY_CURVE

    def test_curve_completion_drops_rpm(self, j050):
        cfg = ControlConfig()
        state = ProcedureState(Stage.STATIONARY_CURVE, RigidTransform.identity(),
                               straight_progress_mm=17.0, guide_insertion_mm=34.99,
                               drill_rpm=8250.0)
        out = step(state, j050, cfg, None, 0.01)
        assert out.stage == Stage.RETRACTING
        assert out.guide_insertion_mm == pytest.approx(35.0)
        assert out.drill_rpm == 1000.0

    def test_stage_input_mismatch(self, j050):
        cfg = ControlConfig()
        state = ProcedureState(Stage.AUTONOMOUS_STRAIGHT, RigidTransform.identity())
        with pytest.raises(StageInputMismatch):
            step(state, j050, cfg, StageInput(wrench=Wrench.zero()), 0.01)
        with pytest.raises(StageInputMismatch):
            step(initial_state(RigidTransform.identity(), Stage.IDLE), j050, cfg,
                 StageInput(command="start_autonomous"), 0.01)
        with pytest.raises(StageInputMismatch):
            step(state, j050, cfg, StageInput(command="warp"), 0.01)

    def test_full_run_matches_schedule(self, j050):
        cfg = ControlConfig()
        state = initial_state(RigidTransform.identity())
        state = step(state, j050, cfg, StageInput(command="start_autonomous"), cfg.dt_s)
        schedule = procedure_schedule(j050, cfg.straight_speed_mm_s, cfg.curve_speed_mm_s)
        cutting = 0.0
        stages = [state.stage]
        guard = 100_000
        while state.stage != Stage.DONE and guard:
            if state.stage in (Stage.AUTONOMOUS_STRAIGHT, Stage.STATIONARY_CURVE):
                cutting += cfg.dt_s
            state = step(state, j050, cfg, None, cfg.dt_s)
            stages.append(state.stage)
            guard -= 1
        assert guard
        assert abs(cutting - schedule.cutting_time_s) <= cfg.dt_s
        indices = [s.value for s in stages]
        assert all(a <= b for a, b in zip(indices, indices[1:]))
        assert state.guide_insertion_mm == 0.0 and state.straight_progress_mm == 0.0
        np.testing.assert_allclose(state.tool_pose.translation, [0, 0, 0], atol=1e-9)

    def test_determinism(self, j050):
        cfg = ControlConfig()
        state = ProcedureState(Stage.AUTONOMOUS_STRAIGHT, RigidTransform.identity(),
                               straight_progress_mm=5.0)
        a = step(state, j050, cfg, None, 0.01)
        b = step(state, j050, cfg, None, 0.01)
        assert a.straight_progress_mm == b.straight_progress_mm
        np.testing.assert_array_equal(a.tool_pose.translation, b.tool_pose.translation)

    def test_abort_jumps_to_retract(self, j050):
        cfg = ControlConfig()
        state = ProcedureState(Stage.AUTONOMOUS_STRAIGHT, RigidTransform.identity(),
                               straight_progress_mm=5.0, drill_rpm=8250.0)
        out = step(state, j050, cfg, StageInput(command="abort"), 0.01)
        assert out.stage == Stage.RETRACTING and out.drill_rpm == 1000.0


class TestConfigIO:
    def test_roundtrip(self, tmp_path):
        cfg = ControlConfig(admittance=AdmittanceConfig(z=10.0, deadzone_n=0.25),
                            dt_s=0.02, curve_speed_mm_s=3.0)
        path = tmp_path / "cfg.json"
        save_config(path, cfg)
        loaded = load_config(path)
        assert loaded.admittance.z == 10.0
        assert loaded.admittance.deadzone_n == 0.25
        assert loaded.dt_s == 0.02 and loaded.curve_speed_mm_s == 3.0

    def test_flat_schema_keys(self):
        d = ControlConfig().to_dict()
        assert {"z", "k_diag", "deadzone_n", "deadzone_nmm", "dt_s", "straight_speed",
                "curve_speed", "drill_rpm", "retract_rpm"} <= set(d)
