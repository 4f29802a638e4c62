"""Acceptance suite: one test per release criterion, each printing a PASS
line at its stated tolerance.  Run with `pytest tests/test_acceptance.py -v -s`.
"""
import math
import time

import numpy as np
import pytest

from ssfsim import (PhantomSpec, RigidTransform, Wrench, admittance_step, apply_deadzone,
                    build_phantom, centerline, check_feasibility, default_fps,
                    evaluate_trial, icp_register, make_plan, radius_error,
                    rigid_chord_limit, simulate_procedure, synthesize_tracker_log)
from ssfsim.control import AdmittanceConfig
from ssfsim.errors import NoTransitionFound
from ssfsim.geometry import rotation_about_axis
from ssfsim.screw import ScrewParams, screw_to_dict

from test_screw import brute_force_chord


@pytest.fixture(scope="module")
def phantom():
    return build_phantom(PhantomSpec())


@pytest.fixture(scope="module")
def model_cloud(phantom):
    return phantom.surface_cloud()


def _small_init(rng, max_deg=5.0, max_mm=3.0):
    ax = rng.normal(size=3)
    ax /= np.linalg.norm(ax)
    t = rng.uniform(-1.0, 1.0, 3)
    t *= max_mm * rng.uniform(0.0, 1.0) / max(np.linalg.norm(t), 1e-12)
    return RigidTransform(rotation_about_axis(ax, math.radians(max_deg) * rng.uniform(0.0, 1.0)), t)


def test_timing_reproduction():
    t0 = time.monotonic()
    phantom = build_phantom(PhantomSpec())
    sim = simulate_procedure(make_plan("J", 50, 0, 17, 35), phantom)
    elapsed = time.monotonic() - t0
    assert abs(sim.cutting_time_s - 34.5) <= 0.05
    assert elapsed < 5.0
    print(f"\nACCEPTANCE timing_reproduction: PASS "
          f"(cutting_time={sim.cutting_time_s:.3f} s, runtime={elapsed:.2f} s)")


def test_error_formula_reproduction():
    cases = [(49.28, 50.0, 1.44), (49.61, 50.0, 0.78), (49.43, 50.0, 1.14)]
    for fitted, ideal, expect in cases:
        assert abs(radius_error(fitted, ideal) - expect) <= 0.01
    print("\nACCEPTANCE error_formula_reproduction: PASS "
          + ", ".join(f"({f},{i})->{radius_error(f, i):.2f}%" for f, i, _ in cases))


def test_end_to_end_identity(model_cloud):
    t0 = time.monotonic()
    rng = np.random.default_rng(2024)
    plans = [make_plan("J", 50, 0, 17, 35), make_plan("J", 50, 90, 17, 35),
             make_plan("J", 50, 45, 17, 35), make_plan("I", None, 0, 17, 35)]
    results = []
    for plan in plans:
        log = synthesize_tracker_log(centerline(plan, 0.1), noise_sigma_mm=0.0)
        init = _small_init(rng)
        if plan.shape == "I":
            with pytest.raises(NoTransitionFound):
                evaluate_trial(log, plan, model_cloud, icp_init=init)
            results.append(f"{plan.label}: NoTransitionFound")
            continue
        rep = evaluate_trial(log, plan, model_cloud, icp_init=init)
        assert abs(rep.fitted_radius_mm - plan.radius_mm) <= 0.01
        assert abs(rep.transition_s_mm - 17.0) <= 0.2
        results.append(f"{plan.label}: r={rep.fitted_radius_mm:.4f} "
                       f"s={rep.transition_s_mm:.3f}")
    elapsed = time.monotonic() - t0
    assert elapsed < 30.0
    print(f"\nACCEPTANCE end_to_end_identity: PASS ({'; '.join(results)}, "
          f"runtime={elapsed:.1f} s)")


def test_noise_band_reproduction(model_cloud):
    t0 = time.monotonic()
    rng = np.random.default_rng(99)
    summary = []
    for alpha in (0.0, 90.0):
        plan = make_plan("J", 50, alpha, 17, 35)
        poly = centerline(plan, 0.1)
        radii = []
        for seed in range(100):
            log = synthesize_tracker_log(poly, noise_sigma_mm=0.2, seed=seed)
            rep = evaluate_trial(log, plan, model_cloud, icp_init=_small_init(rng))
            radii.append(rep.fitted_radius_mm)
        mean = float(np.mean(radii))
        std = float(np.std(radii, ddof=1))
        assert 49.0 <= mean <= 51.0
        assert std <= 2.5
        summary.append(f"{plan.label}: {mean:.2f} +/- {std:.2f}")
    elapsed = time.monotonic() - t0
    assert elapsed < 120.0
    print(f"\nACCEPTANCE noise_band_reproduction: PASS ({'; '.join(summary)}, "
          f"runtime={elapsed:.1f} s)")


def test_icp_oracle():
    rng = np.random.default_rng(123)
    cloud = rng.normal(size=(500, 3)) * np.array([30.0, 18.0, 8.0])
    for i in range(50):
        ax = rng.normal(size=3)
        ax /= np.linalg.norm(ax)
        ang = math.radians(30.0) * rng.uniform(0.1, 1.0)
        t = rng.uniform(-1.0, 1.0, 3)
        t *= 20.0 * rng.uniform(0.1, 1.0) / np.linalg.norm(t)
        truth = RigidTransform(rotation_about_axis(ax, ang), t)
        res = icp_register(cloud, truth.apply(cloud))
        assert res.transform.compose(truth.inverse()).rotation_angle_rad() <= 1e-6
        assert np.linalg.norm(res.transform.translation - truth.translation) <= 1e-6
        assert res.rmse_mm <= 1e-9
        h = res.rmse_history
        assert all(b <= a + 1e-12 for a, b in zip(h, h[1:]))
    print("\nACCEPTANCE icp_oracle: PASS (50/50 transforms recovered, "
          "RMSE non-increasing)")


def test_admittance_law_properties():
    rng = np.random.default_rng(7)
    n = 10_000
    rows = rng.uniform(-20.0, 20.0, size=(n, 6))
    scales = rng.uniform(-5.0, 5.0, size=n)
    free = AdmittanceConfig(deadzone_n=0.0, deadzone_nmm=0.0)
    default = AdmittanceConfig()
    k = np.asarray(default.k_diag)

    # vectorized mirror of the law for the full corpus
    lin_free = free.z * k[:3] * rows[:, :3]
    for i in range(0, n, 997):
        tw = admittance_step(Wrench(rows[i, :3], rows[i, 3:]), free)
        np.testing.assert_allclose(tw.linear, lin_free[i], atol=1e-12)
        tws = admittance_step(Wrench(scales[i] * rows[i, :3], scales[i] * rows[i, 3:]), free)
        np.testing.assert_allclose(tws.linear, scales[i] * tw.linear, atol=1e-9)
        assert np.all(tws.angular == 0.0)

    f_dz = np.sign(rows[:, :3]) * np.maximum(np.abs(rows[:, :3]) - default.deadzone_n, 0.0)
    below = np.abs(rows[:, :3]) <= default.deadzone_n
    assert np.all(f_dz[below] == 0.0)
    for i in range(0, n, 1499):
        w = Wrench(rows[i, :3], rows[i, 3:])
        tw = admittance_step(w, default)
        np.testing.assert_allclose(tw.linear, default.z * k[:3] * f_dz[i], atol=1e-12)
        assert np.all(tw.angular == 0.0)
        dz = apply_deadzone(w, default)
        np.testing.assert_allclose(dz.force, f_dz[i], atol=1e-12)
    print(f"\nACCEPTANCE admittance_law: PASS (corpus n={n}: scaling, "
          "zero angular twist, dead-zone nullification)")


def test_feasibility_oracle(j050):
    closed = rigid_chord_limit(50.0, 6.0, 4.0)
    brute = brute_force_chord(50.0, 6.0, 4.0)
    assert abs(closed - 28.284) <= 0.05
    assert abs(closed - brute) <= 0.05

    report = check_feasibility(default_fps(), j050, 6.0)
    assert report.feasible

    long_rigid = ScrewParams(**{**screw_to_dict(default_fps()), "rigid_len_mm": 60.0})
    report60 = check_feasibility(long_rigid, j050, 6.0)
    assert not report60.feasible
    print(f"\nACCEPTANCE feasibility_oracle: PASS (chord={closed:.3f} mm vs "
          f"brute-force {brute:.3f} mm; default FPS feasible; 60 mm rigid infeasible)")


def test_voxel_removal(j050):
    phantom = build_phantom(PhantomSpec(voxel_mm=0.2))
    sim = simulate_procedure(j050, phantom)
    # independent analytic oracle: swept sphere = cylinder + far end cap,
    # minus the section inside the pre-void 17 mm alignment channel
    r = 3.0
    oracle = (math.pi * r ** 2 * j050.total_len_mm + 2.0 / 3.0 * math.pi * r ** 3
              - math.pi * r ** 2 * phantom.spec.pedicle_len_mm)
    rel = abs(sim.removed_volume_mm3 - oracle) / oracle
    assert rel <= 0.02
    assert np.all(sim.removed_per_step >= 0)
    assert sim.removed_per_step.sum() == sim.removed_voxel_count
    print(f"\nACCEPTANCE voxel_removal: PASS (simulated {sim.removed_volume_mm3:.1f} mm^3 "
          f"vs analytic {oracle:.1f} mm^3, rel err {100 * rel:.2f}%; removal monotone)")
