import math

import numpy as np
import pytest

from ssfsim import (EvalConfig, RigidTransform, TrialReport, aggregate, centerline,
                    detect_transition, evaluate_trial, fit_circle_3d, make_plan,
                    radius_error, synthesize_tracker_log)
from ssfsim.errors import (CollinearPoints, EmptyInput, InsufficientArc, NoTransitionFound,
                           TooShort)
from ssfsim.evaluation import RETRACTION, load_report, save_report
from ssfsim.geometry import rotation_about_axis
from ssfsim.tracker import TrackerLog
from ssfsim.trajectory import Polyline3


def arc_points(radius=50.0, angle=0.7, n=70, seed=None, sigma=0.0):
    th = np.linspace(0.0, angle, n)
    pts = np.stack([radius * np.sin(th), radius * (1 - np.cos(th)), np.zeros(n)], axis=1)
    if sigma > 0.0:
        rng = np.random.default_rng(seed)
        pts = pts + rng.normal(0.0, sigma / math.sqrt(3.0), size=pts.shape)
    return pts


class TestCircleFit:
    def test_exact_recovery(self):
        fit = fit_circle_3d(arc_points())
        assert fit.radius_mm == pytest.approx(50.0, abs=1e-6)
        assert fit.rmse_mm < 1e-9
        np.testing.assert_allclose(np.abs(fit.normal), [0, 0, 1], atol=1e-9)

    def test_rigid_invariance(self):
        pts = arc_points()
        t = RigidTransform(rotation_about_axis([1.0, 2.0, -0.5], 1.1),
                           np.array([12.0, -4.0, 9.0]))
        a = fit_circle_3d(pts)
        b = fit_circle_3d(t.apply(pts))
        assert abs(a.radius_mm - b.radius_mm) <= 1e-9
        assert abs(a.rmse_mm - b.rmse_mm) <= 1e-9

    def test_monte_carlo_band_70_points(self):
        # frozen Monte Carlo facts for seeds 0..99: 70 points over 0.7 rad at
        # 0.2 mm noise give radius std ~0.75 mm, so the 95% band is +/-1.5 mm
        # (+/-1 mm coverage at this sparse count is only ~82%)
        radii = np.array([fit_circle_3d(arc_points(seed=s, sigma=0.2)).radius_mm
                          for s in range(100)])
        assert abs(radii.mean() - 50.0) <= 0.25
        assert radii.std(ddof=1) <= 1.0
        assert np.sum(np.abs(radii - 50.0) <= 1.5) >= 95
        assert np.all(np.abs(radii - 50.0) <= 2.5)

    def test_monte_carlo_band_pipeline_density(self):
        # at the pipeline's real sample count (~700 points over the arc) every
        # seeded fit lands within +/-1 mm of the true radius
        radii = np.array([fit_circle_3d(arc_points(n=700, seed=s, sigma=0.2)).radius_mm
                          for s in range(100)])
        assert np.sum(np.abs(radii - 50.0) <= 1.0) >= 95

    def test_collinear_rejected(self):
        pts = np.outer(np.linspace(0, 10, 20), [1.0, 0.5, 0.0])
        with pytest.raises(CollinearPoints):
            fit_circle_3d(pts)

    def test_too_few_points(self):
        with pytest.raises(InsufficientArc):
            fit_circle_3d(arc_points(n=4))

    def test_insufficient_arc_span(self):
        with pytest.raises(InsufficientArc):
            fit_circle_3d(arc_points(angle=math.radians(5.0), n=30))


class TestRadiusError:
    def test_reference_table_values(self):
        assert radius_error(49.28, 50.0) == pytest.approx(1.44, abs=1e-9)
        assert radius_error(49.61, 50.0) == pytest.approx(0.78, abs=1e-9)
        assert radius_error(49.43, 50.0) == pytest.approx(1.14, abs=1e-9)

    def test_properties(self):
        for r in (1.0, 30.0, 50.0, 123.4):
            assert radius_error(r, r) == 0.0
        assert radius_error(48.0, 50.0) == radius_error(52.0, 50.0)
        with pytest.raises(ValueError):
            radius_error(50.0, 0.0)


class TestDetectTransition:
    def test_noiseless_centerline(self, j050):
        poly = centerline(j050, 0.1)
        assert detect_transition(poly) == pytest.approx(17.0, abs=0.2)

    def test_i_shape_has_no_transition(self):
        poly = centerline(make_plan("I", None, 0, 17, 35), 0.1)
        with pytest.raises(NoTransitionFound):
            detect_transition(poly)

    def test_too_short(self):
        poly = centerline(make_plan("I", None, 0, 5, 0), 0.1)
        with pytest.raises(TooShort):
            detect_transition(poly, window_mm=3.0)

    def test_noisy_monte_carlo(self, j050):
        poly = centerline(j050, 0.1)
        estimates = []
        for seed in range(25):
            log = synthesize_tracker_log(poly, sample_hz=40, noise_sigma_mm=0.2, seed=seed)
            traj = Polyline3.from_points(log.positions, dedupe=True)
            estimates.append(detect_transition(traj))
        estimates = np.asarray(estimates)
        assert abs(estimates.mean() - 17.0) <= 1.0
        assert np.all(np.abs(estimates - 17.0) <= 1.0)


class TestEvaluateTrial:
    def test_noiseless_identity(self, j050, model_cloud):
        poly = centerline(j050, 0.1)
        log = synthesize_tracker_log(poly, noise_sigma_mm=0.0)
        rep = evaluate_trial(log, j050, model_cloud, trial_id="t0")
        assert rep.fitted_radius_mm == pytest.approx(50.0, abs=0.01)
        assert rep.radius_error_pct <= 0.02
        assert rep.transition_s_mm == pytest.approx(17.0, abs=0.2)
        assert rep.icp_rmse_mm <= 1e-9
        assert rep.label == "J⁰₅₀"

    def test_retraction_direction(self, j050, model_cloud):
        poly = centerline(j050, 0.1)
        log = synthesize_tracker_log(poly, noise_sigma_mm=0.0)
        reversed_log = TrackerLog(log.t_s, log.positions[::-1].copy(),
                                  log.directions[::-1].copy())
        rep = evaluate_trial(reversed_log, j050, model_cloud, direction=RETRACTION)
        assert rep.fitted_radius_mm == pytest.approx(50.0, abs=0.01)
        assert rep.direction == RETRACTION

    def test_short_log(self, j050, model_cloud):
        poly = centerline(make_plan("I", None, 0, 10, 0), 0.1)
        log = synthesize_tracker_log(poly, noise_sigma_mm=0.0)
        with pytest.raises(TooShort):
            evaluate_trial(log, j050, model_cloud)

    def test_true_tracker_frame_offset(self, j050, model_cloud):
        # measured cloud genuinely offset from the model frame: the pipeline
        # must register and still recover radius and transition
        t = RigidTransform(rotation_about_axis([0.3, 1.0, 0.2], np.radians(12.0)),
                           np.array([8.0, -6.0, 4.0]))
        poly = centerline(j050, 0.1)
        world_log = synthesize_tracker_log(poly, noise_sigma_mm=0.0)
        tracker_log = TrackerLog(world_log.t_s, t.apply(world_log.positions),
                                 t.apply_vector(world_log.directions))
        measured = t.apply(model_cloud)
        rep = evaluate_trial(tracker_log, j050, model_cloud, measured_cloud=measured)
        assert rep.fitted_radius_mm == pytest.approx(50.0, abs=0.01)
        assert rep.transition_s_mm == pytest.approx(17.0, abs=0.2)
        assert rep.icp_rmse_mm <= 1e-6

    def test_report_roundtrip(self, tmp_path, j050, model_cloud):
        poly = centerline(j050, 0.1)
        log = synthesize_tracker_log(poly, noise_sigma_mm=0.0)
        rep = evaluate_trial(log, j050, model_cloud, trial_id="t1")
        path = tmp_path / "report.json"
        save_report(path, rep)
        assert load_report(path) == rep


def _report(trial_id, label, radius, icp=0.8, ideal=50.0):
    return TrialReport(trial_id=trial_id, label=label, direction="insertion",
                       icp_rmse_mm=icp, transition_s_mm=17.0, fitted_radius_mm=radius,
                       radius_error_pct=radius_error(radius, ideal), n_points=700,
                       ideal_radius_mm=ideal, fit_rmse_mm=0.1, direction_agreement_deg=0.5)


class TestAggregate:
    def test_single_report(self):
        table = aggregate([_report("a", "J⁰₅₀", 50.0)])
        assert table.combined.mean_radius_mm == 50.0
        assert table.combined.std_radius_mm == 0.0

    def test_min_max_extremes(self):
        table = aggregate([_report("a", "X", 45.00), _report("b", "X", 50.03)])
        assert table.combined.min_radius_mm == pytest.approx(45.00)
        assert table.combined.max_radius_mm == pytest.approx(50.03)

    def test_combined_mean_is_weighted_class_mean(self):
        reports = ([_report(f"a{i}", "A", 49.0 + 0.2 * i) for i in range(6)]
                   + [_report(f"b{i}", "B", 50.5 - 0.3 * i) for i in range(4)])
        table = aggregate(reports)
        weighted = sum(c.n * c.mean_radius_mm for c in table.classes) / sum(
            c.n for c in table.classes)
        assert table.combined.mean_radius_mm == pytest.approx(weighted, abs=1e-12)

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            aggregate([])

    def test_render_format(self):
        reports = ([_report(f"a{i}", "J⁰₅₀", r) for i, r in
                    enumerate([47.58, 49.28, 50.98])]
                   + [_report(f"b{i}", "J⁹⁰₅₀", r) for i, r in
                      enumerate([46.06, 49.61, 53.16])])
        text = aggregate(reports).render_text()
        assert "Radius of Curvature" in text and "Error" in text and "ICP RMSE" in text
        assert "Combined" in text and "Ideal" in text
        assert "49.28 ±" in text and "%" in text

    def test_ideal_column(self):
        table = aggregate([_report("a", "A", 49.0), _report("b", "B", 51.0)])
        assert table.ideal_radius_mm == 50.0
        mixed = aggregate([_report("a", "A", 49.0), _report("b", "B", 51.0, ideal=30.0)])
        assert mixed.ideal_radius_mm is None
