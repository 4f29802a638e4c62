"""Trajectory evaluation: transition detection, curvature fit, error tables.

The pipeline mirrors the physical workflow: register the phantom model into
the tracker frame (ICP), map the measured tip path into the model frame,
locate the straight-to-curve transition, fit a circle to the curved section,
and compare the fitted radius against the plan.  Radius and transition are
rigid-invariant, so registration residuals do not bias them.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import (CollinearPoints, EmptyInput, InsufficientArc, NoTransitionFound,
                     TooShort)
from .geometry import RigidTransform
from .registration import icp_register
from .tracker import TrackerLog
from .trajectory import Polyline3, TrajectoryPlan

INSERTION = "insertion"
RETRACTION = "retraction"


@dataclass(frozen=True)
class EvalConfig:
    icp_max_iter: int = 50
    icp_tol: float = 1e-10
    window_mm: float = 3.0
    dev_tol_mm: float = 0.3


@dataclass(frozen=True)
class CircleFit3D:
    radius_mm: float
    center: np.ndarray
    normal: np.ndarray
    rmse_mm: float


@dataclass(frozen=True)
class TrialReport:
    trial_id: str
    label: str
    direction: str
    icp_rmse_mm: float
    transition_s_mm: float
    fitted_radius_mm: float
    radius_error_pct: float
    n_points: int                     # points used in the circle fit
    ideal_radius_mm: float
    fit_rmse_mm: float
    direction_agreement_deg: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @staticmethod
    def from_dict(d: dict) -> "TrialReport":
        return TrialReport(**{k: d[k] for k in TrialReport.__dataclass_fields__})


def save_report(path, report: TrialReport) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2, ensure_ascii=False)
        f.write("\n")


def load_report(path) -> TrialReport:
    with open(path, encoding="utf-8") as f:
        return TrialReport.from_dict(json.load(f))


# ---------------------------------------------------------------------------
# geometry helpers

def _moving_average(arr: np.ndarray, half: int) -> np.ndarray:
    """Centered moving average with shrinking windows at the edges."""
    a = np.atleast_2d(np.asarray(arr, dtype=float).T).T
    n = len(a)
    cs = np.vstack([np.zeros((1, a.shape[1])), np.cumsum(a, axis=0)])
    i = np.arange(n)
    lo = np.maximum(i - half, 0)
    hi = np.minimum(i + half + 1, n)
    out = (cs[hi] - cs[lo]) / (hi - lo)[:, None]
    return out if np.ndim(arr) > 1 else out[:, 0]


def _valid_moving_average(points: np.ndarray, half: int) -> np.ndarray:
    """Moving average over full windows only; row j averages points
    [j, j + 2*half], i.e. it is centered on raw index j + half."""
    win = 2 * half + 1
    cs = np.vstack([np.zeros((1, points.shape[1])), np.cumsum(points, axis=0)])
    return (cs[win:] - cs[:-win]) / win


def _tls_line(points: np.ndarray):
    """Total-least-squares line: (centroid, unit direction)."""
    c = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - c, full_matrices=False)
    return c, vt[0]


def _line_devs(points: np.ndarray, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    rel = points - c
    along = rel @ d
    return np.linalg.norm(rel - along[:, None] * d, axis=1)


def _line_sse(points: np.ndarray) -> float:
    if len(points) < 3:
        return 0.0
    m = points - points.mean(axis=0)
    ev = np.linalg.eigvalsh(m.T @ m)
    return float(max(ev.sum() - ev[-1], 0.0))


def _plane_project(points: np.ndarray):
    c = points.mean(axis=0)
    _, s, vt = np.linalg.svd(points - c, full_matrices=False)
    if s[0] < 1e-12 or s[1] / s[0] < 1e-9:
        raise CollinearPoints("points are collinear")
    uv = (points - c) @ vt[:2].T
    h = (points - c) @ vt[2]
    return c, vt, uv, h


def _kasa_fit(uv: np.ndarray):
    """Algebraic circle fit; returns (center_uv, radius)."""
    a = np.column_stack([uv, np.ones(len(uv))])
    b = -(uv[:, 0] ** 2 + uv[:, 1] ** 2)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    cu, cv = -sol[0] / 2.0, -sol[1] / 2.0
    r2 = cu * cu + cv * cv - sol[2]
    if r2 <= 0:
        raise CollinearPoints("algebraic circle fit degenerated")
    return np.array([cu, cv]), math.sqrt(r2)


def _circle_sse(points: np.ndarray) -> float:
    """Quick two-stage residual for candidate scoring (algebraic fit only)."""
    if len(points) < 5:
        return math.inf
    try:
        _, _, uv, h = _plane_project(points)
        c, r = _kasa_fit(uv)
    except CollinearPoints:
        return math.inf
    rho = np.linalg.norm(uv - c, axis=1)
    return float(np.sum((rho - r) ** 2) + np.sum(h * h))


def fit_circle_3d(points: np.ndarray) -> CircleFit3D:
    """Best-fit 3D circle: PCA plane, algebraic init, geometric refinement.

    Requires >= 5 points spanning >= 10 degrees of arc after projection.
    The returned RMSE is the root-mean-square 3D distance to the circle.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) < 5:
        raise InsufficientArc(f"need >= 5 points, got {len(pts)}")
    c0, vt, uv, h = _plane_project(pts)
    center0, _ = _kasa_fit(uv)

    def resid(c):
        d = np.linalg.norm(uv - c, axis=1)
        return d - d.mean()

    sol = least_squares(resid, center0, method="lm")
    dists = np.linalg.norm(uv - sol.x, axis=1)
    radius = float(dists.mean())

    ang = np.arctan2(uv[:, 1] - sol.x[1], uv[:, 0] - sol.x[0])
    ang = np.sort(ang)
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
    span = 2 * math.pi - gaps.max()
    if span < math.radians(10.0):
        raise InsufficientArc(f"arc span {math.degrees(span):.2f} deg < 10 deg")

    center3 = c0 + sol.x[0] * vt[0] + sol.x[1] * vt[1]
    normal = vt[2]
    rel = pts[:-1] - center3
    swept = np.cross(rel, pts[1:] - center3).sum(axis=0)
    if swept @ normal < 0:
        normal = -normal
    rmse = float(np.sqrt(np.mean((dists - radius) ** 2 + h * h)))
    return CircleFit3D(radius, center3, normal, rmse)


def _tangency_refine(smooth: np.ndarray, s: np.ndarray, t: float, margin_mm: float):
    """Junction of a line tangent to an arc: project the arc center onto the
    entry line.  Returns the refined arc length, or None when either side of
    the candidate split has too few clear samples."""
    straight_sel = s <= t - margin_mm
    curved = smooth[s >= t + margin_mm]
    straight = smooth[straight_sel]
    if len(straight) < 8 or len(curved) < 12:
        return None
    c0, d = _tls_line(straight)
    if d @ (smooth[-1] - smooth[0]) < 0:
        d = -d
    try:
        fit = fit_circle_3d(curved)
    except (CollinearPoints, InsufficientArc):
        return None
    # the line's own arc-length offset: s is affine in the along-line coord
    u = (straight - c0) @ d
    const = float(np.mean(s[straight_sel] - u))
    return float((fit.center - c0) @ d + const)


def _detect_transition_index(poly: Polyline3, window_mm: float, dev_tol_mm: float):
    """Transition arc length and sample index (see detect_transition)."""
    pts = poly.points
    n = len(pts)
    if n < 12:
        raise TooShort(f"polyline has only {n} samples")

    # smoothing window sized from the sample pitch; raw chord lengths are
    # inflated by noise, so re-estimate the pitch once on the smoothed path
    half = max(1, int(round(window_mm / float(np.median(np.diff(poly.cumulative_arclen))))) // 2)
    for _ in range(2):
        half = min(half, (n - 8) // 2)
        smooth = _valid_moving_average(pts, half)
        pitch = float(np.median(np.linalg.norm(np.diff(smooth, axis=0), axis=1)))
        new_half = max(1, int(round(window_mm / pitch)) // 2)
        if new_half == half or new_half > (n - 8) // 2:
            break
        half = new_half

    # arc length of smoothed sample j (centered on raw index j + half)
    seg = np.linalg.norm(np.diff(smooth, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)]) + half * pitch
    total = s[-1] + half * pitch
    if total <= 2.0 * window_mm:
        raise TooShort(f"polyline length {total:.2f} mm <= 2 * window {window_mm} mm")

    # grow the anchor line over the leading straight run
    w = max(window_mm, s[0] + window_mm / 2.0)
    n_lead = max(3, int(np.count_nonzero(s <= w)))
    anchor = _tls_line(smooth[:n_lead])
    while True:
        nxt = w + window_mm / 2.0
        if nxt > total - window_mm:
            break
        sel = smooth[s <= nxt]
        cand = _tls_line(sel)
        if _line_devs(sel, *cand).max() > dev_tol_mm / 2.0:
            break
        w, anchor = nxt, cand

    devs = _line_devs(smooth, *anchor)
    mdev = _moving_average(devs, half)
    beyond = np.flatnonzero((s > w) & (mdev > dev_tol_mm))
    if len(beyond) == 0:
        raise NoTransitionFound(
            f"no persistent deviation above {dev_tol_mm} mm from the leading line")
    j_exceed = int(beyond[0])

    # two-segment (line + circle) residual scan over candidate splits of the
    # smoothed path, then a tangency refinement: for a line that runs tangent
    # into an arc, the junction is the projection of the arc center onto the
    # line, which is far less noise-sensitive than the residual scan alone
    j_lo = max(3, int(np.searchsorted(s, window_mm)))
    j_hi = min(j_exceed, len(smooth) - 5)
    if j_hi <= j_lo:
        j_hi = min(j_lo + 1, len(smooth) - 5)

    def split_sse(j):
        return _line_sse(smooth[:j]) + _circle_sse(smooth[j:])

    stride = max(1, (j_hi - j_lo) // 40)
    coarse = list(range(j_lo, j_hi + 1, stride))
    best_j = min(coarse, key=split_sse)
    lo = max(j_lo, best_j - stride)
    hi = min(j_hi, best_j + stride)
    best_j = min(range(lo, hi + 1), key=split_sse)
    t = float(s[best_j])

    for _ in range(2):
        t_new = _tangency_refine(smooth, s, t, window_mm)
        if t_new is None:
            break
        converged = abs(t_new - t) < 1e-6
        t = min(max(t_new, window_mm), float(s[j_hi]))
        if converged:
            break

    k = int(np.clip(half + np.searchsorted(s, t), 3, n - 5))
    return t, k


def detect_transition(poly: Polyline3, window_mm: float = 3.0, dev_tol_mm: float = 0.3) -> float:
    """Arc length where the path departs its leading straight segment.

    Fits a total-least-squares line to a growing leading window, finds where
    the windowed mean deviation first exceeds dev_tol persistently, then
    refines the split point by minimizing the combined line + circle
    residual.  Raises NoTransitionFound for straight (I-shape) data and
    TooShort when the path cannot hold two windows.
    """
    s, _ = _detect_transition_index(poly, window_mm, dev_tol_mm)
    return s


def radius_error(fitted_mm: float, ideal_mm: float) -> float:
    """Percent radius error, 100 * |ideal - fitted| / ideal."""
    if ideal_mm <= 0:
        raise ValueError("ideal radius must be positive")
    return 100.0 * abs(ideal_mm - fitted_mm) / ideal_mm


def evaluate_trial(log: TrackerLog, plan: TrajectoryPlan, model_cloud: np.ndarray,
                   cfg: EvalConfig | None = None, measured_cloud: np.ndarray | None = None,
                   icp_init: RigidTransform | None = None, trial_id: str = "",
                   direction: str = INSERTION) -> TrialReport:
    """Full single-trial evaluation.

    model_cloud is the phantom surface model in the model frame;
    measured_cloud is the same surface observed in the tracker frame
    (defaults to model_cloud, i.e. frames already coincide).  Retraction
    logs are reversed so one code path serves both directions.
    """
    cfg = cfg or EvalConfig()
    if direction not in (INSERTION, RETRACTION):
        raise ValueError(f"direction must be '{INSERTION}' or '{RETRACTION}'")
    if len(log) < 5:
        raise TooShort(f"log has only {len(log)} samples")

    positions = log.positions
    sample_dirs = log.directions
    if direction == RETRACTION:
        positions = positions[::-1]
        sample_dirs = sample_dirs[::-1]

    measured = measured_cloud if measured_cloud is not None else model_cloud
    icp = icp_register(model_cloud, measured, init=icp_init or RigidTransform.identity(),
                       max_iter=cfg.icp_max_iter, tol=cfg.icp_tol)
    to_model = icp.transform.inverse()
    traj = to_model.apply(positions)
    dirs = to_model.apply_vector(sample_dirs)

    # drop zero-motion samples, keeping directions aligned with positions
    seg = np.linalg.norm(np.diff(traj, axis=0), axis=1)
    keep = np.concatenate(([True], seg > 1e-12))
    traj, dirs = traj[keep], dirs[keep]
    poly = Polyline3.from_points(traj)
    if poly.length_mm <= plan.straight_len_mm:
        raise TooShort(
            f"trajectory length {poly.length_mm:.2f} mm does not clear the "
            f"{plan.straight_len_mm} mm straight segment")

    transition_s, k = _detect_transition_index(poly, cfg.window_mm, cfg.dev_tol_mm)
    if plan.shape == "I" or plan.radius_mm is None:
        raise NoTransitionFound(
            f"curved segment detected at {transition_s:.2f} mm in a straight-plan trial")
    fit = fit_circle_3d(poly.points[k:])
    err = radius_error(fit.radius_mm, plan.radius_mm)

    tangents = poly.tangent_at(np.minimum(poly.cumulative_arclen, poly.length_mm - 1e-9))
    dots = np.abs(np.sum(dirs[: len(tangents)] * tangents, axis=1))
    agreement = float(np.degrees(np.arccos(np.clip(dots, -1.0, 1.0)).mean()))

    return TrialReport(
        trial_id=trial_id,
        label=plan.label,
        direction=direction,
        icp_rmse_mm=icp.rmse_mm,
        transition_s_mm=transition_s,
        fitted_radius_mm=fit.radius_mm,
        radius_error_pct=err,
        n_points=len(poly.points) - k,
        ideal_radius_mm=plan.radius_mm,
        fit_rmse_mm=fit.rmse_mm,
        direction_agreement_deg=agreement,
    )


# ---------------------------------------------------------------------------
# aggregation

@dataclass(frozen=True)
class ClassSummary:
    label: str
    n: int
    mean_radius_mm: float
    std_radius_mm: float
    mean_error_pct: float
    min_radius_mm: float
    max_radius_mm: float
    mean_icp_rmse_mm: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class SummaryTable:
    classes: tuple
    combined: ClassSummary
    ideal_radius_mm: float | None

    def to_dict(self) -> dict:
        return {"ideal_radius_mm": self.ideal_radius_mm,
                "classes": [c.to_dict() for c in self.classes],
                "combined": self.combined.to_dict()}

    def render_text(self) -> str:
        cols = [c.label for c in self.classes] + ["Combined"]
        summaries = list(self.classes) + [self.combined]
        ideal = f"{self.ideal_radius_mm:.2f}" if self.ideal_radius_mm is not None else "-"
        rows = [
            ["Radius of Curvature (mm)", ideal] +
            [f"{c.mean_radius_mm:.2f} ± {c.std_radius_mm:.2f}" for c in summaries],
            ["Error", "0"] + [f"{c.mean_error_pct:.2f}%" for c in summaries],
            ["ICP RMSE (mm)", "0"] +
            [f"{c.mean_icp_rmse_mm:.4f}" for c in self.classes] + [""],
        ]
        header = ["Trajectory", "Ideal"] + cols
        widths = [max(len(str(r[i])) for r in rows + [header]) for i in range(len(header))]
        lines = ["  ".join(str(v).ljust(w) for v, w in zip(row, widths)).rstrip()
                 for row in [header] + rows]
        return "\n".join(lines)


def _summarize(label: str, reports: list) -> ClassSummary:
    radii = np.array([r.fitted_radius_mm for r in reports])
    errs = np.array([r.radius_error_pct for r in reports])
    rmses = np.array([r.icp_rmse_mm for r in reports])
    std = float(np.std(radii, ddof=1)) if len(radii) > 1 else 0.0
    return ClassSummary(label, len(reports), float(radii.mean()), std, float(errs.mean()),
                        float(radii.min()), float(radii.max()), float(rmses.mean()))


def aggregate(reports) -> SummaryTable:
    """Per-class and combined statistics over trial reports."""
    reports = sorted(reports, key=lambda r: r.trial_id)
    if not reports:
        raise EmptyInput("no trial reports to aggregate")
    by_label: dict = {}
    for r in reports:
        by_label.setdefault(r.label, []).append(r)
    classes = tuple(_summarize(lbl, rs) for lbl, rs in sorted(by_label.items()))
    combined = _summarize("Combined", reports)
    ideals = {r.ideal_radius_mm for r in reports}
    ideal = ideals.pop() if len(ideals) == 1 else None
    return SummaryTable(classes, combined, ideal)
