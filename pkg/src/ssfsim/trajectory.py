"""I/J-shape drilling trajectory geometry.

A J-shape path is a straight insertion segment followed by a planar circular
arc of constant radius; an I-shape path is a single straight segment whose
length is the sum of the straight and "arc" lengths.  In the local frame the
insertion axis is +x and the curve plane for orientation angle alpha = 0 is
the x-y plane, curving toward +y.  Positive alpha rotates the curve plane
right-handed about the insertion axis (clockwise as seen from the entry point
looking along the insertion direction with +z up), so alpha = 90 curves
toward +z.  The plan's entry pose carries the local frame into world
coordinates.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArcTooLong, NegativeLength, NonPositiveRadius
from .geometry import RigidTransform

_SUP = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")
_SUB = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")

DEFAULT_STEP_MM = 0.1


@dataclass(frozen=True)
class TrajectoryPlan:
    """One pedicle's drilling plan (validated by :func:`make_plan`)."""

    shape: str                      # "I" or "J"
    radius_mm: float | None         # unused for I-shape
    alpha_deg: float                # curve-plane orientation, [0, 360)
    straight_len_mm: float
    arc_len_mm: float
    entry_pose: RigidTransform

    @property
    def total_len_mm(self) -> float:
        return self.straight_len_mm + self.arc_len_mm

    @property
    def arc_angle_rad(self) -> float:
        if self.shape == "J" and self.radius_mm:
            return self.arc_len_mm / self.radius_mm
        return 0.0

    @property
    def label(self) -> str:
        return make_label(self)


@dataclass(frozen=True)
class BilateralPlan:
    """Left/right pedicle pair, e.g. the I-J and J-J configurations."""

    left: TrajectoryPlan
    right: TrajectoryPlan
    label: str


@dataclass(frozen=True)
class Polyline3:
    """Sampled 3D curve: points plus cumulative chord arc length."""

    points: np.ndarray            # (N, 3)
    cumulative_arclen: np.ndarray  # (N,)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, 3)
        s = np.asarray(self.cumulative_arclen, dtype=float).reshape(-1)
        if len(p) != len(s) or len(p) < 2:
            raise ValueError("polyline needs >= 2 points with matching arc lengths")
        if s[0] != 0.0 or np.any(np.diff(s) <= 0.0):
            raise ValueError("cumulative arc length must strictly increase from 0")
        seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
        if np.max(np.abs(seg - np.diff(s))) > 1e-9:
            raise ValueError("point spacing inconsistent with arc-length differences")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "cumulative_arclen", s)

    @staticmethod
    def from_points(points: np.ndarray, dedupe: bool = False) -> "Polyline3":
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        if dedupe and len(p) > 1:
            seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
            keep = np.concatenate(([True], seg > 1e-12))
            p = p[keep]
        seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
        s = np.concatenate(([0.0], np.cumsum(seg)))
        return Polyline3(p, s)

    @property
    def length_mm(self) -> float:
        return float(self.cumulative_arclen[-1])

    def point_at(self, s) -> np.ndarray:
        """Linear interpolation along the polyline at arc length(s) s."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length_mm)
        out = np.stack([np.interp(s, self.cumulative_arclen, self.points[:, i]) for i in range(3)], axis=-1)
        return out

    def tangent_at(self, s) -> np.ndarray:
        """Unit tangent of the segment containing arc length(s) s."""
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        idx = np.clip(np.searchsorted(self.cumulative_arclen, s, side="right") - 1, 0, len(self.points) - 2)
        d = self.points[idx + 1] - self.points[idx]
        t = d / np.linalg.norm(d, axis=1, keepdims=True)
        return t[0] if scalar else t


def make_plan(shape: str, radius_mm, alpha_deg: float, straight_len_mm: float,
              arc_len_mm: float, entry_pose: RigidTransform | None = None) -> TrajectoryPlan:
    """Validate and normalize a trajectory plan.

    Raises NonPositiveRadius, ArcTooLong, or NegativeLength on bad input.
    Alpha is normalized to [0, 360).  For I-shape plans the radius is ignored
    and stored as None.
    """
    if shape not in ("I", "J"):
        raise ValueError(f"shape must be 'I' or 'J', got {shape!r}")
    for name, v in (("alpha_deg", alpha_deg), ("straight_len_mm", straight_len_mm),
                    ("arc_len_mm", arc_len_mm)):
        if not math.isfinite(float(v)):
            raise ValueError(f"{name} must be finite")
    if straight_len_mm <= 0.0:
        raise NegativeLength(f"straight_len_mm must be positive, got {straight_len_mm}")
    if arc_len_mm < 0.0:
        raise NegativeLength(f"arc_len_mm must be non-negative, got {arc_len_mm}")
    if shape == "J":
        if radius_mm is None or not math.isfinite(float(radius_mm)) or radius_mm <= 0.0:
            raise NonPositiveRadius(f"J-shape needs radius_mm > 0, got {radius_mm}")
        if arc_len_mm <= 0.0:
            raise NegativeLength("J-shape needs arc_len_mm > 0")
        if arc_len_mm / radius_mm >= math.pi:
            raise ArcTooLong(
                f"arc angle {arc_len_mm / radius_mm:.3f} rad >= pi (arc may not exceed a half circle)")
        radius = float(radius_mm)
    else:
        radius = None
    return TrajectoryPlan(shape, radius, float(alpha_deg) % 360.0, float(straight_len_mm),
                          float(arc_len_mm), entry_pose or RigidTransform.identity())


def _local_points(plan: TrajectoryPlan, s: np.ndarray) -> np.ndarray:
    """Positions along the path at arc-length parameters s, local frame."""
    s = np.asarray(s, dtype=float)
    pts = np.zeros(s.shape + (3,))
    if plan.shape == "I":
        pts[..., 0] = s
        return pts
    ls, r = plan.straight_len_mm, plan.radius_mm
    on_arc = s > ls
    pts[..., 0] = s
    theta = (s[on_arc] - ls) / r
    a = math.radians(plan.alpha_deg)
    y0 = r * (1.0 - np.cos(theta))
    pts[on_arc, 0] = ls + r * np.sin(theta)
    pts[on_arc, 1] = y0 * math.cos(a)
    pts[on_arc, 2] = y0 * math.sin(a)
    return pts


def centerline(plan: TrajectoryPlan, step_mm: float = DEFAULT_STEP_MM) -> Polyline3:
    """Sample the plan's centerline at (at most) step_mm arc-length spacing.

    The last sample lands exactly at the total path length; the straight-to-
    arc junction is tangent continuous by construction.
    """
    if not 0.0 < step_mm <= 1.0:
        raise ValueError(f"step_mm must be in (0, 1], got {step_mm}")
    total = plan.total_len_mm
    n = int(math.floor(total / step_mm))
    s = np.arange(n + 1, dtype=float) * step_mm
    if total - s[-1] > 1e-12:
        s = np.append(s, total)
    else:
        s[-1] = total
    world = plan.entry_pose.apply(_local_points(plan, s))
    return Polyline3.from_points(world)


def arc_endpoint(plan: TrajectoryPlan) -> np.ndarray:
    """Closed-form world-frame endpoint of the plan's centerline."""
    return plan.entry_pose.apply(_local_points(plan, np.array([plan.total_len_mm]))[0])


def make_label(plan: TrajectoryPlan) -> str:
    """Compact class label: 'I' or J with superscript alpha / subscript radius."""
    if plan.shape == "I":
        return "I"
    a, r = plan.alpha_deg, plan.radius_mm
    if abs(a - round(a)) < 1e-9 and abs(r - round(r)) < 1e-9:
        return "J" + str(int(round(a))).translate(_SUP) + str(int(round(r))).translate(_SUB)
    return f"J[alpha={a:g},r={r:g}]"


def make_bilateral(left: TrajectoryPlan, right: TrajectoryPlan, label: str | None = None) -> BilateralPlan:
    auto = f"{left.label}-{right.label}"
    if label is not None and label != auto:
        raise ValueError(f"label {label!r} inconsistent with plans (expected {auto!r})")
    return BilateralPlan(left, right, auto)


def plan_to_dict(plan: TrajectoryPlan) -> dict:
    return {
        "shape": plan.shape,
        "radius_mm": plan.radius_mm,
        "alpha_deg": plan.alpha_deg,
        "straight_len_mm": plan.straight_len_mm,
        "arc_len_mm": plan.arc_len_mm,
        "entry_pose": plan.entry_pose.to_pose_dict(),
    }


def plan_from_dict(d: dict) -> TrajectoryPlan:
    pose = RigidTransform.from_pose_dict(d["entry_pose"]) if "entry_pose" in d else None
    return make_plan(d["shape"], d.get("radius_mm"), d["alpha_deg"],
                     d["straight_len_mm"], d["arc_len_mm"], pose)


def bilateral_to_dict(pair: BilateralPlan) -> dict:
    return {"label": pair.label, "left": plan_to_dict(pair.left), "right": plan_to_dict(pair.right)}


def bilateral_from_dict(d: dict) -> BilateralPlan:
    return make_bilateral(plan_from_dict(d["left"]), plan_from_dict(d["right"]), d.get("label"))


def save_plan(path, obj) -> None:
    """Write a TrajectoryPlan or BilateralPlan as JSON."""
    d = bilateral_to_dict(obj) if isinstance(obj, BilateralPlan) else plan_to_dict(obj)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(d, f, indent=2, ensure_ascii=False)
        f.write("\n")


def load_plan(path):
    """Load a plan file; returns TrajectoryPlan or BilateralPlan."""
    with open(path, encoding="utf-8") as f:
        d = json.load(f)
    if "left" in d:
        return bilateral_from_dict(d)
    return plan_from_dict(d)
