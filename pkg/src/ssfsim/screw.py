"""Flexible pedicle screw geometry and insertion-feasibility checks.

The screw is semi-rigid (pedicle region) / semi-flexible (body region).
Feasibility of a given drilled tunnel is purely geometric: the rigid shaft
must fit the straight bore and any overhang into the curved section must fit
as a chord of the toroidal tunnel; threads are self-tapping and may exceed
the bore, so clearance is checked against thread-root diameters.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTunnel
from .trajectory import TrajectoryPlan


@dataclass(frozen=True)
class ScrewParams:
    """Parametric screw geometry (mm).  Validated on construction."""

    outer_d_mm: float
    root_d_mm: float           # thread-root diameter, rigid region
    flex_root_d_mm: float      # thread-root diameter, flexible region
    thread_h_mm: float         # thread height, flexible region
    thread_h_rigid_mm: float
    pitch_mm: float
    rigid_len_mm: float
    flex_len_mm: float
    cannula_d_mm: float
    min_bend_radius_mm: float
    thread_count: int

    def __post_init__(self):
        vals = [self.outer_d_mm, self.root_d_mm, self.flex_root_d_mm, self.thread_h_mm,
                self.thread_h_rigid_mm, self.pitch_mm, self.rigid_len_mm, self.flex_len_mm,
                self.cannula_d_mm, self.min_bend_radius_mm]
        if any(not math.isfinite(v) or v <= 0.0 for v in vals):
            raise ValueError("all screw dimensions must be positive and finite")
        if self.thread_count < 1:
            raise ValueError("thread_count must be a positive integer")
        if not (self.cannula_d_mm < self.flex_root_d_mm < self.root_d_mm < self.outer_d_mm):
            raise ValueError("need cannula_d < flex_root_d < root_d < outer_d")
        if abs(self.outer_d_mm - (self.flex_root_d_mm + 2.0 * self.thread_h_mm)) > 1e-6:
            raise ValueError("flexible region: outer_d must equal flex_root_d + 2*thread_h")
        if abs(self.outer_d_mm - (self.root_d_mm + 2.0 * self.thread_h_rigid_mm)) > 1e-6:
            raise ValueError("rigid region: outer_d must equal root_d + 2*thread_h_rigid")

    @property
    def total_len_mm(self) -> float:
        return self.rigid_len_mm + self.flex_len_mm


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    rigid_chord_max_mm: float
    rigid_margin_mm: float
    bend_radius_ok: bool
    straight_fit_ok: bool
    notes: list = field(default_factory=list)


def default_fps() -> ScrewParams:
    """The reference flexible pedicle screw: 7 mm OD, 18.0 + 30.3 mm long."""
    return ScrewParams(
        outer_d_mm=7.0,
        root_d_mm=4.0,
        flex_root_d_mm=3.0,
        thread_h_mm=2.0,
        thread_h_rigid_mm=1.5,
        pitch_mm=3.0,
        rigid_len_mm=18.0,
        flex_len_mm=30.3,
        cannula_d_mm=0.9,
        min_bend_radius_mm=50.0,
        thread_count=5,
    )


def rigid_chord_limit(tunnel_radius_mm: float, tunnel_bore_mm: float, segment_d_mm: float) -> float:
    """Longest straight cylinder of diameter d that fits a toroidal tunnel.

    The tunnel has centerline radius R and bore D.  The cylinder axis must
    stay within (D - d)/2 of the centerline circle, i.e. inside the annulus
    [R - D/2 + d/2, R + D/2 - d/2]; the longest chord of that annulus is
    2*sqrt(r_out^2 - r_in^2).  Diameters d >= D are clamped to D (the segment
    then relies on thread tapping and has zero geometric clearance).
    """
    r, bore = float(tunnel_radius_mm), float(tunnel_bore_mm)
    if r <= bore / 2.0:
        raise DegenerateTunnel(f"tunnel radius {r} must exceed half the bore {bore}")
    d = min(max(float(segment_d_mm), 0.0), bore)
    r_out = r + bore / 2.0 - d / 2.0
    r_in = r - bore / 2.0 + d / 2.0
    radicand = r_out * r_out - r_in * r_in
    return 2.0 * math.sqrt(radicand) if radicand > 0.0 else 0.0


def check_feasibility(screw: ScrewParams, plan: TrajectoryPlan, tunnel_bore_mm: float) -> FeasibilityReport:
    """Geometric insertion feasibility of a screw in a drilled tunnel.

    The rigid shaft occupies the straight tunnel first; only its overhang
    beyond the straight length is tested against the curved-chord limit.
    Thread crests may exceed the bore (self-tapping), thread roots may not.
    """
    notes: list[str] = []
    straight_fit_ok = screw.root_d_mm <= tunnel_bore_mm + 1e-9
    if not straight_fit_ok:
        notes.append(f"rigid thread root {screw.root_d_mm} mm exceeds tunnel bore {tunnel_bore_mm} mm")
    if screw.outer_d_mm > tunnel_bore_mm:
        notes.append(f"thread crests exceed bore by {screw.outer_d_mm - tunnel_bore_mm:.2f} mm "
                     "(self-tapping engagement)")

    if plan.shape == "I":
        rigid_chord_max = math.inf
        rigid_margin = math.inf
        bend_radius_ok = True
        notes.append("straight tunnel: no bend constraints")
    else:
        if screw.root_d_mm >= tunnel_bore_mm:
            notes.append("rigid root diameter clamped to bore for chord-limit check")
        rigid_chord_max = rigid_chord_limit(plan.radius_mm, tunnel_bore_mm, screw.root_d_mm)
        overhang = max(0.0, screw.rigid_len_mm - plan.straight_len_mm)
        rigid_margin = rigid_chord_max - overhang
        if overhang > 0.0:
            notes.append(f"rigid shaft overhangs straight tunnel by {overhang:.2f} mm "
                         f"(chord limit {rigid_chord_max:.3f} mm)")
        bend_radius_ok = plan.radius_mm >= screw.min_bend_radius_mm
        if not bend_radius_ok:
            notes.append(f"plan radius {plan.radius_mm} mm below minimum bend radius "
                         f"{screw.min_bend_radius_mm} mm")

    feasible = rigid_margin >= 0.0 and bend_radius_ok and straight_fit_ok
    return FeasibilityReport(feasible, rigid_chord_max, rigid_margin, bend_radius_ok,
                             straight_fit_ok, notes)


def screw_to_dict(screw: ScrewParams) -> dict:
    return {k: getattr(screw, k) for k in (
        "outer_d_mm", "root_d_mm", "flex_root_d_mm", "thread_h_mm", "thread_h_rigid_mm",
        "pitch_mm", "rigid_len_mm", "flex_len_mm", "cannula_d_mm", "min_bend_radius_mm",
        "thread_count")}


def screw_from_dict(d: dict) -> ScrewParams:
    return ScrewParams(**d)


def save_screw(path, screw: ScrewParams) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(screw_to_dict(screw), f, indent=2)
        f.write("\n")


def load_screw(path) -> ScrewParams:
    with open(path, encoding="utf-8") as f:
        return screw_from_dict(json.load(f))


def _circle_segments(radius: float, tol: float) -> int:
    # sagitta of one chord <= tol
    if radius <= tol:
        return 8
    dphi = 2.0 * math.acos(max(1.0 - tol / radius, -1.0))
    return max(8, int(math.ceil(2.0 * math.pi / dphi)))


def _cylinder_tris(radius: float, z0: float, z1: float, n: int) -> list:
    phi = np.linspace(0.0, 2.0 * math.pi, n + 1)
    x, y = radius * np.cos(phi), radius * np.sin(phi)
    tris = []
    for i in range(n):
        a = (x[i], y[i], z0)
        b = (x[i + 1], y[i + 1], z0)
        c = (x[i], y[i], z1)
        d = (x[i + 1], y[i + 1], z1)
        tris.append((a, b, c))
        tris.append((b, d, c))
    return tris


def screw_profile_mesh(screw: ScrewParams, tol_mm: float = 0.05) -> np.ndarray:
    """Simplified triangle mesh of the screw: two shaft cylinders along +z
    (rigid region first) plus a helical thread ribbon from root to crest.

    Returns an (n_tris, 3, 3) float array.  The flexible region's cut pattern
    is not modeled; both regions render as plain cylinders.
    """
    n = _circle_segments(screw.outer_d_mm / 2.0, tol_mm)
    tris: list = []
    tris += _cylinder_tris(screw.root_d_mm / 2.0, 0.0, screw.rigid_len_mm, n)
    tris += _cylinder_tris(screw.flex_root_d_mm / 2.0, screw.rigid_len_mm, screw.total_len_mm, n)

    # helical ribbon: inner helix on the root surface, outer helix at the crest
    turns = screw.total_len_mm / screw.pitch_mm
    steps = max(16, int(math.ceil(turns * n)))
    t = np.linspace(0.0, turns * 2.0 * math.pi, steps + 1)
    z = np.linspace(0.0, screw.total_len_mm, steps + 1)
    rigid = z <= screw.rigid_len_mm
    r_in = np.where(rigid, screw.root_d_mm / 2.0, screw.flex_root_d_mm / 2.0)
    r_out = np.full_like(r_in, screw.outer_d_mm / 2.0)
    inner = np.stack([r_in * np.cos(t), r_in * np.sin(t), z], axis=1)
    outer = np.stack([r_out * np.cos(t), r_out * np.sin(t), z], axis=1)
    for i in range(steps):
        tris.append((tuple(inner[i]), tuple(outer[i]), tuple(inner[i + 1])))
        tris.append((tuple(outer[i]), tuple(outer[i + 1]), tuple(inner[i + 1])))
    return np.asarray(tris, dtype=float)


def write_stl(path, triangles: np.ndarray, name: str = "screw") -> None:
    """Write triangles as ASCII STL (normals recomputed per facet)."""
    tris = np.asarray(triangles, dtype=float)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"solid {name}\n")
        for a, b, c in tris:
            nvec = np.cross(b - a, c - a)
            norm = np.linalg.norm(nvec)
            nvec = nvec / norm if norm > 0 else nvec
            f.write(f"  facet normal {nvec[0]:.6e} {nvec[1]:.6e} {nvec[2]:.6e}\n")
            f.write("    outer loop\n")
            for v in (a, b, c):
                f.write(f"      vertex {v[0]:.6e} {v[1]:.6e} {v[2]:.6e}\n")
            f.write("    endloop\n")
            f.write("  endfacet\n")
        f.write(f"endsolid {name}\n")
