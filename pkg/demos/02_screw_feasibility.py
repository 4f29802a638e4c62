"""Flexible pedicle screw geometry and tunnel feasibility.

Shows the default screw parameters, how the rigid-segment chord limit varies
with tunnel curvature, and full feasibility reports for a few plan/screw
combinations.  Exports a simplified STL of the screw profile.
"""
import os

import numpy as np

from ssfsim import check_feasibility, default_fps, make_plan, rigid_chord_limit
from ssfsim.screw import ScrewParams, screw_profile_mesh, screw_to_dict, write_stl

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

fps = default_fps()
print("default FPS:", screw_to_dict(fps))
print(f"total length {fps.total_len_mm} mm "
      f"(rigid {fps.rigid_len_mm} + flexible {fps.flex_len_mm})")

print("\nrigid chord limit in a 6 mm bore, 4 mm rigid root:")
for r in (30, 40, 50, 80, 120):
    print(f"  tunnel radius {r:>4} mm -> {rigid_chord_limit(r, 6.0, 4.0):7.3f} mm")

j050 = make_plan("J", 50, 0, 17, 35)
report = check_feasibility(fps, j050, tunnel_bore_mm=6.0)
print(f"\ndefault FPS in {j050.label} (6 mm bore): feasible={report.feasible}")
print(f"  chord limit {report.rigid_chord_max_mm:.3f} mm, "
      f"margin {report.rigid_margin_mm:.3f} mm")
for note in report.notes:
    print("  note:", note)

long_rigid = ScrewParams(**{**screw_to_dict(fps), "rigid_len_mm": 60.0})
print("\n60 mm rigid variant:", check_feasibility(long_rigid, j050, 6.0).feasible)

tight = make_plan("J", 30, 0, 17, 35)
print("30 mm radius plan  :", check_feasibility(fps, tight, 6.0).feasible,
      "(below the 50 mm minimum bend radius)")

tris = screw_profile_mesh(fps, tol_mm=0.05)
stl_path = os.path.join(OUT, "fps.stl")
write_stl(stl_path, tris, name="fps")
print(f"\nwrote {stl_path} ({len(tris)} triangles, "
      f"bbox z: 0..{np.max(tris[:, :, 2]):.1f} mm)")
