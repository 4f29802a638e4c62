"""Planning I/J-shape drilling trajectories.

Builds the three bilateral configurations used on the bench (I-J, J0-J90,
J90-J90), samples their centerlines, and checks the closed-form endpoints.
Writes plan JSON files and a 3D figure into demos/output/.
"""
import os

import numpy as np

from ssfsim import arc_endpoint, centerline, make_bilateral, make_plan, save_plan

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

# the reference geometry: 17 mm straight through the pedicle, then a 35 mm
# curved insertion at a 50 mm radius
j0 = make_plan("J", radius_mm=50, alpha_deg=0, straight_len_mm=17, arc_len_mm=35)
j90 = make_plan("J", 50, 90, 17, 35)
i_shape = make_plan("I", None, 0, 17, 35)

print("plan labels:", i_shape.label, j0.label, j90.label)
print("arc angle:", j0.arc_angle_rad, "rad")
print("J0 endpoint :", np.round(arc_endpoint(j0), 3))
print("J90 endpoint:", np.round(arc_endpoint(j90), 3))
print("I  endpoint :", np.round(arc_endpoint(i_shape), 3))

pairs = [make_bilateral(i_shape, j0), make_bilateral(j0, j90), make_bilateral(j90, j90)]
for pair in pairs:
    path = os.path.join(OUT, f"pair_{pair.label.replace('-', '_')}.json")
    save_plan(path, pair)
    print("wrote", path)

# sampled centerlines: the last point always lands on the analytic endpoint
for plan in (i_shape, j0, j90):
    poly = centerline(plan, step_mm=0.1)
    gap = np.linalg.norm(poly.points[-1] - arc_endpoint(plan))
    print(f"{plan.label}: {len(poly.points)} samples, "
          f"length {poly.length_mm:.3f} mm, endpoint gap {gap:.2e} mm")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig = plt.figure(figsize=(7, 5))
    ax = fig.add_subplot(projection="3d")
    for plan, color in ((i_shape, "gray"), (j0, "tab:blue"), (j90, "tab:red")):
        poly = centerline(plan, 0.2)
        ax.plot(*poly.points.T, color=color, label=plan.label)
    ax.set_xlabel("x (mm)")
    ax.set_ylabel("y (mm)")
    ax.set_zlabel("z (mm)")
    ax.legend()
    ax.set_title("Drilling trajectory centerlines")
    fig.tight_layout()
    fig.savefig(os.path.join(OUT, "trajectories.png"), dpi=120)
    print("wrote", os.path.join(OUT, "trajectories.png"))
except ImportError:
    print("matplotlib not available; skipping the figure")
