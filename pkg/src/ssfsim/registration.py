"""Point-to-point ICP rigid registration.

Each iteration matches every source point to its nearest target point and
solves the closed-form (SVD) least-squares rigid alignment; the reported
RMSE is the root-mean-square nearest-neighbor distance under the current
transform and is non-increasing across iterations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateGeometry
from .geometry import RigidTransform


def _check_cloud(points: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(p) < 3:
        raise DegenerateGeometry(f"{name} cloud needs >= 3 points")
    s = np.linalg.svd(p - p.mean(axis=0), compute_uv=False)
    if s[0] < 1e-12 or s[1] / s[0] < 1e-9:
        raise DegenerateGeometry(f"{name} cloud is collinear or coincident")
    return p


def kabsch(source: np.ndarray, target: np.ndarray) -> RigidTransform:
    """Least-squares rigid transform mapping paired source points onto target."""
    src = np.asarray(source, dtype=float)
    tgt = np.asarray(target, dtype=float)
    cs, ct = src.mean(axis=0), tgt.mean(axis=0)
    h = (src - cs).T @ (tgt - ct)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return RigidTransform(r, ct - r @ cs)


def principal_axes_init(source: np.ndarray, target: np.ndarray) -> RigidTransform:
    """Coarse alignment from centroids and principal axes.

    Tries the four proper-rotation axis-sign combinations and keeps the one
    with the lowest nearest-neighbor RMSE.  Useful when no initial transform
    is known; requires clouds with distinct principal-axis spreads.
    """
    src = np.asarray(source, dtype=float)
    tgt = np.asarray(target, dtype=float)
    cs, ct = src.mean(axis=0), tgt.mean(axis=0)
    _, _, vs = np.linalg.svd(src - cs)
    _, _, vt = np.linalg.svd(tgt - ct)
    if np.linalg.det(vs) < 0:
        vs[2] = -vs[2]
    if np.linalg.det(vt) < 0:
        vt[2] = -vt[2]
    tree = cKDTree(tgt)
    best = None
    for signs in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
        r = vt.T @ np.diag(signs) @ vs
        t = RigidTransform(r, ct - r @ cs)
        d, _ = tree.query(t.apply(src))
        rmse = float(np.sqrt(np.mean(d * d)))
        if best is None or rmse < best[0]:
            best = (rmse, t)
    return best[1]


@dataclass(frozen=True)
class ICPResult:
    transform: RigidTransform
    rmse_mm: float
    rmse_history: tuple
    iterations: int
    converged: bool


def icp_register(source, target, init: RigidTransform | None = None,
                 max_iter: int = 50, tol: float = 1e-10) -> ICPResult:
    """Align the source cloud onto the target cloud.

    init=None uses the principal-axes coarse alignment.  Terminates when the
    per-iteration RMSE improvement drops below tol (converged) or after
    max_iter iterations (reported via the converged flag, not an error).
    """
    src = _check_cloud(source, "source")
    tgt = _check_cloud(target, "target")
    tree = cKDTree(tgt)
    t = init if init is not None else principal_axes_init(src, tgt)

    history: list[float] = []
    prev = np.inf
    converged = False
    for _ in range(max_iter):
        _, idx = tree.query(t.apply(src))
        t = kabsch(src, tgt[idx])
        d, _ = tree.query(t.apply(src))
        rmse = float(np.sqrt(np.mean(d * d)))
        history.append(rmse)
        if prev - rmse < tol:
            converged = True
            break
        prev = rmse
    return ICPResult(t, history[-1], tuple(history), len(history), converged)
