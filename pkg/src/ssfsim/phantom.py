"""Voxel L3 vertebra phantom.

The phantom is a parametric box of sawbone-insert density wrapped in a
cortical shell, with a void alignment channel running through the pedicle
region along the entry axis.  The world frame is anchored at the channel
entry: the channel axis is +x and the entry point is the origin, so a plan
with an identity entry pose is pre-aligned with any default phantom.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import VoxelTooCoarse
from .geometry import RigidTransform

VOID, SHELL, INSERT = 0, 1, 2


@dataclass(frozen=True)
class PhantomSpec:
    """Phantom construction parameters (mm; insert density in PCF)."""

    voxel_mm: float = 0.2
    body_extent_mm: tuple = (56.0, 40.0, 30.0)
    shell_thickness_mm: float = 2.0
    channel_d_mm: float = 8.0
    insert_pcf: float = 10.0
    pedicle_len_mm: float = 17.0
    body_depth_mm: float = 33.4

    def __post_init__(self):
        ext = tuple(float(v) for v in self.body_extent_mm)
        if len(ext) != 3 or any(v <= 0 for v in ext):
            raise ValueError("body_extent_mm must be 3 positive lengths")
        for name in ("voxel_mm", "shell_thickness_mm", "channel_d_mm", "insert_pcf",
                     "pedicle_len_mm", "body_depth_mm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.voxel_mm > self.channel_d_mm / 10.0:
            raise VoxelTooCoarse(
                f"voxel pitch {self.voxel_mm} mm exceeds channel_d/10 = {self.channel_d_mm / 10.0} mm")
        object.__setattr__(self, "body_extent_mm", ext)

    def to_dict(self) -> dict:
        return {"voxel_mm": self.voxel_mm, "body_extent_mm": list(self.body_extent_mm),
                "shell_thickness_mm": self.shell_thickness_mm, "channel_d_mm": self.channel_d_mm,
                "insert_pcf": self.insert_pcf, "pedicle_len_mm": self.pedicle_len_mm,
                "body_depth_mm": self.body_depth_mm}

    @staticmethod
    def from_dict(d: dict) -> "PhantomSpec":
        d = dict(d)
        if "body_extent_mm" in d:
            d["body_extent_mm"] = tuple(d["body_extent_mm"])
        return PhantomSpec(**d)


def save_phantom_spec(path, spec: PhantomSpec) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(spec.to_dict(), f, indent=2)
        f.write("\n")


def load_phantom_spec(path) -> PhantomSpec:
    with open(path, encoding="utf-8") as f:
        return PhantomSpec.from_dict(json.load(f))


class VoxelPhantom:
    """Density grid plus a monotone removed mask.

    Voxel (i, j, k) is centered at origin + (i+0.5, j+0.5, k+0.5) * voxel_mm.
    """

    def __init__(self, spec: PhantomSpec, density: np.ndarray, origin: np.ndarray):
        self.spec = spec
        self.voxel_mm = spec.voxel_mm
        self.density = density
        self.removed = np.zeros(density.shape, dtype=bool)
        self.origin = np.asarray(origin, dtype=float)

    @property
    def dims(self) -> tuple:
        return self.density.shape

    @property
    def removed_count(self) -> int:
        return int(np.count_nonzero(self.removed))

    @property
    def removed_volume_mm3(self) -> float:
        return self.removed_count * self.voxel_mm ** 3

    def entry_pose(self) -> RigidTransform:
        """Pose of the channel entry: origin of the world frame, +x axis."""
        return RigidTransform.identity()

    def bounds(self) -> tuple:
        lo = self.origin
        hi = self.origin + np.asarray(self.dims) * self.voxel_mm
        return lo, hi

    def contains(self, points: np.ndarray, margin_mm: float = 0.0) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        lo, hi = self.bounds()
        return np.all((p >= lo - margin_mm) & (p <= hi + margin_mm), axis=1)

    def carve_sphere(self, center_mm, radius_mm: float) -> int:
        """Mark non-void voxels inside the sphere as removed; returns the
        number of newly removed voxels.  Removal is monotone."""
        c = (np.asarray(center_mm, dtype=float) - self.origin) / self.voxel_mm
        r = radius_mm / self.voxel_mm
        lo = np.maximum(np.floor(c - r).astype(int), 0)
        hi = np.minimum(np.ceil(c + r).astype(int) + 1, self.dims)
        if np.any(lo >= hi):
            return 0
        ii = np.arange(lo[0], hi[0])[:, None, None] + 0.5 - c[0]
        jj = np.arange(lo[1], hi[1])[None, :, None] + 0.5 - c[1]
        kk = np.arange(lo[2], hi[2])[None, None, :] + 0.5 - c[2]
        inside = ii * ii + jj * jj + kk * kk <= r * r
        sub = (slice(lo[0], hi[0]), slice(lo[1], hi[1]), slice(lo[2], hi[2]))
        new = inside & (self.density[sub] != VOID) & ~self.removed[sub]
        self.removed[sub] |= new
        return int(np.count_nonzero(new))

    def surface_cloud(self, spacing_mm: float = 2.0) -> np.ndarray:
        """Point cloud on the outer box faces plus the channel wall (world mm)."""
        lo, hi = self.bounds()
        ext = hi - lo
        pts = []
        axes = ((0, 1, 2), (1, 0, 2), (2, 0, 1))
        for ax, u, v in axes:
            nu = max(2, int(round(ext[u] / spacing_mm)) + 1)
            nv = max(2, int(round(ext[v] / spacing_mm)) + 1)
            gu, gv = np.meshgrid(np.linspace(lo[u], hi[u], nu), np.linspace(lo[v], hi[v], nv))
            for val in (lo[ax], hi[ax]):
                face = np.empty((gu.size, 3))
                face[:, ax] = val
                face[:, u] = gu.ravel()
                face[:, v] = gv.ravel()
                pts.append(face)
        # channel wall: cylinder of channel_d about +x from the entry face
        r = self.spec.channel_d_mm / 2.0
        length = self.spec.pedicle_len_mm
        nx = max(2, int(round(length / spacing_mm)) + 1)
        nphi = max(8, int(round(2 * math.pi * r / spacing_mm)))
        xs = np.linspace(0.0, length, nx)
        phis = np.linspace(0.0, 2 * math.pi, nphi, endpoint=False)
        gx, gp = np.meshgrid(xs, phis)
        wall = np.stack([gx.ravel(), r * np.cos(gp).ravel(), r * np.sin(gp).ravel()], axis=1)
        pts.append(wall)
        return np.vstack(pts)


def build_phantom(spec: PhantomSpec) -> VoxelPhantom:
    """Construct the voxel phantom from its spec."""
    ext = np.asarray(spec.body_extent_mm, dtype=float)
    dims = np.maximum(np.round(ext / spec.voxel_mm).astype(int), 1)
    origin = np.array([0.0, -ext[1] / 2.0, -ext[2] / 2.0])

    # voxel centers along each axis, world frame
    cx = origin[0] + (np.arange(dims[0]) + 0.5) * spec.voxel_mm
    cy = origin[1] + (np.arange(dims[1]) + 0.5) * spec.voxel_mm
    cz = origin[2] + (np.arange(dims[2]) + 0.5) * spec.voxel_mm

    density = np.full(tuple(dims), INSERT, dtype=np.uint8)
    t = spec.shell_thickness_mm
    lo, hi = origin, origin + dims * spec.voxel_mm
    shell_x = (cx < lo[0] + t) | (cx > hi[0] - t)
    shell_y = (cy < lo[1] + t) | (cy > hi[1] - t)
    shell_z = (cz < lo[2] + t) | (cz > hi[2] - t)
    shell = shell_x[:, None, None] | shell_y[None, :, None] | shell_z[None, None, :]
    density[shell] = SHELL

    in_pedicle = cx <= spec.pedicle_len_mm
    rr = cy[:, None] ** 2 + cz[None, :] ** 2
    in_channel = rr <= (spec.channel_d_mm / 2.0) ** 2
    channel = in_pedicle[:, None, None] & in_channel[None, :, :]
    density[channel] = VOID

    return VoxelPhantom(spec, density, origin)
