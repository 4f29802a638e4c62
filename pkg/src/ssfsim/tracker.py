"""Synthetic 5-DoF tracker logs (position + pointing direction, no roll).

Noise convention: noise_sigma_mm is the RMS magnitude of the isotropic 3D
position offset, i.e. each coordinate is N(0, (sigma/sqrt(3))^2) so that
E[|offset|^2] = sigma^2.  Directions are the local tangent perturbed by a
small seeded Gaussian; logs are bitwise reproducible for a fixed seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyCenterline
from .trajectory import Polyline3

CSV_HEADER = "t_s,x_mm,y_mm,z_mm,dx,dy,dz"


@dataclass(frozen=True)
class TrackerLog:
    """Timestamped tip samples: positions (mm) and unit pointing directions."""

    t_s: np.ndarray
    positions: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_s, dtype=float).reshape(-1)
        p = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        d = np.asarray(self.directions, dtype=float).reshape(-1, 3)
        if not (len(t) == len(p) == len(d)):
            raise ValueError("mismatched sample counts")
        if len(t) and np.any(np.diff(t) <= 0):
            raise ValueError("timestamps must strictly increase")
        if len(d) and np.max(np.abs(np.linalg.norm(d, axis=1) - 1.0)) > 1e-9:
            raise ValueError("directions must be unit vectors")
        object.__setattr__(self, "t_s", t)
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "directions", d)

    def __len__(self) -> int:
        return len(self.t_s)


def synthesize_tracker_log(centerline: Polyline3, sample_hz: float = 40.0,
                           noise_sigma_mm: float = 0.2, seed: int = 0,
                           insertion_speed_mm_s: float = 2.0,
                           direction_sigma_rad: float | None = None) -> TrackerLog:
    """Simulate a screw-tip tracker recording along a centerline.

    The tip advances at the insertion speed; samples are taken at t = k/hz
    until the tip reaches the end of the path.  Positions get isotropic
    Gaussian noise (see module docstring); directions are tangents perturbed
    by direction_sigma_rad per axis (defaults to 0.05 rad per mm of position
    noise, so a zero-noise log is exactly on the centerline).
    """
    if len(centerline.points) < 2:
        raise EmptyCenterline("centerline must have at least 2 points")
    if sample_hz <= 0:
        raise ValueError("sample_hz must be positive")
    if direction_sigma_rad is None:
        direction_sigma_rad = 0.05 * noise_sigma_mm
    if noise_sigma_mm < 0 or direction_sigma_rad < 0:
        raise ValueError("noise magnitudes must be non-negative")
    total = centerline.length_mm
    duration = total / insertion_speed_mm_s
    n = int(math.floor(duration * sample_hz + 1e-9))
    t = np.arange(n + 1, dtype=float) / sample_hz
    s = np.minimum(t * insertion_speed_mm_s, total)
    pos = centerline.point_at(s)
    tan = centerline.tangent_at(s)
    if noise_sigma_mm > 0 or direction_sigma_rad > 0:
        rng = np.random.default_rng(seed)
        pos = pos + rng.normal(0.0, noise_sigma_mm / math.sqrt(3.0), size=pos.shape)
        tan = tan + rng.normal(0.0, direction_sigma_rad, size=tan.shape)
    tan = tan / np.linalg.norm(tan, axis=1, keepdims=True)
    return TrackerLog(t, pos, tan)


def write_tracker_csv(path, log: TrackerLog) -> None:
    data = np.hstack([log.t_s[:, None], log.positions, log.directions])
    np.savetxt(path, data, fmt="%.9f", delimiter=",", header=CSV_HEADER, comments="")


def read_tracker_csv(path) -> TrackerLog:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return TrackerLog(data[:, 0], data[:, 1:4], data[:, 4:7])


def write_cloud_csv(path, points: np.ndarray) -> None:
    np.savetxt(path, np.asarray(points, dtype=float), fmt="%.9f", delimiter=",",
               header="x_mm,y_mm,z_mm", comments="")


def read_cloud_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
