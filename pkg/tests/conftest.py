import numpy as np
import pytest

from ssfsim import PhantomSpec, build_phantom, make_plan


@pytest.fixture(scope="session")
def default_phantom():
    return build_phantom(PhantomSpec())


@pytest.fixture(scope="session")
def model_cloud(default_phantom):
    return default_phantom.surface_cloud()


@pytest.fixture()
def j050():
    return make_plan("J", 50.0, 0.0, 17.0, 35.0)


def dist_to_polyline(points, poly):
    """Min distance from each query point to a Polyline3 (segment-accurate)."""
    a, b = poly.points[:-1], poly.points[1:]
    ab = b - a
    denom = np.maximum((ab * ab).sum(axis=1), 1e-30)
    out = np.empty(len(points))
    for i, p in enumerate(np.atleast_2d(points)):
        t = np.clip(((p - a) * ab).sum(axis=1) / denom, 0.0, 1.0)
        proj = a + t[:, None] * ab
        out[i] = np.sqrt(((p - proj) ** 2).sum(axis=1).min())
    return out
