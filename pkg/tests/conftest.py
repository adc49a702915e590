"""Shared oracle helpers for the test suite."""

import numpy as np
import pytest

from swarmtopo import geometry


def straight_boundary_samples(region, step=0.5, margin=1.0):
    """Points along straight boundary stretches, `margin` away from corners;
    circles contribute their whole circumference."""
    pts = []
    for curve in region.curves:
        if isinstance(curve, geometry.Circle):
            (cx, cy), r = curve.center, curve.radius
            m = max(8, int(2 * np.pi * r / step))
            for a in np.linspace(0, 2 * np.pi, m, endpoint=False):
                pts.append((cx + r * np.cos(a), cy + r * np.sin(a)))
            continue
        v = curve.vertices
        for k in range(len(v)):
            a, b = v[k], v[(k + 1) % len(v)]
            length = float(np.hypot(*(b - a)))
            if length <= 2 * margin:
                continue
            m = int((length - 2 * margin) / step) + 1
            for t in np.linspace(margin / length, 1 - margin / length, m):
                pts.append(tuple(a + t * (b - a)))
    return np.asarray(pts)


@pytest.fixture(scope="session")
def standard_region():
    from swarmtopo.cli import standard_region as build
    return build()
