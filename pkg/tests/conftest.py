import math

import numpy as np
import pytest

from pupilarc import kernels
from pupilarc.geometry import EllipseParams
from pupilarc.synth import SceneSpec

BACKENDS = sorted(kernels.available_backends())


@pytest.fixture(params=BACKENDS)
def backend(request):
    return kernels.available_backends()[request.param]


def eye(cx=400.0, cy=300.0, a=60.0, b=50.0, theta=0.4, width=800, height=600, **kw):
    """A plain synthetic eye with a pupil and a large iris; no noise unless asked."""
    kw.setdefault("lid", False)
    pupil = EllipseParams.make(cx, cy, a, b, theta)
    return SceneSpec(pupil=pupil, iris_center=(cx, cy), iris_radius=kw.pop("iris_radius", 220.0),
                     width=width, height=height, **kw)


def disk_image(cx, cy, r, width, height, inside=20, outside=200):
    ys, xs = np.mgrid[0:height, 0:width]
    img = np.full((height, width), outside, dtype=np.uint8)
    img[(xs - cx) ** 2 + (ys - cy) ** 2 <= r * r] = inside
    return img


def ellipse_points(a, b, theta, cx, cy, n):
    t = np.linspace(0, 2 * math.pi, n, endpoint=False)
    c, s = math.cos(theta), math.sin(theta)
    x, y = a * np.cos(t), b * np.sin(t)
    return np.column_stack([cx + c * x - s * y, cy + s * x + c * y])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
