import numpy as np
import pytest

from wall_strain.config.models import MaterialConfig, PipelineConfig, RingSpec
from wall_strain.core.contours import Contour, ContourFrame
from wall_strain.core.pipeline import ContourDocument

PHASE = 0.1  # keeps point 0 clear of the 0 degree ordering seam


def ellipse_points(rx, ry, n=32, center=(0.0, 0.0), phase=PHASE):
    phi = phase + 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + rx * np.cos(phi), center[1] + ry * np.sin(phi)])


def ring_frame(t, inner_r, outer_r, n=32, center=(0.0, 0.0), aspect=1.0):
    return ContourFrame(
        t,
        Contour(ellipse_points(inner_r * aspect, inner_r, n, center)),
        Contour(ellipse_points(outer_r * aspect, outer_r, n, center)),
    )


def scaled_frame(frame: ContourFrame, t: int, factor: float, about) -> ContourFrame:
    about = np.asarray(about, dtype=float)
    return ContourFrame(
        t,
        Contour(about + factor * (frame.inner.points - about)),
        Contour(about + factor * (frame.outer.points - about)),
    )


def rotated_frame(frame: ContourFrame, t: int, angle: float, about) -> ContourFrame:
    about = np.asarray(about, dtype=float)
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    return ContourFrame(
        t,
        Contour(about + (frame.inner.points - about) @ rot.T),
        Contour(about + (frame.outer.points - about) @ rot.T),
    )


@pytest.fixture
def base_frame():
    return ring_frame(0, 20.0, 30.0, n=32, aspect=1.1)


@pytest.fixture
def pipeline_config(tmp_path):
    cfg = PipelineConfig()
    cfg.output.dir = str(tmp_path / "out")
    cfg.output.reports_dir = str(tmp_path / "reports")
    return cfg


@pytest.fixture
def synthetic_cycle():
    """20 frames of a contracting then relaxing elliptical wall."""
    frames = []
    for t in range(20):
        squeeze = np.sin(np.pi * t / 19.0)
        frames.append(ring_frame(t, 20.0 * (1.0 - 0.12 * squeeze), 30.0 * (1.0 - 0.05 * squeeze), aspect=1.1))
    return ContourDocument(subject="synthetic", slice=1, frames=frames)


@pytest.fixture
def homogeneous_ring():
    return RingSpec(abnormal_span=0.0)


@pytest.fixture
def unit_ring():
    return RingSpec(
        normal=MaterialConfig(young_modulus=1.0, poisson_ratio=0.0),
        abnormal=MaterialConfig(young_modulus=1.0, poisson_ratio=0.0),
        abnormal_span=0.0,
    )


@pytest.fixture
def two_material_ring():
    return RingSpec()
