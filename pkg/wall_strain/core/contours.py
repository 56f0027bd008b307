"""
Contour kinematics: reference point, anti-clockwise ordering, arc-length
resampling and the boundary displacement field between two frames.

Contours are stored as float arrays of shape (n, 2). All functions are pure.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal, Tuple

import numpy as np
from shapely import contains_xy
from shapely.geometry import LinearRing, Polygon
from shapely.validation import make_valid

from ..errors import (
    ContourError,
    CountMismatch,
    CountTooSmall,
    DegenerateAngle,
    EmptyContour,
    NonNestedContours,
    RefOutsideContour,
    SelfIntersectingContour,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
DUPLICATE_TOLERANCE = 1e-9


def signed_area(points: np.ndarray) -> float:
    """Shoelace area; positive for counter-clockwise traversal."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def perimeter(points: np.ndarray) -> float:
    return float(np.linalg.norm(np.roll(points, -1, axis=0) - points, axis=1).sum())


def _shape(polygon: np.ndarray):
    poly = Polygon(polygon)
    if not poly.is_valid:
        poly = make_valid(poly)
    return poly


def points_in_polygon(queries: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Strict containment of many query points in one closed polygon; boundary points are outside."""
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    return np.asarray(contains_xy(_shape(polygon), queries[:, 0], queries[:, 1]), dtype=bool)


def is_simple_ring(points: np.ndarray) -> bool:
    """True when the closed polyline through `points` has no self-intersection or self-touch."""
    return bool(LinearRing(points).is_simple)


@dataclass(frozen=True)
class Contour:
    """Closed boundary, counter-clockwise once built through `from_points`."""

    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float).reshape(-1, 2))

    @classmethod
    def from_points(cls, points, validate: bool = True) -> "Contour":
        """
        Builds a contour from raw coordinates: merges duplicate consecutive
        points, rejects < 3 points and self-intersections, and reverses
        clockwise input.
        """
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ContourError("contour coordinates must be finite")
        pts = _merge_duplicates(pts)
        if len(pts) < 3:
            raise EmptyContour(f"contour needs at least 3 distinct points, got {len(pts)}")
        if validate and not is_simple_ring(pts):
            raise SelfIntersectingContour("contour edges intersect")
        if signed_area(pts) < 0:
            logger.debug("Reversing clockwise contour.")
            pts = pts[::-1].copy()
        return cls(pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def area(self) -> float:
        return signed_area(self.points)

    @property
    def perimeter(self) -> float:
        return perimeter(self.points)

    def translated(self, offset) -> "Contour":
        return Contour(self.points + np.asarray(offset, dtype=float))


def _merge_duplicates(points: np.ndarray) -> np.ndarray:
    if len(points) < 2:
        return points
    diagonal = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
    tol = DUPLICATE_TOLERANCE * diagonal
    gaps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    keep = np.concatenate([[True], gaps >= tol])
    merged = points[keep]
    while len(merged) > 1 and np.linalg.norm(merged[-1] - merged[0]) < tol:
        merged = merged[:-1]
    if len(merged) != len(points):
        logger.warning(f"Merged {len(points) - len(merged)} duplicate contour point(s).")
    return merged


@dataclass(frozen=True)
class ContourFrame:
    t: int
    inner: Contour
    outer: Contour

    def check_nesting(self) -> None:
        inside = points_in_polygon(self.inner.points, self.outer.points)
        if not np.all(inside):
            bad = int(np.argmin(inside))
            raise NonNestedContours(
                f"inner point {bad} of frame t={self.t} is not inside the outer contour"
            )

    def translated(self, offset) -> "ContourFrame":
        return ContourFrame(self.t, self.inner.translated(offset), self.outer.translated(offset))


@dataclass(frozen=True)
class ReferencePoint:
    origin: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(2))

    @property
    def x(self) -> float:
        return float(self.origin[0])

    @property
    def y(self) -> float:
        return float(self.origin[1])


@dataclass(frozen=True)
class BoundaryDisplacementField:
    inner_disp: np.ndarray
    outer_disp: np.ndarray
    source_frames: Tuple[int, int]
    reference: ReferencePoint = field(default=None)


def _as_points(contour) -> np.ndarray:
    if isinstance(contour, Contour):
        return contour.points
    return np.asarray(contour, dtype=float).reshape(-1, 2)


def centroid(contour) -> ReferencePoint:
    """Arithmetic mean of the contour points."""
    pts = _as_points(contour)
    if len(pts) < 3:
        raise EmptyContour(f"centroid needs at least 3 points, got {len(pts)}")
    return ReferencePoint(pts.mean(axis=0))


def polar_angles(points: np.ndarray, ref: ReferencePoint) -> Tuple[np.ndarray, np.ndarray]:
    """Angles in [0, 2π) and radii of points about the reference point."""
    rel = points - ref.origin
    theta = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), TWO_PI)
    theta[theta >= TWO_PI] = 0.0
    return theta, np.hypot(rel[:, 0], rel[:, 1])


def angles_deg(points: np.ndarray, ref: ReferencePoint) -> np.ndarray:
    """Polar angles of points about `ref` in degrees, normalized to [0, 360)."""
    theta, _ = polar_angles(np.atleast_2d(points), ref)
    deg = np.degrees(theta)
    deg[deg >= 360.0] = 0.0
    return deg


Correspondence = Literal["arc_length", "material"]


def ordering_permutation(contour, ref: ReferencePoint) -> np.ndarray:
    """
    Indices that number the points anti-clockwise about `ref`, starting from
    the smallest polar angle; equal angles are ordered by radius.

    Every angular gap about `ref` must stay below π. When the stored point
    order is a simple polygon, `ref` must also lie strictly inside it; any
    other storage order is treated as an unordered sample of the boundary.
    """
    pts = _as_points(contour)
    theta, radius = polar_angles(pts, ref)

    scale = max(float(radius.max()), 1.0)
    if np.any(radius <= 1e-12 * scale):
        raise DegenerateAngle("a contour point coincides with the reference point")

    order = np.lexsort((radius, theta))
    theta_sorted = theta[order]
    radius_sorted = radius[order]
    same = (np.diff(theta_sorted) == 0) & (np.diff(radius_sorted) == 0)
    if np.any(same):
        raise DegenerateAngle("two contour points share the same angle and radius")

    gaps = np.diff(np.concatenate([theta_sorted, [theta_sorted[0] + TWO_PI]]))
    outside = gaps.max() >= np.pi
    if not outside and is_simple_ring(pts):
        outside = not points_in_polygon(ref.origin, pts)[0]
    if outside:
        raise RefOutsideContour(
            f"reference point ({ref.x:.6g}, {ref.y:.6g}) is not strictly inside the contour"
        )
    return order


def order_contour(contour: Contour, ref: ReferencePoint) -> Contour:
    pts = _as_points(contour)
    return Contour(pts[ordering_permutation(pts, ref)])


def arc_length_positions(contour, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Segment index and fraction along that segment of `count` points at equal
    arc-length steps around the closed contour, starting at index 0.
    """
    if count < 3:
        raise CountTooSmall(f"resample count must be >= 3, got {count}")
    pts = _as_points(contour)
    closed = np.vstack([pts, pts[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.arange(count) * (arc[-1] / count)
    segment = np.clip(np.searchsorted(arc, targets, side="right") - 1, 0, len(pts) - 1)
    length = np.where(seg[segment] > 0, seg[segment], 1.0)
    fraction = np.clip((targets - arc[segment]) / length, 0.0, 1.0)
    return segment, fraction


def sample_at(contour, segment: np.ndarray, fraction: np.ndarray) -> Contour:
    """Points at the given (segment, fraction) positions of the closed contour."""
    pts = _as_points(contour)
    start = pts[segment]
    end = pts[(segment + 1) % len(pts)]
    return Contour(start + fraction[:, None] * (end - start))


def resample_contour(contour: Contour, count: int) -> Contour:
    """Places `count` points at equal arc-length steps, starting at index 0."""
    return sample_at(contour, *arc_length_positions(contour, count))


def align_frame(frame: ContourFrame, ref: ReferencePoint, count: int) -> ContourFrame:
    """Orders both contours of a frame about `ref` and resamples them to `count` points."""
    inner = resample_contour(order_contour(frame.inner, ref), count)
    outer = resample_contour(order_contour(frame.outer, ref), count)
    return ContourFrame(frame.t, inner, outer)


def _follow(c0: Contour, c1: Contour, ref: ReferencePoint, count: int, name: str) -> Tuple[Contour, Contour]:
    if len(c0) != len(c1):
        raise CountMismatch(
            f"material correspondence needs index-matched {name} contours: {len(c0)} vs {len(c1)} points"
        )
    order = ordering_permutation(c0, ref)
    ordering_permutation(c1, ref)  # same reference must lie inside the later contour too
    first, second = Contour(c0.points[order]), Contour(c1.points[order])
    segment, fraction = arc_length_positions(first, count)
    return sample_at(first, segment, fraction), sample_at(second, segment, fraction)


def align_pair(frame0: ContourFrame, frame1: ContourFrame, ref: ReferencePoint, count: int,
               correspondence: Correspondence = "arc_length") -> Tuple[ContourFrame, ContourFrame]:
    """
    Brings two frames to `count` index-matched points per contour.

    "arc_length" orders and resamples each frame on its own. "material" takes
    the raw points of both frames as the same material points: frame1 is
    numbered with frame0's permutation and sampled at frame0's arc-length
    positions, so the boundary motion stays linear in the point displacements.
    """
    if correspondence == "arc_length":
        return align_frame(frame0, ref, count), align_frame(frame1, ref, count)
    if correspondence != "material":
        raise ContourError(f"unknown correspondence '{correspondence}'")
    inner0, inner1 = _follow(frame0.inner, frame1.inner, ref, count, "inner")
    outer0, outer1 = _follow(frame0.outer, frame1.outer, ref, count, "outer")
    return ContourFrame(frame0.t, inner0, outer0), ContourFrame(frame1.t, inner1, outer1)


def compute_boundary_displacements(
        frame0: ContourFrame, frame1: ContourFrame, ref: ReferencePoint
) -> BoundaryDisplacementField:
    """U = X(t1) - X(t0) for every index-matched inner and outer point."""
    if len(frame0.inner) != len(frame1.inner):
        raise CountMismatch(
            f"inner contours differ in point count: {len(frame0.inner)} vs {len(frame1.inner)}"
        )
    if len(frame0.outer) != len(frame1.outer):
        raise CountMismatch(
            f"outer contours differ in point count: {len(frame0.outer)} vs {len(frame1.outer)}"
        )
    return BoundaryDisplacementField(
        inner_disp=frame1.inner.points - frame0.inner.points,
        outer_disp=frame1.outer.points - frame0.outer.points,
        source_frames=(frame0.t, frame1.t),
        reference=ref,
    )
