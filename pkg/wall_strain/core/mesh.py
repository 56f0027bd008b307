"""
Structured triangle mesh of the wall between index-matched inner and outer
contours, material region tagging and element quality statistics.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import List, Optional

import numpy as np

from ..errors import CountMismatch, InvertedElement, MeshError, NonNestedContours
from .contours import Contour, ReferencePoint, angles_deg, points_in_polygon

logger = logging.getLogger(__name__)


class BoundaryKind(IntEnum):
    INTERIOR = 0
    INNER = 1
    OUTER = 2

    @property
    def label(self) -> str:
        return {0: "interior", 1: "inner_boundary", 2: "outer_boundary"}[int(self)]


@dataclass(frozen=True)
class Mesh:
    """
    Node positions (n, 2), counter-clockwise triangles (m, 3), per-node
    boundary kind and per-element material id. Annular meshes number node
    (i, k) of ring k as k * points_per_ring + i.
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary: np.ndarray
    material_ids: np.ndarray
    points_per_ring: int = 0
    layers: int = 0

    @classmethod
    def from_triangles(cls, nodes, elements, material_ids=None) -> "Mesh":
        nodes = np.asarray(nodes, dtype=float).reshape(-1, 2)
        elements = np.asarray(elements, dtype=np.int64).reshape(-1, 3)
        if material_ids is None:
            material_ids = np.zeros(len(elements), dtype=np.int64)
        boundary = np.full(len(nodes), BoundaryKind.INTERIOR, dtype=np.int8)
        return cls(nodes, elements, boundary, np.asarray(material_ids, dtype=np.int64))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def element_coordinates(self) -> np.ndarray:
        return self.nodes[self.elements]

    @property
    def element_areas(self) -> np.ndarray:
        """Signed areas; positive for counter-clockwise elements."""
        c = self.element_coordinates
        return 0.5 * (
                (c[:, 1, 0] - c[:, 0, 0]) * (c[:, 2, 1] - c[:, 0, 1])
                - (c[:, 2, 0] - c[:, 0, 0]) * (c[:, 1, 1] - c[:, 0, 1])
        )

    @property
    def element_centroids(self) -> np.ndarray:
        return self.element_coordinates.mean(axis=1)

    @property
    def bounding_box_area(self) -> float:
        span = self.nodes.max(axis=0) - self.nodes.min(axis=0)
        return float(span[0] * span[1])

    def ring_node_ids(self, k: int) -> np.ndarray:
        if not self.points_per_ring:
            raise MeshError("mesh has no ring structure")
        return k * self.points_per_ring + np.arange(self.points_per_ring)

    def edges(self) -> np.ndarray:
        """All element edges as sorted node pairs, three per element, element order."""
        e = self.elements
        pairs = np.stack([e[:, [0, 1]], e[:, [1, 2]], e[:, [2, 0]]], axis=1).reshape(-1, 2)
        return np.sort(pairs, axis=1)

    def edge_use_counts(self):
        unique, inverse, counts = np.unique(self.edges(), axis=0, return_inverse=True, return_counts=True)
        return unique, inverse.reshape(-1), counts

    def boundary_edges(self) -> np.ndarray:
        """Edges used by exactly one element, as sorted node pairs."""
        unique, _, counts = self.edge_use_counts()
        return unique[counts == 1]

    def edge_owner(self, n0: int, n1: int) -> Optional[int]:
        """Index of the first element that has (n0, n1) as an edge, or None."""
        key = np.sort([n0, n1])
        hits = np.flatnonzero(np.all(self.edges() == key, axis=1))
        return int(hits[0] // 3) if len(hits) else None


@dataclass(frozen=True)
class SectorRegion:
    start_deg: float
    span_deg: float
    material_id: int


@dataclass(frozen=True)
class RegionSpec:
    sectors: List[SectorRegion] = field(default_factory=list)

    def __post_init__(self):
        for s in self.sectors:
            if not 0.0 < s.span_deg <= 360.0:
                raise MeshError(f"sector span must be in (0, 360], got {s.span_deg}")
            if s.material_id < 0:
                raise MeshError(f"material id must be >= 0, got {s.material_id}")


@dataclass(frozen=True)
class MeshQuality:
    n_nodes: int
    n_elements: int
    min_area: float
    max_area: float
    total_area: float
    min_angle_deg: float
    max_angle_deg: float
    max_aspect_ratio: float


def build_annular_mesh(inner: Contour, outer: Contour, layers: int) -> Mesh:
    """
    Nodes p(i, k) = inner[i] + (k / L) (outer[i] - inner[i]); every quad
    (i, k)-(i+1, k)-(i+1, k+1)-(i, k+1) is split along its (i, k)-(i+1, k+1)
    diagonal.
    """
    if layers < 1:
        raise MeshError(f"layers must be >= 1, got {layers}")
    if len(inner) != len(outer):
        raise CountMismatch(f"inner has {len(inner)} points, outer has {len(outer)}")
    m = len(inner)
    if m < 3:
        raise CountMismatch(f"contours need at least 3 points, got {m}")
    if not np.all(points_in_polygon(inner.points, outer.points)):
        raise NonNestedContours("inner contour is not strictly inside the outer contour")

    fractions = np.arange(layers + 1) / layers
    spokes = outer.points - inner.points
    nodes = (inner.points[None, :, :] + fractions[:, None, None] * spokes[None, :, :]).reshape(-1, 2)

    boundary = np.full(m * (layers + 1), BoundaryKind.INTERIOR, dtype=np.int8)
    boundary[:m] = BoundaryKind.INNER
    boundary[layers * m:] = BoundaryKind.OUTER

    i = np.arange(m)
    i_next = (i + 1) % m
    triangles = []
    for k in range(layers):
        a = k * m + i
        b = k * m + i_next
        c = (k + 1) * m + i_next
        d = (k + 1) * m + i
        triangles.append(np.stack([np.column_stack([a, c, b]), np.column_stack([a, d, c])], axis=1))
    elements = np.concatenate(triangles).reshape(-1, 3)

    mesh = Mesh(
        nodes=nodes,
        elements=elements,
        boundary=boundary,
        material_ids=np.zeros(len(elements), dtype=np.int64),
        points_per_ring=m,
        layers=layers,
    )
    areas = mesh.element_areas
    threshold = 1e-12 * mesh.bounding_box_area
    if np.any(areas <= threshold):
        bad = int(np.argmin(areas))
        raise InvertedElement(f"element {bad} has non-positive area {areas[bad]:.3e}; radial lines cross")

    logger.debug(f"Built annular mesh: {mesh.n_nodes} nodes, {mesh.n_elements} elements.")
    return mesh


def element_angles_deg(mesh: Mesh, ref: ReferencePoint) -> np.ndarray:
    return angles_deg(mesh.element_centroids, ref)


def tag_regions(mesh: Mesh, spec: RegionSpec, ref: ReferencePoint) -> Mesh:
    """Material of the first sector [start, start + span) holding the element centroid, else 0."""
    angles = element_angles_deg(mesh, ref)
    material = np.zeros(mesh.n_elements, dtype=np.int64)
    assigned = np.zeros(mesh.n_elements, dtype=bool)
    for sector in spec.sectors:
        offset = np.mod(angles - np.mod(sector.start_deg, 360.0), 360.0)
        hit = (offset < sector.span_deg) & ~assigned
        material[hit] = sector.material_id
        assigned |= hit
    return replace(mesh, material_ids=material)


def mesh_quality_report(mesh: Mesh) -> MeshQuality:
    c = mesh.element_coordinates
    areas = mesh.element_areas

    # vec[:, j] runs from vertex j to vertex j+1
    vec = np.roll(c, -1, axis=1) - c
    lengths = np.linalg.norm(vec, axis=2)
    u = -np.roll(vec, 1, axis=1)
    cosines = np.einsum("ejk,ejk->ej", u, vec) / (np.roll(lengths, 1, axis=1) * lengths)
    angles = np.degrees(np.arccos(np.clip(cosines, -1.0, 1.0)))

    inradius = 2.0 * np.abs(areas) / lengths.sum(axis=1)
    aspect = lengths.max(axis=1) / (2.0 * np.sqrt(3.0) * inradius)

    return MeshQuality(
        n_nodes=mesh.n_nodes,
        n_elements=mesh.n_elements,
        min_area=float(areas.min()),
        max_area=float(areas.max()),
        total_area=float(areas.sum()),
        min_angle_deg=float(angles.min()),
        max_angle_deg=float(angles.max()),
        max_aspect_ratio=float(aspect.max()),
    )
