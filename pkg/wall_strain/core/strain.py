"""
Small-strain components on linear triangles, radial displacement about the
reference point and angular sector aggregation.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd

from ..errors import DegenerateElement, NodeAtReference, StrainError
from .contours import ReferencePoint, angles_deg
from .fem import DisplacementSolution, element_dofs, strain_displacement
from .mesh import Mesh

logger = logging.getLogger(__name__)

STRAIN_COMPONENTS = ("eps_x", "eps_y", "gamma_xy")


@dataclass(frozen=True)
class StrainField:
    """Per-element (eps_x, eps_y, gamma_xy), shape (m, 3), with element areas and centroids."""

    values: np.ndarray
    areas: np.ndarray
    centroids: np.ndarray

    @property
    def eps_x(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def eps_y(self) -> np.ndarray:
        return self.values[:, 1]

    @property
    def gamma_xy(self) -> np.ndarray:
        return self.values[:, 2]


@dataclass(frozen=True)
class SectorReport:
    """
    Per-sector means, shape (n_sectors, k). Sector s (1-based) covers
    [(s - 1) w, s w) degrees with w = 360 / n_sectors; empty sectors hold NaN.
    """

    n_sectors: int
    means: np.ndarray
    counts: np.ndarray
    weights: np.ndarray
    columns: tuple = STRAIN_COMPONENTS

    @property
    def width_deg(self) -> float:
        return 360.0 / self.n_sectors

    @property
    def empty_sectors(self) -> List[int]:
        return [int(s) + 1 for s in np.flatnonzero(self.counts == 0)]

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.means, columns=[f"mean_{c}" for c in self.columns])
        df.insert(0, "sector", np.arange(1, self.n_sectors + 1))
        return df


def element_strain(tri, nodes: np.ndarray, sol: DisplacementSolution) -> np.ndarray:
    """(eps_x, eps_y, gamma_xy) = B [u; v] for one triangle."""
    tri = np.asarray(tri, dtype=np.int64).reshape(1, 3)
    B, area = strain_displacement(np.asarray(nodes, dtype=float)[tri])
    if not area[0] > 0:
        raise DegenerateElement(f"element {tri[0].tolist()} has non-positive area")
    ue = sol.as_vector()[element_dofs(tri)[0]]
    return B[0] @ ue


def compute_strain_field(mesh: Mesh, sol: DisplacementSolution) -> StrainField:
    B, areas = strain_displacement(mesh.element_coordinates)
    if np.any(areas <= 0):
        bad = int(np.argmin(areas))
        raise DegenerateElement(f"element {bad} has non-positive area")
    ue = sol.as_vector()[element_dofs(mesh.elements)]
    values = np.einsum("eij,ej->ei", B, ue)
    return StrainField(values=values, areas=areas, centroids=mesh.element_centroids)


def nodal_strain_average(mesh: Mesh, field: StrainField) -> np.ndarray:
    """Area-weighted mean of the strains of the elements around each node."""
    if len(field.values) != mesh.n_elements:
        raise StrainError(f"strain field has {len(field.values)} entries for {mesh.n_elements} elements")
    weighted = np.zeros((mesh.n_nodes, 3))
    total = np.zeros(mesh.n_nodes)
    for j in range(3):
        np.add.at(weighted, mesh.elements[:, j], field.values * field.areas[:, None])
        np.add.at(total, mesh.elements[:, j], field.areas)
    with np.errstate(invalid="ignore", divide="ignore"):
        return weighted / total[:, None]


def radial_displacement(sol: DisplacementSolution, nodes: np.ndarray, ref: ReferencePoint) -> np.ndarray:
    """U_i · (p_i - ref) / |p_i - ref| for every node."""
    rel = np.asarray(nodes, dtype=float) - ref.origin
    dist = np.hypot(rel[:, 0], rel[:, 1])
    scale = max(float(dist.max()), 1.0) if len(dist) else 1.0
    if np.any(dist <= 1e-12 * scale):
        raise NodeAtReference(f"node {int(np.argmin(dist))} coincides with the reference point")
    return np.einsum("ij,ij->i", sol.displacements, rel) / dist


def sector_index(positions: np.ndarray, ref: ReferencePoint, n_sectors: int) -> np.ndarray:
    """1-based sector of each position, counted anti-clockwise from 0 degrees."""
    width = 360.0 / n_sectors
    idx = np.floor(angles_deg(positions, ref) / width).astype(np.int64)
    return np.clip(idx, 0, n_sectors - 1) + 1


def sector_aggregate(
        values: np.ndarray,
        positions: np.ndarray,
        ref: ReferencePoint,
        n_sectors: int = 16,
        weights: Optional[np.ndarray] = None,
        columns: Optional[tuple] = None,
) -> SectorReport:
    """
    Bins entries by angle about `ref` and averages each sector, weighted by
    `weights` (element areas) when given.
    """
    if n_sectors < 1:
        raise StrainError(f"n_sectors must be >= 1, got {n_sectors}")
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    w = np.ones(len(vals)) if weights is None else np.asarray(weights, dtype=float)

    bins = sector_index(positions, ref, n_sectors) - 1
    counts = np.bincount(bins, minlength=n_sectors)
    weight_sums = np.bincount(bins, weights=w, minlength=n_sectors)
    sums = np.column_stack([
        np.bincount(bins, weights=w * vals[:, j], minlength=n_sectors) for j in range(vals.shape[1])
    ])
    means = np.full_like(sums, np.nan)
    filled = counts > 0
    means[filled] = sums[filled] / weight_sums[filled, None]

    report = SectorReport(
        n_sectors=n_sectors,
        means=means,
        counts=counts,
        weights=weight_sums,
        columns=columns or (STRAIN_COMPONENTS if vals.shape[1] == 3 else tuple(f"v{j}" for j in range(vals.shape[1]))),
    )
    if report.empty_sectors:
        logger.warning(f"Empty sector(s) {report.empty_sectors} of {n_sectors}; means reported as absent.")
    return report
