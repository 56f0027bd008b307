"""
Plane-stress linear elasticity on constant-strain triangles.

DOFs are interleaved [u0, v0, u1, v1, ...]. The stiffness matrix is
assembled as a scipy sparse matrix, Dirichlet data is imposed by symmetric
elimination and the reduced SPD system is solved directly (spsolve) or by
Jacobi-preconditioned conjugate gradients.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from ..errors import (
    ConflictingBC,
    DegenerateElement,
    EdgeNotOnBoundary,
    InvalidMaterial,
    InvalidPoisson,
    NoConvergence,
    NotPositiveDefinite,
    SingularConstraint,
    UnknownMaterial,
    UnsupportedConstraint,
)
from .mesh import Mesh

logger = logging.getLogger(__name__)

DEGENERATE_AREA_FACTOR = 1e-12


@dataclass(frozen=True)
class MaterialParams:
    young_modulus: float
    poisson_ratio: float
    thickness: float = 1.0

    def validate(self) -> None:
        if not self.young_modulus > 0:
            raise InvalidMaterial(f"Young's modulus must be > 0, got {self.young_modulus}")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise InvalidPoisson(f"Poisson's ratio must be in [0, 0.5), got {self.poisson_ratio}")
        if not self.thickness > 0:
            raise InvalidMaterial(f"thickness must be > 0, got {self.thickness}")


@dataclass(frozen=True)
class DirichletBC:
    """Prescribes h u = r at one node; `components` lists the constrained rows (0 = u, 1 = v)."""

    node_id: int
    r: Tuple[float, float]
    h: Optional[np.ndarray] = None
    components: Tuple[int, ...] = (0, 1)


@dataclass(frozen=True)
class TractionBC:
    """Constant traction g on the boundary edge (n0, n1); q must be zero."""

    edge: Tuple[int, int]
    g: Tuple[float, float]
    q: Optional[np.ndarray] = None


@dataclass(frozen=True)
class LinearSystem:
    K: sparse.csr_matrix
    F: np.ndarray
    mesh: Optional[Mesh] = None
    materials: Mapping[int, MaterialParams] = field(default_factory=dict)
    fixed_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    fixed_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_dofs(self) -> int:
        return self.K.shape[0]

    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.fixed_dofs] = False
        return np.flatnonzero(mask)

    def reduced(self) -> Tuple[sparse.csr_matrix, np.ndarray, np.ndarray]:
        """K_ff and F_f - K_fc u_c for the free DOFs."""
        free = self.free_dofs()
        K_ff = self.K[free][:, free]
        rhs = self.F[free].copy()
        if len(self.fixed_dofs):
            K_fc = self.K[free][:, self.fixed_dofs]
            rhs -= K_fc @ self.fixed_values
        return K_ff.tocsr(), rhs, free


@dataclass(frozen=True)
class DisplacementSolution:
    displacements: np.ndarray
    relative_residual: float = 0.0
    iterations: int = 0
    method: str = "direct"

    @property
    def u(self) -> np.ndarray:
        return self.displacements[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.displacements[:, 1]

    def as_vector(self) -> np.ndarray:
        return self.displacements.reshape(-1)


def constitutive_matrix(m: MaterialParams) -> np.ndarray:
    """Plane-stress D = E / (1 - ν²) [[1, ν, 0], [ν, 1, 0], [0, 0, (1 - ν) / 2]]."""
    m.validate()
    E, nu = m.young_modulus, m.poisson_ratio
    return (E / (1.0 - nu ** 2)) * np.array([
        [1.0, nu, 0.0],
        [nu, 1.0, 0.0],
        [0.0, 0.0, 0.5 * (1.0 - nu)],
    ])


def degenerate_area_threshold(nodes: np.ndarray) -> float:
    span = nodes.max(axis=0) - nodes.min(axis=0)
    return DEGENERATE_AREA_FACTOR * float(span[0] * span[1])


def strain_displacement(coords: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Constant B matrices (m, 3, 6) and signed areas (m,) for triangles given
    as coordinates of shape (m, 3, 2).
    """
    x, y = coords[..., 0], coords[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    twice_area = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])

    with np.errstate(divide="ignore", invalid="ignore"):
        bn = b / twice_area[:, None]
        cn = c / twice_area[:, None]
    B = np.zeros((len(coords), 3, 6))
    B[:, 0, 0::2] = bn
    B[:, 1, 1::2] = cn
    B[:, 2, 0::2] = cn
    B[:, 2, 1::2] = bn
    return B, 0.5 * twice_area


def _check_areas(areas: np.ndarray, threshold: float) -> None:
    if np.any(areas <= threshold):
        bad = int(np.argmin(areas))
        raise DegenerateElement(f"element {bad} has area {areas[bad]:.3e} <= {threshold:.3e}")


def _stiffness_blocks(B: np.ndarray, D: np.ndarray, scale: np.ndarray) -> np.ndarray:
    Ke = np.einsum("eji,ejk,ekl->eil", B, D, B) * scale[:, None, None]
    return 0.5 * (Ke + np.transpose(Ke, (0, 2, 1)))


def element_stiffness(tri, nodes: np.ndarray, D: np.ndarray, thickness: float) -> np.ndarray:
    """Ke = A t Bᵀ D B for one linear triangle (6 x 6)."""
    nodes = np.asarray(nodes, dtype=float)
    coords = nodes[np.asarray(tri, dtype=np.int64)][None, :, :]
    B, area = strain_displacement(coords)
    _check_areas(area, degenerate_area_threshold(nodes))
    return _stiffness_blocks(B, D[None, :, :], area * thickness)[0]


def element_dofs(elements: np.ndarray) -> np.ndarray:
    return np.stack([2 * elements, 2 * elements + 1], axis=2).reshape(len(elements), 6)


def assemble_global(mesh: Mesh, materials: Mapping[int, MaterialParams]) -> LinearSystem:
    """Scatters every element stiffness into K in element order; F = 0."""
    missing = sorted(set(np.unique(mesh.material_ids).tolist()) - set(materials))
    if missing:
        raise UnknownMaterial(f"material id(s) {missing} not present in the material table")

    ids = sorted(materials)
    D_table = np.stack([constitutive_matrix(materials[i]) for i in ids])
    t_table = np.array([materials[i].thickness for i in ids])
    lookup = np.searchsorted(ids, mesh.material_ids)

    B, areas = strain_displacement(mesh.element_coordinates)
    _check_areas(areas, degenerate_area_threshold(mesh.nodes))
    Ke = _stiffness_blocks(B, D_table[lookup], areas * t_table[lookup])

    dofs = element_dofs(mesh.elements)
    rows = np.repeat(dofs[:, :, None], 6, axis=2)
    cols = np.repeat(dofs[:, None, :], 6, axis=1)
    n = 2 * mesh.n_nodes
    K = sparse.coo_matrix((Ke.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()
    K = (0.5 * (K + K.T)).tocsr()
    K.sort_indices()

    logger.debug(f"Assembled K: {n} DOFs, {K.nnz} non-zeros.")
    return LinearSystem(K=K, F=np.zeros(n), mesh=mesh, materials=dict(materials))


def apply_dirichlet(sys: LinearSystem, bcs: Sequence[DirichletBC]) -> LinearSystem:
    """Adds prescribed DOFs; elimination happens in `LinearSystem.reduced`."""
    prescribed: Dict[int, float] = dict(zip(sys.fixed_dofs.tolist(), sys.fixed_values.tolist()))
    for bc in bcs:
        _check_h(bc)
        for comp in bc.components:
            dof = 2 * int(bc.node_id) + int(comp)
            value = float(bc.r[comp])
            if dof in prescribed and prescribed[dof] != value:
                raise ConflictingBC(
                    f"DOF {dof} (node {bc.node_id}) prescribed as {prescribed[dof]} and {value}"
                )
            prescribed[dof] = value

    dofs = np.array(sorted(prescribed), dtype=np.int64)
    values = np.array([prescribed[d] for d in dofs.tolist()], dtype=float)
    return replace(sys, fixed_dofs=dofs, fixed_values=values)


def _check_h(bc: DirichletBC) -> None:
    if bc.h is None:
        return
    h = np.asarray(bc.h, dtype=float).reshape(2, 2)
    if len(bc.components) == 2 and abs(np.linalg.det(h)) < 1e-14:
        raise SingularConstraint(f"h matrix of node {bc.node_id} is singular")
    if not np.array_equal(h[list(bc.components)], np.eye(2)[list(bc.components)]):
        raise UnsupportedConstraint(f"node {bc.node_id}: only identity h is supported")


def apply_traction(sys: LinearSystem, bcs: Sequence[TractionBC]) -> LinearSystem:
    """Adds t g ℓ / 2 to both end nodes of every loaded boundary edge."""
    if not bcs:
        return sys
    if sys.mesh is None:
        raise EdgeNotOnBoundary("traction needs a system assembled from a mesh")
    mesh = sys.mesh
    boundary = {tuple(e) for e in mesh.boundary_edges().tolist()}

    F = sys.F.copy()
    for bc in bcs:
        if bc.q is not None and np.any(np.asarray(bc.q) != 0):
            raise UnsupportedConstraint("generalized Neumann term q must be zero")
        n0, n1 = int(bc.edge[0]), int(bc.edge[1])
        if (min(n0, n1), max(n0, n1)) not in boundary:
            raise EdgeNotOnBoundary(f"edge ({n0}, {n1}) is not on the domain boundary")
        owner = mesh.edge_owner(n0, n1)
        thickness = sys.materials[int(mesh.material_ids[owner])].thickness
        length = float(np.linalg.norm(mesh.nodes[n1] - mesh.nodes[n0]))
        share = 0.5 * thickness * length * np.asarray(bc.g, dtype=float)
        F[2 * n0:2 * n0 + 2] += share
        F[2 * n1:2 * n1 + 2] += share
    return replace(sys, F=F)


def inner_pressure_tractions(mesh: Mesh, pressure: float) -> List[TractionBC]:
    """
    Pressure acting from the cavity on every inner-ring edge: g = -p n̄ with
    n̄ the outward normal of the wall (pointing into the cavity).
    """
    ring = mesh.ring_node_ids(0)
    bcs = []
    for n0, n1 in zip(ring, np.roll(ring, -1)):
        d = mesh.nodes[n1] - mesh.nodes[n0]
        length = float(np.hypot(d[0], d[1]))
        g = pressure * np.array([d[1], -d[0]]) / length
        bcs.append(TractionBC(edge=(int(n0), int(n1)), g=(float(g[0]), float(g[1]))))
    return bcs


def rigid_body_modes(nodes: np.ndarray) -> np.ndarray:
    """Columns: x-translation, y-translation, linearized rotation about the node centroid."""
    rel = nodes - nodes.mean(axis=0)
    R = np.zeros((2 * len(nodes), 3))
    R[0::2, 0] = 1.0
    R[1::2, 1] = 1.0
    R[0::2, 2] = -rel[:, 1]
    R[1::2, 2] = rel[:, 0]
    return R


def remove_rigid_motion(nodes: np.ndarray, displacements: np.ndarray) -> np.ndarray:
    """Subtracts the least-squares best-fit translation + rotation."""
    R = rigid_body_modes(nodes)
    vec = displacements.reshape(-1)
    coeffs, *_ = np.linalg.lstsq(R, vec, rcond=None)
    return (vec - R @ coeffs).reshape(-1, 2)


def _jacobi_cg(K: sparse.csr_matrix, rhs: np.ndarray, tolerance: float, max_iterations: int):
    """Conjugate gradients with diagonal scaling; stops on the recurrence residual."""
    diag = K.diagonal()
    if np.any(diag <= 0):
        raise NotPositiveDefinite("stiffness matrix has a non-positive diagonal entry")
    inv_diag = 1.0 / diag

    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    threshold = 0.1 * tolerance * float(np.linalg.norm(rhs))

    for iteration in range(1, max_iterations + 1):
        Kp = K @ p
        pKp = float(p @ Kp)
        if pKp <= 0:
            raise NotPositiveDefinite("stiffness matrix is not positive definite (insufficient constraints?)")
        alpha = rz / pKp
        x += alpha * p
        r -= alpha * Kp
        if np.linalg.norm(r) <= threshold:
            return x, iteration
        z = inv_diag * r
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    raise NoConvergence(f"conjugate gradients did not converge in {max_iterations} iterations")


def solve_system(
        sys: LinearSystem,
        tolerance: float = 1e-10,
        method: str = "direct",
        max_iterations: Optional[int] = None,
) -> DisplacementSolution:
    """Solves the reduced system and reinjects the prescribed values exactly."""
    n = sys.n_dofs
    u = np.zeros(n)
    u[sys.fixed_dofs] = sys.fixed_values
    K_ff, rhs, free = sys.reduced()

    if len(free) == 0:
        return DisplacementSolution(u.reshape(-1, 2), method="prescribed")

    if sys.mesh is not None:
        modes = rigid_body_modes(sys.mesh.nodes)
        if np.linalg.matrix_rank(modes[sys.fixed_dofs]) < 3:
            raise NotPositiveDefinite(
                "constraints leave rigid-body modes free; the stiffness matrix is singular"
            )

    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return DisplacementSolution(u.reshape(-1, 2), method=method)

    iterations = 0
    if method == "direct":
        u_free = spsolve(K_ff.tocsc(), rhs)
        if not np.all(np.isfinite(u_free)):
            raise NotPositiveDefinite("direct factorization failed; the reduced matrix is singular")
    elif method == "cg":
        u_free, iterations = _jacobi_cg(K_ff, rhs, tolerance, max_iterations or 10 * len(free))
    else:
        raise ValueError(f"unknown solver method '{method}'")

    residual = float(np.linalg.norm(K_ff @ u_free - rhs)) / rhs_norm
    if residual > tolerance:
        raise NoConvergence(f"relative residual {residual:.3e} exceeds tolerance {tolerance:.1e}")

    u[free] = u_free
    u[sys.fixed_dofs] = sys.fixed_values
    logger.debug(f"Solved {len(free)} free DOFs ({method}), relative residual {residual:.3e}.")
    return DisplacementSolution(u.reshape(-1, 2), relative_residual=residual, iterations=iterations, method=method)
