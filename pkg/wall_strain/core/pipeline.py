"""
Deformation pipeline: for every consecutive frame pair, reference point ->
ordering and resampling -> boundary displacements -> annular mesh on the
earlier frame -> Dirichlet FEM solve -> element strain and sector report.
"""

import asyncio
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..config.models import PipelineConfig
from ..errors import FramePairError
from .contours import (
    BoundaryDisplacementField,
    ContourFrame,
    ReferencePoint,
    align_pair,
    centroid,
    compute_boundary_displacements,
)
from .fem import DirichletBC, DisplacementSolution, apply_dirichlet, assemble_global, solve_system
from .mesh import Mesh, build_annular_mesh, tag_regions
from .strain import (
    SectorReport,
    StrainField,
    compute_strain_field,
    radial_displacement,
    sector_aggregate,
    sector_index,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ContourDocument:
    subject: str
    slice: int
    frames: List[ContourFrame]


@dataclass(frozen=True)
class PairResult:
    t0: int
    t1: int
    reference: ReferencePoint
    boundary: BoundaryDisplacementField
    mesh: Mesh
    solution: DisplacementSolution
    strain: StrainField
    radial: np.ndarray
    element_sectors: np.ndarray
    sector_report: SectorReport
    seconds: float = 0.0

    @property
    def label(self) -> str:
        return f"{self.t0}-{self.t1}"


@dataclass
class OutputBundle:
    subject: str
    slice: int
    n_sectors: int
    pairs: List[PairResult] = field(default_factory=list)
    errors: List[Dict[str, Any]] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    @property
    def succeeded(self) -> bool:
        return not self.errors


def dirichlet_from_boundary(mesh: Mesh, boundary: BoundaryDisplacementField) -> List[DirichletBC]:
    """Prescribes the inner ring from inner_disp and the outer ring from outer_disp."""
    inner_ids = mesh.ring_node_ids(0)
    outer_ids = mesh.ring_node_ids(mesh.layers)
    bcs = [DirichletBC(int(n), (float(d[0]), float(d[1]))) for n, d in zip(inner_ids, boundary.inner_disp)]
    bcs += [DirichletBC(int(n), (float(d[0]), float(d[1]))) for n, d in zip(outer_ids, boundary.outer_disp)]
    return bcs


def analyze_frame_pair(frame0: ContourFrame, frame1: ContourFrame, cfg: PipelineConfig) -> PairResult:
    """Runs every stage for one pair; the mesh lives on frame0's geometry."""
    started = time.perf_counter()
    pair = (frame0.t, frame1.t)
    stage = "reference point"
    try:
        ref = centroid(frame0.inner)
        stage = "ordering"
        aligned0, aligned1 = align_pair(frame0, frame1, ref, cfg.mesh.points, cfg.correspondence)
        stage = "boundary displacements"
        boundary = compute_boundary_displacements(aligned0, aligned1, ref)

        stage = "meshing"
        mesh = build_annular_mesh(aligned0.inner, aligned0.outer, cfg.mesh.layers)
        region = cfg.region_spec()
        if region is not None:
            mesh = tag_regions(mesh, region, ref)

        stage = "solve"
        system = assemble_global(mesh, cfg.material_table())
        system = apply_dirichlet(system, dirichlet_from_boundary(mesh, boundary))
        solution = solve_system(
            system,
            tolerance=cfg.solver.tolerance,
            method=cfg.solver.method,
            max_iterations=cfg.solver.max_iterations,
        )

        stage = "strain"
        strain = compute_strain_field(mesh, solution)
        radial = radial_displacement(solution, mesh.nodes, ref)
        report = sector_aggregate(strain.values, strain.centroids, ref, cfg.sectors, weights=strain.areas)
        element_sectors = sector_index(strain.centroids, ref, cfg.sectors)
    except FramePairError:
        raise
    except Exception as e:
        raise FramePairError(pair, stage, e) from e

    return PairResult(
        t0=frame0.t,
        t1=frame1.t,
        reference=ref,
        boundary=boundary,
        mesh=mesh,
        solution=solution,
        strain=strain,
        radial=radial,
        element_sectors=element_sectors,
        sector_report=report,
        seconds=time.perf_counter() - started,
    )


class DeformationPipeline:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.results: List[PairResult] = []
        self.errors: List[Dict[str, Any]] = []
        self.pair_times: List[float] = []

    async def run(self, doc: ContourDocument) -> OutputBundle:
        """Processes every consecutive frame pair; failures are recorded, not raised."""
        pairs: List[Tuple[ContourFrame, ContourFrame]] = list(zip(doc.frames, doc.frames[1:]))
        logger.info(f"Processing {len(pairs)} frame pair(s) for subject '{doc.subject}', slice {doc.slice}.")

        semaphore = asyncio.Semaphore(self.config.runtime.concurrency)
        tasks = [asyncio.create_task(self._pair_task(f0, f1, semaphore)) for f0, f1 in pairs]
        outcomes = await asyncio.gather(*tasks)

        self.results = [r for r in outcomes if r is not None]
        self.pair_times = [r.seconds for r in self.results]
        logger.info(f"Finished: {len(self.results)} pair(s) succeeded, {len(self.errors)} failed.")
        return OutputBundle(
            subject=doc.subject,
            slice=doc.slice,
            n_sectors=self.config.sectors,
            pairs=self.results,
            errors=sorted(self.errors, key=lambda e: e["t0"]),
        )

    async def _pair_task(self, frame0: ContourFrame, frame1: ContourFrame,
                         semaphore: asyncio.Semaphore) -> Optional[PairResult]:
        async with semaphore:
            try:
                result = await asyncio.to_thread(analyze_frame_pair, frame0, frame1, self.config)
            except FramePairError as e:
                logger.error(str(e))
                self.errors.append({
                    "pair": f"{frame0.t}-{frame1.t}",
                    "t0": frame0.t,
                    "stage": e.stage,
                    "error": f"{type(e.cause).__name__}: {e.cause}",
                    "exception": e,
                })
                return None
            logger.info(
                f"Pair {result.label}: {result.mesh.n_elements} elements, "
                f"residual {result.solution.relative_residual:.2e}, {result.seconds:.2f}s."
            )
            return result


def run_deformation_pipeline(doc: ContourDocument, cfg: PipelineConfig, strict: bool = True) -> OutputBundle:
    """
    Runs the pipeline over the whole document. With `strict`, the first
    failing pair is raised as FramePairError.
    """
    engine = DeformationPipeline(cfg)
    bundle = asyncio.run(engine.run(doc))
    if strict and bundle.errors:
        raise bundle.errors[0]["exception"]
    return bundle
