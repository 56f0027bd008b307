from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, FiniteFloat, field_validator, model_validator

from ..core.fem import MaterialParams
from ..core.mesh import RegionSpec, SectorRegion


class MaterialConfig(BaseModel):
    young_modulus: float = Field(..., gt=0, description="Young's modulus E.")
    poisson_ratio: float = Field(..., ge=0, lt=0.5, description="Poisson's ratio ν (plane stress).")
    thickness: float = Field(1.0, gt=0, description="Constant out-of-plane thickness t.")

    def to_params(self) -> MaterialParams:
        return MaterialParams(self.young_modulus, self.poisson_ratio, self.thickness)


class AbnormalRegionConfig(BaseModel):
    """An angular sector of the wall with its own (abnormal) material."""
    start_deg: float = Field(0.0, ge=0, lt=360)
    span_deg: float = Field(45.0, gt=0, le=360)
    material: MaterialConfig

    def to_region_spec(self) -> RegionSpec:
        return RegionSpec([SectorRegion(self.start_deg, self.span_deg, material_id=1)])


class MeshConfig(BaseModel):
    points: int = Field(32, ge=3, description="Points per contour after resampling (M).")
    layers: int = Field(4, ge=1, description="Radial element layers (L).")


class SolverConfig(BaseModel):
    method: Literal["direct", "cg"] = "direct"
    tolerance: float = Field(1e-10, gt=0, le=1e-4)
    max_iterations: Optional[int] = Field(None, gt=0)


class RuntimeConfig(BaseModel):
    concurrency: int = Field(2, ge=1, description="Frame pairs processed at the same time.")


class OutputConfig(BaseModel):
    dir: str = "./output"
    reports_dir: str = "./reports"
    log_file: Optional[str] = None


class PipelineConfig(BaseModel):
    """The complete configuration of one `analyze` run."""
    mesh: MeshConfig = Field(default_factory=MeshConfig)
    sectors: int = Field(16, ge=1)
    correspondence: Literal["arc_length", "material"] = Field(
        "arc_length",
        description="arc_length resamples every frame on its own; material keeps index-matched input points together.",
    )
    solver: SolverConfig = Field(default_factory=SolverConfig)
    material: MaterialConfig = Field(
        default_factory=lambda: MaterialConfig(young_modulus=31000.0, poisson_ratio=0.45)
    )
    abnormal: Optional[AbnormalRegionConfig] = None
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    def material_table(self) -> Dict[int, MaterialParams]:
        table = {0: self.material.to_params()}
        if self.abnormal is not None:
            table[1] = self.abnormal.material.to_params()
        return table

    def region_spec(self) -> Optional[RegionSpec]:
        return self.abnormal.to_region_spec() if self.abnormal is not None else None


class RingSpec(BaseModel):
    """Two-material ring loaded by internal pressure."""
    inner_radius: float = Field(1.0, gt=0)
    outer_radius: float = Field(2.0, gt=0)
    pressure: float = Field(1.0, ge=0)
    normal: MaterialConfig = Field(
        default_factory=lambda: MaterialConfig(young_modulus=31000.0, poisson_ratio=0.45)
    )
    abnormal: MaterialConfig = Field(
        default_factory=lambda: MaterialConfig(young_modulus=310000.0, poisson_ratio=0.45)
    )
    abnormal_start: float = Field(0.0, ge=0, lt=360)
    abnormal_span: float = Field(45.0, ge=0, le=360)
    thickness: float = Field(1.0, gt=0)
    center: Tuple[float, float] = (0.0, 0.0)

    @model_validator(mode="after")
    def _check_radii(self):
        if not self.inner_radius < self.outer_radius:
            raise ValueError("inner_radius must be smaller than outer_radius")
        return self

    @property
    def is_homogeneous(self) -> bool:
        same = (self.normal.young_modulus, self.normal.poisson_ratio) == (
            self.abnormal.young_modulus, self.abnormal.poisson_ratio)
        return self.abnormal_span == 0 or same

    def material_table(self) -> Dict[int, MaterialParams]:
        return {
            0: MaterialParams(self.normal.young_modulus, self.normal.poisson_ratio, self.thickness),
            1: MaterialParams(self.abnormal.young_modulus, self.abnormal.poisson_ratio, self.thickness),
        }

    def region_spec(self) -> RegionSpec:
        if self.abnormal_span == 0:
            return RegionSpec()
        return RegionSpec([SectorRegion(self.abnormal_start, self.abnormal_span, material_id=1)])

    def pipeline_config(self, points: int, layers: int, n_sectors: int = 16,
                        solver: Optional[SolverConfig] = None) -> PipelineConfig:
        """
        Pipeline settings that analyse this ring with the same two materials. The
        reference contours are index-matched nodes, so correspondence is by material point.
        """
        abnormal = None
        if self.abnormal_span > 0:
            abnormal = AbnormalRegionConfig(
                start_deg=self.abnormal_start,
                span_deg=self.abnormal_span,
                material=MaterialConfig(
                    young_modulus=self.abnormal.young_modulus,
                    poisson_ratio=self.abnormal.poisson_ratio,
                    thickness=self.thickness,
                ),
            )
        return PipelineConfig(
            mesh=MeshConfig(points=points, layers=layers),
            sectors=n_sectors,
            correspondence="material",
            solver=solver or SolverConfig(),
            material=MaterialConfig(
                young_modulus=self.normal.young_modulus,
                poisson_ratio=self.normal.poisson_ratio,
                thickness=self.thickness,
            ),
            abnormal=abnormal,
        )


class BenchmarkConfig(BaseModel):
    """The complete configuration of one `bench-ring` run."""
    ring: RingSpec = Field(default_factory=RingSpec)
    coarse_points: int = Field(64, ge=8)
    coarse_layers: int = Field(8, ge=1)
    fine_points: int = Field(256, ge=8)
    fine_layers: int = Field(16, ge=1)
    sectors: int = Field(16, ge=1)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)


# --- Contour document schema ---

Point = Tuple[FiniteFloat, FiniteFloat]


class FrameModel(BaseModel):
    t: int
    inner: List[Point] = Field(..., min_length=1)
    outer: List[Point] = Field(..., min_length=1)


class ContourDocumentModel(BaseModel):
    """Raw contour document as read from disk, before geometric validation."""
    subject: str
    slice: int
    frames: List[FrameModel] = Field(..., min_length=2)

    @field_validator("frames")
    @classmethod
    def _frames_strictly_increasing(cls, frames: List[FrameModel]) -> List[FrameModel]:
        for prev, cur in zip(frames, frames[1:]):
            if cur.t <= prev.t:
                raise ValueError(f"frame times must strictly increase (t={prev.t} then t={cur.t})")
        return frames
