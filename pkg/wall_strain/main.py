import asyncio
import logging
from dataclasses import asdict
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd
import typer
import yaml
from pydantic import BaseModel, ValidationError

# --- Local Imports ---
from wall_strain.config.models import BenchmarkConfig, PipelineConfig
from wall_strain.core.benchmark import run_benchmark
from wall_strain.core.contours import align_frame, centroid
from wall_strain.core.mesh import build_annular_mesh, mesh_quality_report
from wall_strain.core.pipeline import DeformationPipeline
from wall_strain.errors import WallStrainError
from wall_strain.modules.contour_loader import load_contours
from wall_strain.modules.data_exporter import benchmark_summary, write_benchmark, write_outputs
from wall_strain.utils.logging_config import setup_logging
from wall_strain.utils.reporting import ReportGenerator

logger = logging.getLogger(__name__)

# --- CLI Application using Typer ---
app = typer.Typer(help="Cardiac wall deformation and strain estimation from paired contours.")


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level.")):
    setup_logging(logging.DEBUG if verbose else logging.INFO)


def _read_config_file(config_path: Optional[Path]) -> Dict[str, Any]:
    if config_path is None:
        return {}
    if not config_path.exists():
        logger.error(f"Configuration file not found. Please ensure '{config_path}' exists.")
        raise typer.Exit(code=1)
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        logger.error(f"Error loading config '{config_path}':\n{e}")
        raise typer.Exit(code=1)
    if not isinstance(data, dict):
        logger.error(f"Config file '{config_path}' is empty or invalid.")
        raise typer.Exit(code=1)
    return data


def _set(data: Dict[str, Any], dotted: str, value: Any) -> None:
    """Sets data['a']['b'] for 'a.b' when value is given on the command line."""
    if value is None:
        return
    *parents, leaf = dotted.split(".")
    node = data
    for key in parents:
        child = node.get(key)
        if not isinstance(child, dict):
            child = node[key] = {}
        node = child
    node[leaf] = value


def _build(model_cls, data: Dict[str, Any]) -> BaseModel:
    try:
        return model_cls(**data)
    except ValidationError as e:
        logger.error(f"Invalid configuration:\n{e}")
        raise typer.Exit(code=1)


@app.command()
def analyze(
        contours: Path = typer.Option(..., "--contours", help="Contour document (JSON or YAML)."),
        config: Optional[Path] = typer.Option(None, "--config", help="YAML PipelineConfig file."),
        points: Optional[int] = typer.Option(None, "--points", help="Points per contour after resampling."),
        layers: Optional[int] = typer.Option(None, "--layers", help="Radial element layers."),
        sectors: Optional[int] = typer.Option(None, "--sectors", help="Number of angular sectors."),
        correspondence: Optional[str] = typer.Option(
            None, "--correspondence", help="arc_length (resample each frame) or material (index-matched points)."),
        tol: Optional[float] = typer.Option(None, "--tol", help="Solver relative residual tolerance."),
        young_modulus: Optional[float] = typer.Option(None, "--e", help="Young's modulus of the normal wall."),
        poisson_ratio: Optional[float] = typer.Option(None, "--nu", help="Poisson's ratio of the normal wall."),
        abnormal_start: Optional[float] = typer.Option(None, "--abnormal-start", help="Abnormal sector start (deg)."),
        abnormal_span: Optional[float] = typer.Option(None, "--abnormal-span", help="Abnormal sector span (deg)."),
        young_modulus2: Optional[float] = typer.Option(None, "--e2", help="Young's modulus of the abnormal sector."),
        poisson_ratio2: Optional[float] = typer.Option(None, "--nu2", help="Poisson's ratio of the abnormal sector."),
        out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
):
    """
    Runs the deformation pipeline on every consecutive frame pair and writes
    displacement, strain, sector and mesh files.
    """
    data = _read_config_file(config)
    _set(data, "mesh.points", points)
    _set(data, "mesh.layers", layers)
    _set(data, "sectors", sectors)
    _set(data, "correspondence", correspondence)
    _set(data, "solver.tolerance", tol)
    _set(data, "material.young_modulus", young_modulus)
    _set(data, "material.poisson_ratio", poisson_ratio)
    _set(data, "output.dir", str(out) if out else None)
    if any(v is not None for v in (abnormal_start, abnormal_span, young_modulus2, poisson_ratio2)):
        _set(data, "abnormal.start_deg", abnormal_start)
        _set(data, "abnormal.span_deg", abnormal_span)
        _set(data, "abnormal.material.young_modulus", young_modulus2)
        _set(data, "abnormal.material.poisson_ratio", poisson_ratio2)
    cfg: PipelineConfig = _build(PipelineConfig, data)
    if cfg.output.log_file:
        setup_logging(logging.getLogger().level, cfg.output.log_file)

    start_time = datetime.now()
    logger.info(f"Initiating analysis of: {contours}")
    try:
        doc = load_contours(contours)
    except WallStrainError as e:
        logger.error(f"Cannot load contours: {e}")
        raise typer.Exit(code=1)

    engine = DeformationPipeline(cfg)
    bundle = asyncio.run(engine.run(doc))

    try:
        write_outputs(bundle, cfg)
    except WallStrainError as e:
        logger.error(str(e))
        raise typer.Exit(code=1)
    finally:
        try:
            ReportGenerator(
                analysis=f"{doc.subject}_slice{doc.slice}",
                pair_times=engine.pair_times,
                residuals=[p.solution.relative_residual for p in bundle.pairs],
                errors=bundle.errors,
                start_time=start_time,
                reports_dir=cfg.output.reports_dir,
            ).generate_all_reports()
        except Exception as report_e:
            logger.error(f"Failed to generate reports: {report_e}", exc_info=True)

    if not bundle.succeeded:
        logger.error(f"{len(bundle.errors)} frame pair(s) failed.")
        raise typer.Exit(code=1)
    logger.info(f"Analysis of '{doc.subject}' completed.")


@app.command("bench-ring")
def bench_ring(
        config: Optional[Path] = typer.Option(None, "--config", help="YAML BenchmarkConfig file."),
        a: Optional[float] = typer.Option(None, "--a", help="Inner radius."),
        b: Optional[float] = typer.Option(None, "--b", help="Outer radius."),
        pressure: Optional[float] = typer.Option(None, "--pressure", help="Internal pressure."),
        e1: Optional[float] = typer.Option(None, "--e1", help="Young's modulus, normal material."),
        nu1: Optional[float] = typer.Option(None, "--nu1", help="Poisson's ratio, normal material."),
        e2: Optional[float] = typer.Option(None, "--e2", help="Young's modulus, abnormal material."),
        nu2: Optional[float] = typer.Option(None, "--nu2", help="Poisson's ratio, abnormal material."),
        abnormal_start: Optional[float] = typer.Option(None, "--abnormal-start", help="Abnormal sector start (deg)."),
        abnormal_span: Optional[float] = typer.Option(None, "--abnormal-span", help="Abnormal sector span (deg)."),
        coarse_points: Optional[int] = typer.Option(None, "--coarse-points"),
        coarse_layers: Optional[int] = typer.Option(None, "--coarse-layers"),
        fine_points: Optional[int] = typer.Option(None, "--fine-points"),
        fine_layers: Optional[int] = typer.Option(None, "--fine-layers"),
        out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
):
    """
    Pressurized two-material ring: fine reference solve vs the contour-driven
    pipeline, correlated per sector.
    """
    data = _read_config_file(config)
    for dotted, value in (
            ("ring.inner_radius", a), ("ring.outer_radius", b), ("ring.pressure", pressure),
            ("ring.normal.young_modulus", e1), ("ring.normal.poisson_ratio", nu1),
            ("ring.abnormal.young_modulus", e2), ("ring.abnormal.poisson_ratio", nu2),
            ("ring.abnormal_start", abnormal_start), ("ring.abnormal_span", abnormal_span),
            ("coarse_points", coarse_points), ("coarse_layers", coarse_layers),
            ("fine_points", fine_points), ("fine_layers", fine_layers),
            ("output.dir", str(out) if out else None),
    ):
        _set(data, dotted, value)
    cfg: BenchmarkConfig = _build(BenchmarkConfig, data)

    start_time = datetime.now()
    try:
        result = run_benchmark(
            cfg.ring,
            coarse=(cfg.coarse_points, cfg.coarse_layers),
            fine=(cfg.fine_points, cfg.fine_layers),
            n_sectors=cfg.sectors,
            solver=cfg.solver,
        )
        write_benchmark(result, cfg.output.dir)
    except WallStrainError as e:
        logger.error(f"Ring benchmark failed: {e}")
        raise typer.Exit(code=1)

    for line in benchmark_summary(result):
        typer.echo(line)

    try:
        ReportGenerator(
            analysis="bench_ring",
            pair_times=[(datetime.now() - start_time).total_seconds()],
            residuals=[],
            errors=[],
            start_time=start_time,
            reports_dir=cfg.output.reports_dir,
            extra={"min_correlation": result.min_correlation, "mean_correlation": result.mean_correlation},
        ).generate_all_reports()
    except Exception as report_e:
        logger.error(f"Failed to generate reports: {report_e}", exc_info=True)


@app.command("mesh-info")
def mesh_info(
        contours: Path = typer.Option(..., "--contours", help="Contour document (JSON or YAML)."),
        points: int = typer.Option(32, "--points", min=3, help="Points per contour after resampling."),
        layers: int = typer.Option(4, "--layers", min=1, help="Radial element layers."),
):
    """Prints mesh size and element quality for every frame of a contour document."""
    try:
        doc = load_contours(contours)
        rows = []
        for frame in doc.frames:
            aligned = align_frame(frame, centroid(frame.inner), points)
            quality = mesh_quality_report(build_annular_mesh(aligned.inner, aligned.outer, layers))
            rows.append({"t": frame.t, **asdict(quality)})
    except WallStrainError as e:
        logger.error(f"mesh-info failed: {e}")
        raise typer.Exit(code=1)
    typer.echo(pd.DataFrame(rows).to_string(index=False))


if __name__ == "__main__":
    app()
