import logging
from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd

from ..config.models import PipelineConfig
from ..core.benchmark import BenchmarkResult
from ..core.mesh import BoundaryKind, Mesh
from ..core.pipeline import SCHEMA_VERSION, OutputBundle, PairResult
from ..errors import OutputWriteError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
HEADER = f"# schema_version={SCHEMA_VERSION}\n"


def write_csv(df: pd.DataFrame, path: Path) -> Path:
    """Versioned CSV: header comment, '.' decimals, LF line endings."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(HEADER)
            df.to_csv(f, index=False, lineterminator="\n", float_format=FLOAT_FORMAT)
    except OSError as e:
        raise OutputWriteError(f"failed to write {path}: {e}") from e
    return path


def write_text(lines: List[str], path: Path) -> Path:
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(HEADER)
            f.write("\n".join(lines) + "\n")
    except OSError as e:
        raise OutputWriteError(f"failed to write {path}: {e}") from e
    return path


def _num(x: float) -> str:
    return FLOAT_FORMAT % x


def mesh_listing(mesh: Mesh) -> List[str]:
    lines = [str(mesh.n_nodes)]
    for i, ((x, y), kind) in enumerate(zip(mesh.nodes, mesh.boundary)):
        lines.append(f"{i} {_num(x)} {_num(y)} {BoundaryKind(int(kind)).label}")
    lines.append(str(mesh.n_elements))
    for i, ((n0, n1, n2), mat) in enumerate(zip(mesh.elements, mesh.material_ids)):
        lines.append(f"{i} {n0} {n1} {n2} {mat}")
    return lines


def displacement_frame(pair: PairResult) -> pd.DataFrame:
    nodes, disp = pair.mesh.nodes, pair.solution.displacements
    return pd.DataFrame({
        "node_id": np.arange(pair.mesh.n_nodes),
        "x": nodes[:, 0],
        "y": nodes[:, 1],
        "u": disp[:, 0],
        "v": disp[:, 1],
        "u_radial": pair.radial,
    })


def strain_frame(pair: PairResult) -> pd.DataFrame:
    strain = pair.strain
    return pd.DataFrame({
        "elem_id": np.arange(len(strain.values)),
        "centroid_x": strain.centroids[:, 0],
        "centroid_y": strain.centroids[:, 1],
        "eps_x": strain.eps_x,
        "eps_y": strain.eps_y,
        "gamma_xy": strain.gamma_xy,
        "sector": pair.element_sectors,
    })


def boundary_frame(pair: PairResult) -> pd.DataFrame:
    parts = []
    for name, ids, disp in (
            ("inner", pair.mesh.ring_node_ids(0), pair.boundary.inner_disp),
            ("outer", pair.mesh.ring_node_ids(pair.mesh.layers), pair.boundary.outer_disp),
    ):
        pts = pair.mesh.nodes[ids]
        parts.append(pd.DataFrame({
            "contour": name,
            "index": np.arange(len(ids)),
            "x": pts[:, 0],
            "y": pts[:, 1],
            "u": disp[:, 0],
            "v": disp[:, 1],
        }))
    return pd.concat(parts, ignore_index=True)


def sector_strain_frame(bundle: OutputBundle) -> pd.DataFrame:
    frames = []
    for pair in bundle.pairs:
        df = pair.sector_report.to_frame()
        df.insert(0, "pair", pair.label)
        frames.append(df)
    if not frames:
        return pd.DataFrame(columns=["pair", "sector", "mean_eps_x", "mean_eps_y", "mean_gamma_xy"])
    return pd.concat(frames, ignore_index=True)


def write_outputs(bundle: OutputBundle, cfg: PipelineConfig) -> List[Path]:
    """Writes one displacement/strain/boundary/mesh set per pair plus sector_strain.csv."""
    out = Path(cfg.output.dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputWriteError(f"cannot create output directory {out}: {e}") from e

    written = []
    for pair in bundle.pairs:
        tag = f"{pair.t0}_{pair.t1}"
        written.append(write_csv(displacement_frame(pair), out / f"displacements_{tag}.csv"))
        written.append(write_csv(strain_frame(pair), out / f"strain_elements_{tag}.csv"))
        written.append(write_csv(boundary_frame(pair), out / f"boundary_{tag}.csv"))
        written.append(write_text(mesh_listing(pair.mesh), out / f"mesh_{pair.t0}.txt"))
    written.append(write_csv(sector_strain_frame(bundle), out / "sector_strain.csv"))

    logger.info(f"Wrote {len(written)} file(s) to {out}")
    return written


def benchmark_summary(result: BenchmarkResult) -> List[str]:
    lines = [
        f"coarse mesh: M={result.coarse[0]} L={result.coarse[1]}",
        f"fine mesh:   M={result.fine[0]} L={result.fine[1]}",
        "sector  radial    x         y",
    ]
    u = result.u_correlations if result.u_correlations is not None else np.full_like(result.correlations, np.nan)
    v = result.v_correlations if result.v_correlations is not None else np.full_like(result.correlations, np.nan)
    for s, (c, cu, cv) in enumerate(zip(result.correlations, u, v), start=1):
        lines.append(f"{s:>6}  {c:<8.4f}  {cu:<8.4f}  {cv:.4f}")
    lines.append(f"min {result.min_correlation:.4f}  mean {result.mean_correlation:.4f}")
    if result.undefined_sectors:
        lines.append(f"undefined sectors {result.undefined_sectors}")
    lines.append(f"L2 displacement discrepancy {result.l2_discrepancy:.4e}")
    if result.lame_l2_error is not None:
        lines.append(f"L2 radial error vs closed form {result.lame_l2_error:.4e}")
    return lines


def write_benchmark(result: BenchmarkResult, out_dir: Union[str, Path]) -> List[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputWriteError(f"cannot create output directory {out}: {e}") from e
    df = pd.DataFrame({
        "sector": np.arange(1, len(result.correlations) + 1),
        "correlation": result.correlations,
        "correlation_x": result.u_correlations,
        "correlation_y": result.v_correlations,
        "nodes": result.sector_counts,
    })
    written = [
        write_csv(df, out / "bench_correlations.csv"),
        write_text(benchmark_summary(result), out / "bench_summary.txt"),
    ]
    logger.info(f"Wrote benchmark results to {out}")
    return written
