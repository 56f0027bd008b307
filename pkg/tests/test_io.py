import json
from pathlib import Path

import pandas as pd
import pytest

from wall_strain.core.contours import signed_area
from wall_strain.core.pipeline import ContourDocument, run_deformation_pipeline
from wall_strain.errors import GeometryError, OutputWriteError, ParseError, SchemaViolation
from wall_strain.modules.contour_loader import load_contours
from wall_strain.modules.data_exporter import HEADER, mesh_listing, write_outputs

SAMPLE = Path(__file__).resolve().parent.parent / "data" / "sample_square_pair.json"

SQUARE = [[1, 0], [0, 1], [-1, 0], [0, -1]]
BIG_SQUARE = [[3, 0], [0, 3], [-3, 0], [0, -3]]


def write_doc(tmp_path, doc, name="doc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def frames(*pairs):
    return [{"t": t, "inner": inner, "outer": outer} for t, (inner, outer) in enumerate(pairs)]


class TestLoader:
    def test_sample_document(self):
        doc = load_contours(SAMPLE)
        assert (doc.subject, doc.slice, len(doc.frames)) == ("synthetic-01", 3, 2)
        assert [f.t for f in doc.frames] == [0, 1]

    def test_yaml_document(self, tmp_path):
        path = tmp_path / "doc.yaml"
        path.write_text(
            "subject: s\nslice: 1\nframes:\n"
            f"  - {{t: 0, inner: {SQUARE}, outer: {BIG_SQUARE}}}\n"
            f"  - {{t: 2, inner: {SQUARE}, outer: {BIG_SQUARE}}}\n",
            encoding="utf-8",
        )
        assert [f.t for f in load_contours(path).frames] == [0, 2]

    def test_clockwise_contours_are_reversed(self, tmp_path):
        doc = {"subject": "s", "slice": 0, "frames": frames((SQUARE[::-1], BIG_SQUARE[::-1]), (SQUARE, BIG_SQUARE))}
        loaded = load_contours(write_doc(tmp_path, doc))
        assert signed_area(loaded.frames[0].inner.points) > 0
        assert signed_area(loaded.frames[0].outer.points) > 0

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_contours(tmp_path / "absent.json")

    def test_malformed_text_reports_line(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("subject: s\nslice: 1\nframes: [\n  {t: 0,\n", encoding="utf-8")
        with pytest.raises(ParseError) as info:
            load_contours(path)
        assert info.value.line is not None

    def test_not_a_mapping(self, tmp_path):
        with pytest.raises(SchemaViolation):
            load_contours(write_doc(tmp_path, [1, 2, 3]))

    def test_missing_outer_names_frame(self, tmp_path):
        doc = {"subject": "s", "slice": 0, "frames": frames((SQUARE, BIG_SQUARE), (SQUARE, BIG_SQUARE))}
        del doc["frames"][1]["outer"]
        with pytest.raises(SchemaViolation) as info:
            load_contours(write_doc(tmp_path, doc))
        assert info.value.frame == 1
        assert str(info.value).startswith("frame 1:")

    def test_non_finite_coordinate(self, tmp_path):
        path = tmp_path / "nan.yaml"
        path.write_text(
            "subject: s\nslice: 1\nframes:\n"
            f"  - {{t: 0, inner: [[.nan, 0], [0, 1], [-1, 0]], outer: {BIG_SQUARE}}}\n"
            f"  - {{t: 1, inner: {SQUARE}, outer: {BIG_SQUARE}}}\n",
            encoding="utf-8",
        )
        with pytest.raises(SchemaViolation) as info:
            load_contours(path)
        assert info.value.frame == 0

    def test_times_must_increase(self, tmp_path):
        doc = {"subject": "s", "slice": 0, "frames": frames((SQUARE, BIG_SQUARE), (SQUARE, BIG_SQUARE))}
        doc["frames"][1]["t"] = 0
        with pytest.raises(SchemaViolation):
            load_contours(write_doc(tmp_path, doc))

    def test_single_frame_rejected(self, tmp_path):
        doc = {"subject": "s", "slice": 0, "frames": frames((SQUARE, BIG_SQUARE))}
        with pytest.raises(SchemaViolation):
            load_contours(write_doc(tmp_path, doc))

    def test_inner_outside_outer(self, tmp_path):
        doc = {"subject": "s", "slice": 0, "frames": frames((SQUARE, BIG_SQUARE), (BIG_SQUARE, SQUARE))}
        with pytest.raises(GeometryError) as info:
            load_contours(write_doc(tmp_path, doc))
        assert info.value.frame == 1

    def test_self_intersecting_contour(self, tmp_path):
        bowtie = [[1, 1], [-1, -1], [1, -1], [-1, 1]]
        doc = {"subject": "s", "slice": 0, "frames": frames((bowtie, BIG_SQUARE), (SQUARE, BIG_SQUARE))}
        with pytest.raises(GeometryError) as info:
            load_contours(write_doc(tmp_path, doc))
        assert info.value.frame == 0


@pytest.fixture
def small_bundle(synthetic_cycle, pipeline_config):
    doc = ContourDocument(subject="synthetic", slice=1, frames=synthetic_cycle.frames[:4])
    return run_deformation_pipeline(doc, pipeline_config)


class TestExporter:
    def test_files_per_pair(self, small_bundle, pipeline_config):
        written = write_outputs(small_bundle, pipeline_config)
        names = sorted(p.name for p in written)
        assert len(names) == 3 * 4 + 1
        assert "displacements_0_1.csv" in names and "mesh_2.txt" in names
        assert "sector_strain.csv" in names

    def test_csv_layout(self, small_bundle, pipeline_config):
        write_outputs(small_bundle, pipeline_config)
        out = Path(pipeline_config.output.dir)
        raw = (out / "sector_strain.csv").read_bytes()
        assert raw.startswith(HEADER.encode())
        assert b"\r" not in raw

        sectors = pd.read_csv(out / "sector_strain.csv", comment="#")
        assert sectors.columns.tolist() == ["pair", "sector", "mean_eps_x", "mean_eps_y", "mean_gamma_xy"]
        assert len(sectors) == 3 * 16

        disp = pd.read_csv(out / "displacements_1_2.csv", comment="#")
        assert disp.columns.tolist() == ["node_id", "x", "y", "u", "v", "u_radial"]
        assert len(disp) == 32 * 5

        strain = pd.read_csv(out / "strain_elements_1_2.csv", comment="#")
        assert len(strain) == 2 * 32 * 4
        assert strain["sector"].between(1, 16).all()

        boundary = pd.read_csv(out / "boundary_1_2.csv", comment="#")
        assert boundary["contour"].value_counts().to_dict() == {"inner": 32, "outer": 32}

    def test_mesh_listing(self, small_bundle):
        mesh = small_bundle.pairs[0].mesh
        lines = mesh_listing(mesh)
        assert lines[0] == str(mesh.n_nodes)
        assert lines[1].split()[-1] == "inner_boundary"
        assert lines[mesh.n_nodes].split()[-1] == "outer_boundary"
        assert lines[mesh.n_nodes + 1] == str(mesh.n_elements)
        assert len(lines) == mesh.n_nodes + mesh.n_elements + 2

    def test_deterministic_bytes(self, small_bundle, pipeline_config, tmp_path):
        first = write_outputs(small_bundle, pipeline_config)
        again = pipeline_config.model_copy(deep=True)
        again.output.dir = str(tmp_path / "again")
        second = write_outputs(small_bundle, again)
        for a, b in zip(sorted(first), sorted(second)):
            assert a.name == b.name
            assert a.read_bytes() == b.read_bytes()

    def test_unwritable_directory(self, small_bundle, pipeline_config, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        pipeline_config.output.dir = str(blocker / "sub")
        with pytest.raises(OutputWriteError):
            write_outputs(small_bundle, pipeline_config)
