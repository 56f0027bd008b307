import json
from datetime import datetime

import numpy as np

from wall_strain.errors import FramePairError
from wall_strain.utils.reporting import NumpyJSONEncoder, ReportGenerator


def test_numpy_values_serialize():
    payload = {"a": np.float64(1.5), "b": np.int64(3), "c": np.arange(3), "d": np.bool_(True)}
    assert json.loads(json.dumps(payload, cls=NumpyJSONEncoder)) == {"a": 1.5, "b": 3, "c": [0, 1, 2], "d": True}


def test_reports_written(tmp_path):
    error = FramePairError((2, 3), "solve", ValueError("boom"))
    generator = ReportGenerator(
        analysis="subject_slice1",
        pair_times=[0.1, 0.2, 0.3],
        residuals=[1e-14, 3e-13],
        errors=[{"pair": "2-3", "t0": 2, "stage": "solve", "error": "ValueError: boom", "exception": error}],
        start_time=datetime.now(),
        reports_dir=tmp_path / "reports",
        extra={"n_sectors": 16},
    )
    generator.generate_all_reports()

    metrics = json.loads((tmp_path / "reports" / "run_metrics.json").read_text(encoding="utf-8"))
    assert metrics["analysis"] == "subject_slice1"
    assert metrics["pairs_succeeded"] == 3
    assert metrics["pairs_failed"] == 1
    assert metrics["errors_by_stage"] == {"solve": 1}
    assert metrics["max_relative_residual"] == 3e-13
    assert metrics["n_sectors"] == 16
    assert metrics["git_commit"]

    summary = (tmp_path / "reports" / "run_summary.md").read_text(encoding="utf-8")
    assert summary.startswith("# Run Summary: subject_slice1")
    assert "`2-3` (solve): ValueError: boom" in summary


def test_empty_run(tmp_path):
    ReportGenerator("empty", [], [], [], datetime.now(), reports_dir=tmp_path).generate_all_reports()
    metrics = json.loads((tmp_path / "run_metrics.json").read_text(encoding="utf-8"))
    assert metrics["p95_pair_seconds"] == 0
    assert metrics["max_relative_residual"] is None
