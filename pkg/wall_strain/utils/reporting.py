import json
import logging
import uuid
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import git
import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def get_git_commit_hash() -> str:
    """Short hash of the checked-out commit, or "nogit" outside a repository."""
    try:
        repo = git.Repo(search_parent_directories=True)
        return repo.head.object.hexsha[:7]
    except (git.InvalidGitRepositoryError, git.NoSuchPathError, ValueError):
        return "nogit"


class NumpyJSONEncoder(json.JSONEncoder):
    """Serializes numpy scalars and arrays as plain JSON values."""

    def default(self, obj):
        if isinstance(obj, np.generic):
            return obj.item()
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        return super().default(obj)


class ReportGenerator:
    """Run metadata (timings, residuals, failures) for one CLI invocation."""

    def __init__(self, analysis: str, pair_times: List[float], residuals: List[float],
                 errors: List[Dict[str, Any]], start_time: datetime,
                 reports_dir: Union[str, Path] = "./reports", extra: Optional[Dict[str, Any]] = None):
        self.analysis = analysis
        self.pair_times = np.asarray(pair_times, dtype=float)
        self.residuals = residuals
        # the exception objects themselves are not serializable
        self.failures = [{k: v for k, v in e.items() if k != "exception"} for e in errors]
        self.start_time = start_time
        self.end_time = datetime.now()
        self.extra = extra or {}
        self.run_id = f"{analysis}_{start_time:%Y%m%d_%H%M%S}_{uuid.uuid4().hex[:6]}"
        self.reports_dir = Path(reports_dir)
        self.reports_dir.mkdir(parents=True, exist_ok=True)

    @property
    def duration_seconds(self) -> float:
        return round((self.end_time - self.start_time).total_seconds(), 2)

    def pair_time_percentile(self, q: float) -> float:
        if self.pair_times.size == 0:
            return 0.0
        return round(float(np.percentile(self.pair_times, q)), 3)

    def metrics(self) -> Dict[str, Any]:
        by_stage = {}
        if self.failures:
            by_stage = pd.DataFrame(self.failures).groupby("stage").size().to_dict()
        return {
            "run_id": self.run_id,
            "analysis": self.analysis,
            "git_commit": get_git_commit_hash(),
            "started": self.start_time.isoformat(),
            "finished": self.end_time.isoformat(),
            "duration_seconds": self.duration_seconds,
            "pairs_succeeded": int(self.pair_times.size),
            "pairs_failed": len(self.failures),
            "p50_pair_seconds": self.pair_time_percentile(50),
            "p95_pair_seconds": self.pair_time_percentile(95),
            "max_relative_residual": max(self.residuals) if self.residuals else None,
            "errors_by_stage": by_stage,
            **self.extra,
        }

    def generate_all_reports(self):
        metrics = self.metrics()
        with open(self.reports_dir / "run_metrics.json", "w", encoding="utf-8") as f:
            json.dump(metrics, f, indent=4, cls=NumpyJSONEncoder)

        lines = [
            f"# Run Summary: {self.analysis}",
            "",
            f"- **Run ID:** `{self.run_id}`",
            f"- **Git Commit:** `{metrics['git_commit']}`",
            f"- **Duration:** `{self.duration_seconds} seconds`",
            f"- **Frame Pairs Solved:** `{metrics['pairs_succeeded']}`",
            f"- **Failed Pairs:** `{metrics['pairs_failed']}`",
            f"- **p95 Pair Time:** `{metrics['p95_pair_seconds']} seconds`",
        ]
        if metrics["max_relative_residual"] is not None:
            lines.append(f"- **Max Relative Residual:** `{metrics['max_relative_residual']:.3e}`")
        lines += [f"- **{key}:** `{value}`" for key, value in self.extra.items()]
        if self.failures:
            lines += ["", "## Failed Pairs", ""]
            lines += [f"- `{f['pair']}` ({f['stage']}): {f['error']}" for f in self.failures]

        with open(self.reports_dir / "run_summary.md", "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")
        logger.info(f"Run reports written to {self.reports_dir}")
