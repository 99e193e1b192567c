"""
Report persistence.

Writes a run's ``report.json`` summary, one ``hist_<kind>.csv`` and one
``cdf_<kind>.csv`` per event kind, and optionally the raw ``events.csv``
stream. Output bytes depend only on the report contents.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from src.analytics.metrics import EventKind, MetricsCollector
from src.utils.errors import InputFileError, ReportIOError, SchemaMismatchError
from src.utils.logger import get_logger
from src.workflow.state import SCHEMA_VERSION, RunReport

logger = get_logger(__name__)

REPORT_FILE = "report.json"
EVENTS_FILE = "events.csv"
HISTOGRAM_COLUMNS = ["bin_start_ns", "bin_end_ns", "count", "fraction"]
CDF_COLUMNS = ["latency_ns", "cumulative_fraction"]


class ReportWriter:
    """Writes RunReport files into one output directory."""

    def __init__(self, output_dir: str):
        self.output_dir = Path(output_dir)

    def _prepare(self):
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ReportIOError(f"cannot create output directory {self.output_dir}: {e}") from e

    def write(self, report: RunReport, collector: Optional[MetricsCollector] = None,
              emit_events: bool = False) -> List[Path]:
        """
        Write every report file and return their paths.

        Raises:
            ReportIOError: Any file could not be written
        """
        self._prepare()
        written = []
        try:
            summary_path = self.output_dir / REPORT_FILE
            with open(summary_path, "w") as f:
                json.dump(report.model_dump(mode="json"), f, indent=2, sort_keys=True)
                f.write("\n")
            written.append(summary_path)

            for kind in EventKind:
                hist_path = self.output_dir / f"hist_{kind.file_stem}.csv"
                pd.DataFrame(report.histograms.get(kind.value, []), columns=HISTOGRAM_COLUMNS).to_csv(
                    hist_path, index=False
                )
                cdf_path = self.output_dir / f"cdf_{kind.file_stem}.csv"
                pd.DataFrame(report.cdfs.get(kind.value, []), columns=CDF_COLUMNS).to_csv(cdf_path, index=False)
                written.extend([hist_path, cdf_path])
        except OSError as e:
            raise ReportIOError(f"cannot write report files in {self.output_dir}: {e}") from e

        if emit_events and collector is not None:
            events_path = self.output_dir / EVENTS_FILE
            collector.write_events_csv(str(events_path))
            written.append(events_path)

        logger.info(f"Report written to {self.output_dir} ({len(written)} files)")
        return written


def load_report(path: str) -> Dict[str, Any]:
    """
    Read a ``report.json`` (or the directory holding one).

    Raises:
        InputFileError: File missing or not JSON
        SchemaMismatchError: Schema version differs from this build
    """
    report_path = Path(path)
    if report_path.is_dir():
        report_path = report_path / REPORT_FILE
    if not report_path.is_file():
        raise InputFileError(f"report not found: {report_path}")
    try:
        with open(report_path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InputFileError(f"cannot read report {report_path}: {e}") from e

    if not isinstance(data, dict) or data.get("schema_version") != SCHEMA_VERSION:
        found = data.get("schema_version") if isinstance(data, dict) else None
        raise SchemaMismatchError(f"{report_path}: schema_version {found}, expected {SCHEMA_VERSION}")
    return data
