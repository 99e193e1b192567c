"""
Side-by-side comparison of two run reports.
"""

from typing import Any, Dict, Optional

from src.utils.errors import SchemaMismatchError

LATENCY_FIELDS = ("mean", "stddev", "p50", "p99")
REQUIRED_SECTIONS = ("schema_version", "latency", "counts", "total_cycles")


def _ratio(a: float, b: float) -> Optional[float]:
    if b == 0:
        return 1.0 if a == 0 else None
    return a / b


def _flatten(report: Dict[str, Any]) -> Dict[str, float]:
    metrics = {"total_cycles": report["total_cycles"]}
    if report.get("cycles_per_instruction") is not None:
        metrics["cycles_per_instruction"] = report["cycles_per_instruction"]
    for name, value in report["counts"].items():
        metrics[f"counts.{name}"] = value
    for kind, summary in report["latency"].items():
        for field in LATENCY_FIELDS:
            metrics[f"latency.{kind}.{field}"] = summary[field]
    return metrics


def compare_reports(a: Dict[str, Any], b: Dict[str, Any]) -> Dict[str, Dict[str, Optional[float]]]:
    """
    Per-metric values, delta (a - b) and ratio (a / b) of two reports.

    Raises:
        SchemaMismatchError: Reports of different schema versions or missing sections
    """
    for name, report in (("A", a), ("B", b)):
        missing = [section for section in REQUIRED_SECTIONS if section not in report]
        if missing:
            raise SchemaMismatchError(f"report {name} lacks {missing}")
    if a["schema_version"] != b["schema_version"]:
        raise SchemaMismatchError(
            f"schema versions differ: {a['schema_version']} vs {b['schema_version']}"
        )

    flat_a, flat_b = _flatten(a), _flatten(b)
    comparison = {}
    for metric in sorted(set(flat_a) & set(flat_b)):
        value_a, value_b = flat_a[metric], flat_b[metric]
        comparison[metric] = {
            "a": value_a,
            "b": value_b,
            "delta": value_a - value_b,
            "ratio": _ratio(value_a, value_b),
        }
    return comparison
