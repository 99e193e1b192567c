"""
Run metrics: event collection, latency statistics and report comparison.
"""

from .metrics import EventKind, EventRecord, MetricsCollector

__all__ = ['EventKind', 'EventRecord', 'MetricsCollector']
