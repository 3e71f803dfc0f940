"""
Training metrics and glass outcome ledgers.
"""

from .collector import METRIC_COLUMNS, IterationMetrics, MetricsCollector, read_metrics_csv
from .ledger import OutcomeLedger, OutcomeMetrics, outcome_of

__all__ = [
    'METRIC_COLUMNS',
    'IterationMetrics',
    'MetricsCollector',
    'read_metrics_csv',
    'OutcomeLedger',
    'OutcomeMetrics',
    'outcome_of',
]
