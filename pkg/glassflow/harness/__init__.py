"""
Evaluation, split tests and run manifests.
"""

from .evaluation import EvaluationReport, episode_seeds, evaluate, run_episode, write_report
from .manifest import MANIFEST_NAME, RunManifest, file_digest, run_dir_name, verify_manifest
from .split_test import (
    SPLIT_TEST_COLUMNS,
    SplitTestReport,
    SplitTestRow,
    resolve_parameter,
    run_cell,
    run_split_test,
)

__all__ = [
    'EvaluationReport',
    'episode_seeds',
    'evaluate',
    'run_episode',
    'write_report',
    'MANIFEST_NAME',
    'RunManifest',
    'file_digest',
    'run_dir_name',
    'verify_manifest',
    'SPLIT_TEST_COLUMNS',
    'SplitTestReport',
    'SplitTestRow',
    'resolve_parameter',
    'run_cell',
    'run_split_test',
]
