"""
Process-tact equations, measured tact and timetables.
"""

from .equations import (
    TactArityError, TactTerms, decompose_tact, decompose_tact_ticks, process_tact_general,
    process_tact_general_ticks, process_tact_single, to_seconds,
)
from .timetable import (
    Activity, Exchange, NotCompletedError, Timetable, TimetableError, TimetableRow,
    arms_used, build_timetable, chamber_resource, find_exchanges, glass_tact_terms,
    measured_tact, write_timetable_csv, write_timetable_svg, ROBOT,
)

__all__ = [
    'TactArityError', 'TactTerms', 'decompose_tact', 'decompose_tact_ticks',
    'process_tact_general', 'process_tact_general_ticks', 'process_tact_single',
    'to_seconds', 'Activity', 'Exchange', 'NotCompletedError', 'Timetable',
    'TimetableError', 'TimetableRow', 'arms_used', 'build_timetable', 'chamber_resource',
    'find_exchanges', 'glass_tact_terms', 'measured_tact', 'write_timetable_csv',
    'write_timetable_svg', 'ROBOT',
]
