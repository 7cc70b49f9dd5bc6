"""Dynamic online packing with bounded amortized migration."""

from .core import (
    Event,
    Item,
    MigrationLedger,
    Placement,
    Solution,
    TraceError,
    ValidationError,
    as_rational,
    depart,
    fmt_rational,
    hypercube,
    hyperrect,
    insert,
    item_size,
    rect2d,
    restrict_solution,
    vector,
    volume,
)
from .framework import MonitorViolation, RobustRunner, StepDiagnostics, combined_bound
from .geometry import Box, boxes_disjoint, contains, validate_packing
from .problems import PROBLEMS, online_algorithm

__version__ = "0.1.0"
