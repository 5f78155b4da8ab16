"""Exact-arithmetic toolkit for interval exchange transformations.

Modules
-------
perm
    Labeled permutation pairs, Rauzy moves, class enumeration, and the
    restricted move subgraphs.
induction
    Exact Rauzy-Veech induction, the visitation-matrix cocycle, and orbit
    computation over the rationals.
symplectic
    The permutation's skew form, its exact transport along paths, and the
    reciprocal pairing of restricted singular values.
simplex_geometry
    Projective simplices, volume and Jacobian formulas, plane families,
    polygon sections, and illumination tests.
construction
    Staged freedom/restriction path generation with scaled growth
    schedules, the per-stage balance and angle conditions, and the
    hyperplane-avoiding paths.
analysis
    Monte Carlo verification of the probabilistic lemmas, Birkhoff-average
    measurements, Keane scans, nested plane-section families, and
    dimension estimation.
cli
    Batch command-line frontend with reproducible manifests.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    BudgetExceededError,
    CalibrationError,
    DegeneracyError,
    IetkitError,
    InductionUndefinedError,
    ScheduleError,
    ScheduleOverflowError,
    StageError,
    UsageError,
)
from .perm import (
    LabeledPermutation,
    RauzyClassGraph,
    RauzyEdge,
    hyperelliptic_class,
    hyperelliptic_permutation,
    rauzy_class,
    rauzy_move,
    restriction_subgraph,
    special_permutations,
)
from .induction import (
    Iet,
    InductionTrace,
    VisitationMatrix,
    drive_path,
    induct,
    induct_until,
    orbit,
    step,
)

__all__ = [
    "__version__",
    "BudgetExceededError",
    "CalibrationError",
    "DegeneracyError",
    "IetkitError",
    "InductionUndefinedError",
    "ScheduleError",
    "ScheduleOverflowError",
    "StageError",
    "UsageError",
    "LabeledPermutation",
    "RauzyClassGraph",
    "RauzyEdge",
    "hyperelliptic_class",
    "hyperelliptic_permutation",
    "rauzy_class",
    "rauzy_move",
    "restriction_subgraph",
    "special_permutations",
    "Iet",
    "InductionTrace",
    "VisitationMatrix",
    "drive_path",
    "induct",
    "induct_until",
    "orbit",
    "step",
]
