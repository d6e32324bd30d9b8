"""Numerical toolkit for resolvent decay of semi-infinite Jacobi matrices.

Evaluates certified exponential decay envelopes for resolvent matrix
elements at spectral parameters off the spectrum, verifies them against
computed resolvent columns, fits the exact asymptotics of two sharp
model families, and runs the many-barriers / mobility-edge experiment
pipeline built on top of the envelopes.
"""

from .errors import (
    BadEpsilon,
    BetaTooLarge,
    ConfigError,
    DegenerateBasis,
    DeltaTooLarge,
    IndexOutOfWindow,
    JacobiDecayError,
    LayoutOverlap,
    MissingColumn,
    NearSingular,
    NonPositiveWeight,
    NotUnbounded,
    NumericalFailure,
    OnBlockSpectrum,
    OutsideGap,
    OutsideHalfLine,
    Overflow,
    PhaseNotFound,
    UnverifiedTail,
)
from .models import (
    BarrierComposite,
    BarrierLayout,
    Constant,
    Example1,
    Example2,
    ModelSpec,
    PowerModulated,
    PowerPeriodic,
    Table,
    TridiagonalSlice,
    apply_operator,
    carleman_sum,
    flip_slice,
    has_zero_diagonal,
    rank_one_perturb,
    register_phi,
    sample_operator,
    spec_from_json,
    spec_to_json,
    truncate,
    weight_lower_bound_from,
)
from .tridiag import (
    ResolventColumn,
    SpectrumQuery,
    distance_to_spectrum,
    eigs_in_window,
    resolvent_column,
    sturm_count,
    sturm_counts,
    tridiag_norm_bound,
)

__version__ = "0.1.0"
