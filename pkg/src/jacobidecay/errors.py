"""Exception taxonomy.

Configuration problems (bad parameters, malformed specs) raise plain
``ValueError`` subclasses; genuinely numerical failures carry the
:class:`NumericalFailure` mixin so the CLI can map them to exit code 2.
"""


class JacobiDecayError(Exception):
    """Base class for all package errors."""


class NumericalFailure(JacobiDecayError):
    """A computation failed for numerical reasons (exit code 2 in the CLI)."""


class NonPositiveWeight(JacobiDecayError):
    """A weight rule produced lambda_n <= 0; the model parameters are invalid."""


class IndexOutOfWindow(JacobiDecayError, IndexError):
    """An index fell outside the window a sequence is defined on."""


class NearSingular(NumericalFailure):
    """Real spectral parameter within 1e-10 of the truncated spectrum."""


class UnverifiedTail(NumericalFailure):
    """The weight tail could not be certified; raise the scan horizon."""


class NotUnbounded(NumericalFailure):
    """The weights do not grow without bound, but the operation requires it."""


class Overflow(NumericalFailure):
    """Tracked log-magnitude exceeded the recurrence guard threshold."""


class OutsideGap(JacobiDecayError, ValueError):
    """Spectral parameter not inside the gap window."""


class OutsideHalfLine(JacobiDecayError, ValueError):
    """Spectral parameter not on the required side of the spectrum."""


class BadEpsilon(JacobiDecayError, ValueError):
    """Epsilon outside the admissible open interval."""


class DeltaTooLarge(JacobiDecayError, ValueError):
    """Imaginary offset exceeds one eighth of the gap geometric mean."""


class BetaTooLarge(JacobiDecayError, ValueError):
    """Perturbation strength beta outside the admissible range."""


class OnBlockSpectrum(NumericalFailure):
    """Energy coincides with (or is too close to) a block eigenvalue."""


class LayoutOverlap(JacobiDecayError, ValueError):
    """Barrier intervals violate the separation condition."""


class PhaseNotFound(JacobiDecayError, ValueError):
    """No phase window with the required modulation floor exists."""


class DegenerateBasis(JacobiDecayError, ValueError):
    """Least-squares normal equations are singular."""


class MissingColumn(JacobiDecayError, KeyError):
    """A named CSV column does not exist."""


class ConfigError(JacobiDecayError, ValueError):
    """Experiment configuration is invalid (exit code 1 in the CLI)."""
