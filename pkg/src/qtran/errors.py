"""Exception taxonomy.

Three coarse categories drive the command-line exit codes (CONFIG, NUMERIC,
IO); the concrete classes below name the specific failure so library users
can catch precisely.
"""


class QtranError(Exception):
    """Base class for all package errors."""

    category = "NUMERIC"


class ConfigError(QtranError):
    """Invalid input: model parameters, profiles, or configuration files."""

    category = "CONFIG"


class NumericError(QtranError):
    """A numerical procedure failed to meet its contract."""

    category = "NUMERIC"


class QtranIOError(QtranError):
    """Filesystem or serialization failure."""

    category = "IO"


# --- configuration-level problems ---

class ParseError(ConfigError):
    """Config document is not syntactically valid."""


class ValidationError(ConfigError):
    """Config document parsed but violates an invariant."""


class NegativeLinewidth(ConfigError):
    """A lead line-width parameter was negative."""


class OutOfTableRange(ConfigError):
    """A tabulated profile was evaluated outside its abscissa range."""


class JumpDiscontinuity(ConfigError):
    """A tabulated profile with a jump was given where continuity is required."""


class DimensionTooLarge(ConfigError):
    """The assembled full system exceeds the supported size."""


# --- numerical problems ---

class NonDiagonalizable(NumericError):
    """Eigenvector matrix is too ill-conditioned to trust."""


class SpectrumOnAxis(NumericError):
    """An eigenvalue sits on (or above) the real axis where a contour integral
    requires strictly negative imaginary parts."""


class KernelNonConvergent(NumericError):
    """The scalar exponential-integral kernel failed to converge."""


class SingularResolvent(NumericError):
    """(eps - h + i*Lambda) is singular at the requested energy."""


class QuadratureNotConverged(NumericError):
    """Adaptive quadrature did not reach the requested tolerance."""


class GridTooCoarse(NumericError):
    """An energy grid is too coarse for the requested accuracy."""


class DegenerateSpectrum(NumericError):
    """An eigenvalue coincides with a principal-value singularity."""


class DegenerateFermiLevel(NumericError):
    """A single-particle level sits exactly at the chemical potential."""


class StateCorrupt(NumericError):
    """Density-matrix eigenvalues left the physical window."""


class NonFinite(NumericError):
    """NaN or Inf appeared during propagation."""


class NotPSD(NumericError):
    """A matrix required to be positive semidefinite is not."""


class NotPSDWarning(UserWarning):
    """Warning-level counterpart of NotPSD for constructors that tolerate
    small negative eigenvalues."""
