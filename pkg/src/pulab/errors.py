"""Exception taxonomy shared across the package.

Every failure mode that callers are expected to branch on gets its own class;
the CLI maps them onto process exit codes (see cli.py).
"""


class PulabError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(PulabError):
    """Invalid or inconsistent user-supplied configuration."""


class DegenerateModes(PulabError):
    """The characteristic function has (numerically) a double zero.

    Raised instead of silently returning ill-conditioned residues; the
    degenerate parameter set is outside the supported domain.
    """


class ContourMiss(PulabError):
    """Argument-principle zero count disagrees with the roots found.

    Indicates the search grid was too coarse or the contour passes too close
    to a zero. The message carries both counts.
    """


class PoleHit(PulabError):
    """A partial-fraction evaluation point coincides with a stored pole."""


class AccuracyLoss(PulabError):
    """A special-function evaluation cannot certify its accuracy target.

    Raised when the series/asymptotic cross-validation disagrees beyond
    tolerance or when an internal error estimate exceeds it. Reported, never
    silent.
    """


class CausticError(PulabError):
    """Closed-form oscillator kernel evaluated at a focusing time."""


class FresnelError(PulabError):
    """Gaussian kernel composition with a non-integrable quadratic phase."""


class OverflowGuard(PulabError):
    """An exponential argument exceeds the floating-point safe range."""


class TailDominanceWarning(UserWarning):
    """A windowed Fourier integral's discarded tail is not negligible.

    Emitted (not raised) when the estimated contribution beyond the time
    cutoff exceeds 1% of the integral itself.
    """


class BoundaryContamination(UserWarning):
    """Wavefunction mass has reached the edge cells of a finite grid.

    Emitted (not raised) when the relative mass in the outermost cell layer
    exceeds 1e-8: beyond that point a Dirichlet box no longer mimics the
    infinite line and reflections poison the run.
    """
