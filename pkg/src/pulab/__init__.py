"""Numerical laboratory for higher-derivative and delay oscillators.

Modules:

* ``ostrogradsky``: canonical phase-space formulation of the fourth-order
  oscillator, the decoupling map, and classical flow integration.
* ``spectral``: characteristic function of the delay oscillator, mode
  finding by contour counting, residues, and spectrum generators.
* ``special``: Hermite polynomials, parabolic cylinder functions with
  certified accuracy, and the exact eigenfunctions built from them.
* ``propagators``: closed-form quadratic propagators, Trotter products,
  the spectral normalization identity, and the imaginary-time pitfall.
* ``lab``: finite-difference grids, Cayley evolution, generator audits,
  cutoff scans of the growth observable, and the commutator check.
* ``cli``: command-line harness exposing every experiment.
"""

__version__ = "0.1.0"

from .errors import (
    AccuracyLoss,
    BoundaryContamination,
    CausticError,
    ConfigError,
    ContourMiss,
    DegenerateModes,
    FresnelError,
    OverflowGuard,
    PoleHit,
    PulabError,
    TailDominanceWarning,
)
from .params import NonlocalParams, PUParams

__all__ = [
    "__version__",
    "AccuracyLoss",
    "BoundaryContamination",
    "CausticError",
    "ConfigError",
    "ContourMiss",
    "DegenerateModes",
    "FresnelError",
    "NonlocalParams",
    "OverflowGuard",
    "PUParams",
    "PoleHit",
    "PulabError",
    "TailDominanceWarning",
]
