# src/vortexlab/errors.py

"""
Exception hierarchy for vortexlab.

Every error that should end a command-line run carries the process exit code
it maps to, so ``main.py`` can turn it into a machine-readable error object.
"""


class VortexLabError(Exception):
    """Base class for all errors raised deliberately by vortexlab."""

    exit_code: int = 1


# --- Configuration (exit 2) ---

class ConfigError(VortexLabError):
    """Invalid, unknown or inconsistent configuration values."""

    exit_code = 2


# --- Solver failures (exit 3) ---

class SolverError(VortexLabError):
    """A numerical pipeline could not produce a trustworthy result."""

    exit_code = 3


class EigenSolverError(SolverError):
    """ARPACK did not converge (or returned too few eigenpairs)."""


class NearDefectiveError(SolverError):
    """The pair u1, u2 is too close to the collision point for the normal form."""


class UnsupportedPointError(SolverError):
    """Parameter point outside the supercritical Hopf regime."""


class InvalidBracketError(SolverError):
    """The I_c bisection bracket does not straddle the collision."""


class RefinementNeeded(SolverError):
    """Branch matching lost continuity between two sweep values."""

    def __init__(self, lower: float, upper: float, overlap: float) -> None:
        super().__init__(
            f"eigenfunction overlap {overlap:.3f} between {lower:g} and {upper:g} "
            f"is below the matching threshold; refine the sweep in this interval"
        )
        self.lower = lower
        self.upper = upper
        self.overlap = overlap


class BlowUpError(SolverError):
    """The TDGL state left the physically admissible amplitude range."""


class TrackingError(SolverError):
    """Snapshots too far apart in time to link vortices reliably."""


class NormalizationError(SolverError):
    """u1(0,0) vanishes, so the centre-line phase cannot be anchored."""


# --- Cross-validation (exit 4) ---

class ValidationMismatch(VortexLabError):
    """The reduced theory and the full simulation disagree beyond tolerance."""

    exit_code = 4
