"""Exception types shared across the package."""


class DuowaveError(Exception):
    """Base class for all duowave errors."""


class NotSingleMode(DuowaveError):
    """Geometry supports more than one guided mode per isolated waveguide."""


class NoRootBracket(DuowaveError):
    """Sign scan found no bracket for a root that theory guarantees."""


class RootFindingFailed(DuowaveError):
    """Root enumeration of a dispersion relation failed; carries diagnostics."""


class GammaAtBranchPoint(DuowaveError):
    """Continuum spectral parameter hit an excluded branch point (0 or k^2)."""


class QuadratureNotConverged(DuowaveError):
    """Adaptive quadrature failed to meet the requested tolerance."""


class DomainError(DuowaveError):
    """Arguments violate an analytic-domain precondition."""


class GridTooCoarse(DuowaveError):
    """Sampling step does not resolve the correlation length."""


class DomainTooShort(DuowaveError):
    """Synthesis domain is shorter than the mixing requirement."""


class FlatSpectrum(DuowaveError):
    """Power spectral density vanishes at zero wavenumber; ratio undefined."""


class StepTooCoarse(DuowaveError):
    """Integration step under-resolves phase or correlation scales."""


class GridMismatch(DuowaveError):
    """Trajectories do not share a common range grid."""


class BadCoefficientTable(DuowaveError):
    """Coupling table violates the zero-row-sum conservation structure."""
