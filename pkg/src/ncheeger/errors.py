"""Exception types raised across the package.

Every error carries a plain-English message; the CLI maps any of these to
exit code 2 with the message on stderr.
"""


class NCheegerError(Exception):
    """Base class for all package errors."""


class EmptyDomain(NCheegerError):
    """Rasterization produced no inside pixels."""


class TooFewPixels(NCheegerError):
    """Region too small to solve on (needs at least one pixel, and a
    meaningful perimeter/area quotient needs a few)."""


class OverlapError(NCheegerError):
    """Chamber masks overlap where a partition was required."""


class MaxIterExceeded(NCheegerError):
    """An iterative solver hit its iteration cap before converging."""


class NotConvex(NCheegerError):
    """Shape passed to the convex-domain formula is not supported as convex."""


class TooShort(NCheegerError):
    """Polyline has too few vertices for a stable arc fit."""


class NonMonotoneInput(NCheegerError):
    """A quantity that must increase with N failed to (bad bracket input)."""


class NonConvergence(NCheegerError):
    """Eigenvalue iteration failed to reach the requested tolerance."""


class ChamberVanished(NCheegerError):
    """A sweep step returned an empty chamber, leaving fewer than N parts."""
