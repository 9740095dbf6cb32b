"""Exception types.  Each carries the location data needed to act on it."""
from __future__ import annotations


class BundleLinkError(Exception):
    """Base class for all library errors."""


class SpecError(BundleLinkError, ValueError):
    """Malformed curve / bundle specification."""


class RankDeficiencyError(BundleLinkError):
    """Gram-Schmidt residual fell below tolerance (degenerate curve point)."""

    def __init__(self, message: str, index: int | None = None, t: float | None = None,
                 residual: float | None = None):
        super().__init__(message)
        self.index = index
        self.t = t
        self.residual = residual


class RegularityError(BundleLinkError):
    """A regularity hypothesis fails; ``t`` and ``s`` locate the violation."""

    def __init__(self, message: str, t: float | None = None, s: float | None = None,
                 margin: float | None = None):
        loc = []
        if t is not None:
            loc.append(f"t={t:.6g}")
        if s is not None:
            loc.append(f"s={s:.6g}")
        if loc:
            message = f"{message} at ({', '.join(loc)})"
        super().__init__(message)
        self.t = t
        self.s = s
        self.margin = margin


class TransversalityError(BundleLinkError):
    """A root of an intersection system has a near-singular Jacobian."""

    def __init__(self, message: str, location=None, jacobian_det: float | None = None):
        super().__init__(message)
        self.location = location
        self.jacobian_det = jacobian_det


class ResidualError(BundleLinkError):
    """A raw invariant is too far from an integer to be rounded."""

    def __init__(self, message: str, raw: float, residual: float):
        super().__init__(message)
        self.raw = raw
        self.residual = residual


class UnstableLimitError(BundleLinkError):
    """Push-off linking numbers disagree between successive offsets."""

    def __init__(self, message: str, raws: dict):
        super().__init__(message)
        self.raws = raws


class CrossValidationError(BundleLinkError):
    """Two evaluation routes for the same quantity disagree."""


class RootCountError(BundleLinkError):
    """Root sets differ between seed resolutions."""
