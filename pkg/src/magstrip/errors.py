"""Exception hierarchy.

Every failure mode raised by the library maps onto one of four classes so
the CLI can translate them into distinct exit statuses.
"""


class MagstripError(Exception):
    """Base class for all library errors."""


class InvalidSpecError(MagstripError):
    """A parameter or configuration violates a documented invariant."""


class DomainError(MagstripError):
    """A request falls outside the admissible domain of an operation

    (out-of-strip evaluation, inverse-band argument past the sampled rise,
    window centred at a threshold, window below the first threshold).
    """


class DecayViolationError(MagstripError):
    """A potential does not satisfy the required decay, or lacks a pure
    power tail where one is needed."""


class ConvergenceError(MagstripError):
    """A numerical procedure failed to converge or to stabilise

    (inverse iteration stall, truncation-unstable counts, phase matching
    failure, ambiguous unwrapping anchor).
    """


class FitError(MagstripError):
    """A regression could not be performed (degenerate, sign-mixed, or
    underdetermined data)."""
