"""Exception types shared across the package."""


class FlexdesignError(Exception):
    """Base class for errors raised by this package."""


class InvalidInstanceError(FlexdesignError, ValueError):
    """A production system or instance file is malformed or inconsistent."""


class InvalidInputError(FlexdesignError, ValueError):
    """An argument is outside its documented domain."""


class TooLargeError(FlexdesignError, ValueError):
    """An exact enumeration was requested beyond the configured size cap."""


class BoundViolationError(FlexdesignError, AssertionError):
    """A Monte Carlo estimate fell below an analytic lower bound by more
    than the allowed sampling slack."""
