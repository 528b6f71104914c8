"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` for bad inputs
(the CLI maps these to exit code 2) and :class:`NumericalError` for
computations that could not be carried out or breached a tolerance
(exit code 3).
"""

from __future__ import annotations


class IsoLoewnerError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(IsoLoewnerError):
    """Input rejected before any numerics ran."""


class NumericalError(IsoLoewnerError):
    """A computation failed or left its tolerance envelope."""


# algebra
class NotDiagonalizable(NumericalError):
    pass


class ZeroMatrix(NumericalError):
    pass


# loewner
class InvalidSpec(ValidationError):
    pass


class DegenerateConfig(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class Stopped(NumericalError):
    """Raised when stepping a state that already hit a stopping rule."""

    def __init__(self, reason: str | None = None) -> None:
        super().__init__(f"state is stopped ({reason})")
        self.reason = reason


class StepRejected(NumericalError):
    """The swallow guard tripped inside a step; retry with a smaller dt."""


# isomonodromy
class InvalidFamily(ValidationError):
    pass


class PoleHit(NumericalError):
    pass


class ZeroBirkhoff(NumericalError):
    pass


class InvariantViolated(NumericalError):
    pass


class ContourTooClose(NumericalError):
    pass


# confluence
class ZeroRate(ValidationError):
    pass


class IllConditioned(NumericalError):
    pass


class DegenerateFit(NumericalError):
    pass


# martingale / cli
class InvalidConfig(ValidationError):
    pass


class UnknownColumn(ValidationError):
    pass


# verify
class StencilTooCoarse(NumericalError):
    pass


class DegenerateInput(ValidationError):
    pass
