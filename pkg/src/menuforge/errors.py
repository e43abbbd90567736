"""Exception hierarchy.

Validation problems derive from :class:`ValidationError` (CLI exit code 2),
resource caps from :class:`BudgetError` (CLI exit code 3).
"""


class MenuforgeError(Exception):
    pass


class ValidationError(MenuforgeError, ValueError):
    pass


class LengthMismatch(ValidationError):
    pass


class InvalidK(ValidationError):
    pass


class InvalidDistribution(ValidationError):
    pass


class ModeClassMismatch(ValidationError):
    pass


class BoundednessViolated(ValidationError):
    pass


class NonMonotoneCoupling(ValidationError):
    pass


class UnsupportedClass(ValidationError):
    pass


class DegenerateInstance(ValidationError):
    pass


class DegenerateInput(ValidationError):
    pass


class NegativeMass(ValidationError):
    pass


class SeparationFailed(MenuforgeError):
    pass


class BudgetError(MenuforgeError):
    pass


class SupportTooLarge(BudgetError):
    pass


class BudgetExceeded(BudgetError):
    pass


class MenuTooLarge(BudgetError):
    pass


class NumericalFailure(MenuforgeError):
    pass
