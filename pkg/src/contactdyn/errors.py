"""Exception hierarchy shared by all modules."""


class ContactDynError(Exception):
    """Base class for every error raised by the package."""


class NumericalError(ContactDynError):
    """Failures of a numerical computation (CLI exit code 3)."""


class ValidationError(ContactDynError, ValueError):
    """Bad input or configuration (CLI exit code 2)."""


class DomainError(ValidationError):
    pass


class PoleSingularity(DomainError):
    """A Hopf chart point lies inside the excluded pole margin."""


class PoleCrossing(NumericalError):
    """A trajectory entered the Hopf pole margin during integration."""


class StepExplosion(NumericalError):
    """The integrated state left the bounded region |state| <= 1e8."""


class ResolutionTooCoarse(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, position=None, text=None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UnknownIdentifier(ParseError):
    pass


class SingularSystem(NumericalError):
    pass


class NotContact(NumericalError):
    pass


class ManifoldMismatch(ValidationError):
    pass


class FlowQueryFailure(NumericalError):
    pass


class NotInvertible(NumericalError):
    pass


class NotMonotone(ValidationError):
    pass


class CutoffTooTight(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class NotBasicWarning(UserWarning):
    """Raised as a warning when a length is computed for a non-basic field."""
