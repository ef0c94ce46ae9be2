class BergmanException(Exception):
    """
    Base class for custom exceptions.
    """
    def __init__(self, message: str | None = None) -> None:
        super().__init__(message)


class OptionError(BergmanException):
    """
    Class for errors related to options and command-line usage.
    """


class DomainError(BergmanException, ValueError):
    """
    An argument lies outside the domain where the quantity is defined,
    e.g. a non-positive vertical coordinate or a weight that is not
    suitable at the evaluation point.
    """


class ConvergenceError(BergmanException):
    """
    Some quadrature did not reach the requested tolerance within its node
    cap. Results are still written; the exit status reports the failure.
    """


class VerificationError(BergmanException):
    """
    One or more checks of the verification suite failed.
    """
