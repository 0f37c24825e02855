"""Exception hierarchy shared across the package."""


class AdversarialHTError(Exception):
    """Base class for all errors raised by this package."""


class AlphabetMismatchError(AdversarialHTError, ValueError):
    pass


class InvalidRatioError(AdversarialHTError, ValueError):
    pass


class InvalidPmfError(AdversarialHTError, ValueError):
    pass


class InfeasibleTransportError(AdversarialHTError, ValueError):
    pass


class EnumerationTooLargeError(AdversarialHTError, RuntimeError):
    """Raised when an exhaustive enumeration would exceed its configured cap."""

    def __init__(self, size, cap, what="types"):
        self.size = size
        self.cap = cap
        super().__init__(f"enumerating {size} {what} exceeds the cap of {cap}")


class ConvergenceError(AdversarialHTError, RuntimeError):
    """Raised when a numerical optimizer fails; ``iterates`` holds the last known state."""

    def __init__(self, message, iterates=None):
        self.iterates = iterates or {}
        super().__init__(f"{message}; last iterates: {self.iterates}")
