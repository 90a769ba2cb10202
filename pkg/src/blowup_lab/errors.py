"""Exception hierarchy shared by all modules.

Every error carries an optional ``path`` naming the offending parameter so the
command-line harness can report it verbatim.
"""


class BlowupLabError(Exception):
    """Base class. ``contract`` errors map to exit code 2 in the CLI."""

    contract = True

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message)
        self.path = path

    def __str__(self):
        msg = super().__str__()
        return f"{self.path}: {msg}" if self.path else msg


class NotSuperlinear(BlowupLabError):
    pass


class KellerOssermanFails(BlowupLabError):
    pass


class OutOfRange(BlowupLabError):
    pass


class InvalidLaw(BlowupLabError):
    pass


class CapNotReached(BlowupLabError):
    pass


class BlowupInsideInterval(BlowupLabError):
    pass


class NonMonotonePerturbation(BlowupLabError):
    pass


class BadWindow(BlowupLabError):
    pass


class BadExponent(BlowupLabError):
    pass


class FixedPointDiverged(BlowupLabError):
    def __init__(self, message: str, history=None, path: str | None = None):
        super().__init__(message, path)
        self.history = list(history or [])


class TemplateMismatch(BlowupLabError):
    pass


class NewtonStalled(BlowupLabError):
    def __init__(self, message: str, damping_trace=None, path: str | None = None):
        super().__init__(message, path)
        self.damping_trace = list(damping_trace or [])


class NonConvergedGrid(BlowupLabError):
    pass


class DominationFailed(BlowupLabError):
    pass


class InsufficientDecade(BlowupLabError):
    pass


class SampleOnSingularSet(BlowupLabError):
    pass


class ConfigError(BlowupLabError):
    """Malformed or unknown configuration; a usage error (exit code 1)."""

    contract = False


class ContractViolation(BlowupLabError):
    """A run finished but one of its post-conditions failed."""

    def __init__(self, message: str, failures=None, path: str | None = None):
        super().__init__(message, path)
        self.failures = list(failures or [])
