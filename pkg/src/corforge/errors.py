"""Exception hierarchy shared by every corforge module.

The CLI maps each class onto an exit code through ``EXIT_CODE``.
"""


class CorforgeError(Exception):
    """Base class for all library errors."""

    exit_code = 2


class NonTerminatingSeries(CorforgeError):
    """An adjoint series e^A B e^-A did not vanish within ``max_depth`` terms."""


class Overflow(CorforgeError):
    """A matrix exponential left the representable floating-point range."""


class SingularFactor(CorforgeError):
    """A Dyson factor could not be evaluated or inverted."""


class EigensolverFailure(CorforgeError):
    """LAPACK did not converge."""


class StepRejection(CorforgeError):
    """The adaptive integrator could not meet its tolerance."""


class ZeroNorm(CorforgeError):
    """A physical overlap <<psi|psi> vanished."""


class DomainError(CorforgeError):
    """A model parameter left its admissible domain (e.g. sigma(t) <= 0)."""


class ParseError(CorforgeError):
    """Malformed scenario JSON or coefficient expression."""

    exit_code = 1

    def __init__(self, message, line=None, token=None):
        self.line = line
        self.token = token
        where = []
        if line is not None:
            where.append(f"line {line}")
        if token is not None:
            where.append(f"token {token!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ValidationError(CorforgeError):
    """A scenario is well formed but inconsistent; ``field`` names the culprit."""

    exit_code = 1

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class VerificationFailure(CorforgeError):
    """At least one invariant residual exceeded its tolerance."""

    exit_code = 3
