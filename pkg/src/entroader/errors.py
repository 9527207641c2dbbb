"""Exception types shared across the solver."""


class SolverError(Exception):
    """Base class for all solver-raised errors."""


class StateError(SolverError):
    """An inadmissible physical state was encountered.

    Carries the offending component name (e.g. "h", "rho", "p") so the
    driver can report what went negative before rejecting the step.
    """

    def __init__(self, component, message=None):
        self.component = component
        super().__init__(message or f"inadmissible state: {component}")


class TopologyError(SolverError):
    """Mesh connectivity is inconsistent (dangling face, bad ids)."""


class DegenerateCellError(SolverError):
    """A cell is too distorted for its mass matrix to be SPD."""


class CapabilityError(SolverError):
    """A requested feature/degree is outside what this build supports."""


class RelaxationFailureError(SolverError):
    """No admissible relaxation root was found in the search interval."""


class RunAbortError(SolverError):
    """The time loop exhausted its retry budget; carries last-good data."""

    def __init__(self, message, diagnostics=None, state=None):
        self.diagnostics = diagnostics
        self.state = state
        super().__init__(message)


class ConfigError(SolverError):
    """Malformed run configuration; carries a line/field diagnostic."""
