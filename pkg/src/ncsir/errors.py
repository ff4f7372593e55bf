"""Exception hierarchy shared by the solver, optimizer and CLI."""


class NcsirError(Exception):
    """Base class for all package errors."""


class SolverError(NcsirError):
    """A forward, adjoint or linear solve failed."""

    def __init__(self, message, time_index=None):
        if time_index is not None:
            message = f"{message} (time index {time_index})"
        super().__init__(message)
        self.time_index = time_index


class NonConvergence(SolverError):
    pass


class StateNegative(SolverError):
    pass


class AdjointBlowup(SolverError):
    pass


class MisalignedTrajectories(NcsirError, ValueError):
    pass


class InfeasiblePerturbation(NcsirError, ValueError):
    pass


class DomainError(NcsirError, ValueError):
    pass


class ConfigError(NcsirError):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError, ValueError):
    def __init__(self, field, constraint):
        super().__init__(f"{field}: must satisfy {constraint}")
        self.field = field
        self.constraint = constraint


class UnknownPreset(ConfigError, KeyError):
    def __init__(self, name, available):
        super().__init__(f"unknown preset {name!r}; available: {', '.join(available)}")
        self.name = name
        self.available = tuple(available)

    def __str__(self):
        return self.args[0]


class IoError(NcsirError, OSError):
    pass
