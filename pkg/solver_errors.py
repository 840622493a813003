"""
Exception hierarchy for the temporal constraint toolkit.

Semantic negatives (UNSAT, not closed, infeasible) are returned as results;
only malformed input and exceeded limits raise.
"""


class TemporalSolverError(Exception):
    """Base class for every error raised by the toolkit."""


class ArityCapExceeded(TemporalSolverError):
    def __init__(self, arity: int, cap: int):
        super().__init__(f"arity {arity} exceeds the configured cap of {cap}")
        self.arity = arity
        self.cap = cap


class FormulaSyntaxError(TemporalSolverError):
    """Malformed formula text; `position` is the 0-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnboundVariableError(TemporalSolverError):
    def __init__(self, variable: str):
        super().__init__(f"variable '{variable}' has no value")
        self.variable = variable


class InstanceError(TemporalSolverError):
    """Problem in an instance file; `line` is 1-based when known."""

    def __init__(self, message: str, line: int = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class NotNearAffineError(TemporalSolverError):
    pass


class LanguageNotSupported(TemporalSolverError):
    pass


class OracleCapExceeded(TemporalSolverError):
    pass
