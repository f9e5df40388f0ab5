class BoolMinError(Exception):
    """Base class for every error raised by the library."""


class ConfigError(BoolMinError):
    pass


class FormulaSyntaxError(BoolMinError):
    def __init__(self, message: str, column: int):
        super().__init__(f"{message} (column {column})")
        self.column = column


class UnboundVariableError(BoolMinError):
    def __init__(self, name: str):
        super().__init__(f"Variable '{name}' has no value in the assignment")
        self.name = name


class VariableCapExceeded(BoolMinError):
    pass


class EmptySpaceError(BoolMinError):
    pass


class DimacsFormatError(BoolMinError):
    pass


class SolverTimeout(BoolMinError):
    def __init__(self, elapsed: float):
        super().__init__(f"Time budget exhausted after {elapsed:.3f}s")
        self.elapsed = elapsed


class ExternalSolverError(BoolMinError):
    pass


class SolverSpawnError(ExternalSolverError):
    pass


class SolverProtocolError(ExternalSolverError):
    pass


class SolverOutputError(ExternalSolverError):
    pass


class ModelVerificationError(BoolMinError):
    pass


class ExpansionCapExceeded(BoolMinError):
    pass


class MissingOuterModelError(BoolMinError):
    pass


class InconsistentModelError(BoolMinError):
    pass


class UnsoundResultError(BoolMinError):
    pass


class BenchFormatError(BoolMinError):
    pass
