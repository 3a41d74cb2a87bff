"""
Custom exception classes for the querylab simulator.

These exceptions provide more specific error handling and better debugging
information compared to generic Python exceptions.
"""


class QuerylabException(Exception):
    """Base exception class for all querylab-specific errors."""

    pass


class ParameterError(QuerylabException, ValueError):
    """Raised when an argument lies outside the domain of an operation."""

    def __init__(self, name: str, value, reason: str):
        self.name = name
        self.value = value
        self.reason = reason
        super().__init__(f"Invalid {name}={value!r}: {reason}.")


class InternalConsistencyError(QuerylabException):
    """Raised when an oracle path fails one of its own self-checks."""

    def __init__(self, check: str, detail: str = ""):
        self.check = check
        self.detail = detail
        details = f": {detail}" if detail else ""
        super().__init__(f"Internal consistency check '{check}' failed{details}")


class ContractViolation(QuerylabException):
    """Raised when a routine is called without its precondition holding."""

    def __init__(self, routine: str, condition: str):
        self.routine = routine
        self.condition = condition
        super().__init__(f"{routine} called without precondition: {condition}.")


class TrialCapExceeded(QuerylabException):
    """Raised when a Las Vegas loop runs past its configured cap."""

    def __init__(self, routine: str, cap: int, diagnostic: dict = None):
        self.routine = routine
        self.cap = cap
        self.diagnostic = diagnostic or {}
        super().__init__(
            f"{routine} exceeded its cap of {cap} cycles (state: {self.diagnostic})."
        )


class ConfigurationError(QuerylabException):
    """Raised when an experiment configuration is malformed or inconsistent."""

    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"Bad configuration for '{key}': {reason}.")


class EmptyResults(QuerylabException):
    """Raised when asked to emit an experiment that produced no records."""

    def __init__(self, path: str = None):
        self.path = path
        target = f" to '{path}'" if path else ""
        super().__init__(f"No results to emit{target}.")


class StorageError(QuerylabException):
    """Raised when file system operations fail."""

    def __init__(self, operation: str, path: str, original_error: Exception = None):
        self.operation = operation
        self.path = path
        self.original_error = original_error
        error_details = f": {original_error}" if original_error else ""
        super().__init__(f"Storage error during {operation} at {path}{error_details}")


class PrecisionWarning(UserWarning):
    """Precision alarm: a result was returned but its error bound exceeds the budget."""

    pass
