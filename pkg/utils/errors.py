"""
Exception hierarchy.

Every error raised on purpose by the package derives from MqpError and carries
the process exit code the CLI uses for its category.
"""

from typing import Optional


class MqpError(Exception):
    exit_code = 1


class ConfigError(MqpError):
    """Malformed or semantically invalid experiment configuration."""

    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        self.field = field
        self.line = line
        self.column = column
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}, column {column}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class PhysicsRangeError(MqpError):
    """A parameter outside the range the model is defined for."""

    exit_code = 3


class OracleInvalidError(MqpError):
    """Truncated Fock space no longer represents the state faithfully."""

    exit_code = 4


class ValidationFailure(MqpError):
    exit_code = 5


class EmitError(MqpError):
    exit_code = 6

    def __init__(self, message: str, path: str):
        self.path = path
        super().__init__(f"{message}: {path}")
