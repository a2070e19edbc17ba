"""
Error hierarchy shared by every stage.

Each class carries the process exit code the CLI maps it to:
  BadInputError        → 2  (malformed input, invalid parameters, support violations)
  NumericalError       → 3  (solver failure, lost immersion, failed gates)
  NoValidQueriesError  → 4  (every degree query invalid at this resolution)

Verdict-style outcomes (crossings, invalid single queries, non-developable)
are report data, not exceptions.
"""


class FlatlabError(Exception):
    exit_code = 1


class BadInputError(FlatlabError, ValueError):
    exit_code = 2


class NumericalError(FlatlabError, ArithmeticError):
    exit_code = 3


class NoValidQueriesError(FlatlabError):
    exit_code = 4


class StageError(FlatlabError):
    """A pipeline stage aborted; keeps the stage name and completed artifacts."""

    def __init__(self, stage: str, cause: Exception, artifacts: dict | None = None):
        self.stage = stage
        self.cause = cause
        self.artifacts = dict(artifacts or {})
        self.exit_code = getattr(cause, "exit_code", 3)
        super().__init__(f"stage '{stage}' failed: {cause}")
