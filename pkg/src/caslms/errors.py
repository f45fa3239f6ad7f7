"""Shared exception types.

The CLI maps these onto process exit codes: config problems exit 2,
evaluator (child process) problems exit 3, numerical failures exit 4.
"""


class InputError(ValueError):
    """A caller-supplied value violates a documented precondition."""


class ConfigError(ValueError):
    """A run or compare config file failed schema validation."""


class NumericalError(RuntimeError):
    """A linear-algebra step failed beyond what jitter escalation can absorb."""


class EvaluatorError(RuntimeError):
    """An objective evaluator misbehaved (timeout, malformed reply, crash).

    When raised from inside a search loop the exception carries whatever
    observations were completed before the failure on ``history`` so the
    caller can persist the partial run.
    """

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = history
