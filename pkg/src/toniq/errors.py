"""Exception taxonomy.

Each class maps to one CLI exit code (see `toniq.cli`): validation errors
exit 2, scoring-context errors 3, runtime/run-budget errors 4, I/O errors 5.
"""


class ToniqError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ToniqError):
    """Invalid argument: bad dimension, out-of-range value, unsupported key."""


class CapacityError(ValidationError):
    """A size limit was exceeded (enumeration bound, qubit count)."""


class InvalidChannelError(ValidationError):
    """Kraus operators do not satisfy the completeness relation."""


class GenerationError(ToniqError):
    """Instance generation exhausted its rejection budget."""


class RoutingError(ToniqError):
    """A two-qubit gate could not be routed on the coupling map."""


class MitigationError(ToniqError):
    """Readout confusion matrix is singular; inversion impossible."""


class RunError(ToniqError):
    """A single optimization run failed to produce a finite cost."""


class RunBudgetError(RunError):
    """Too many runs of a batch failed (reference-build / scoring budget)."""


class ScoringContextError(ToniqError):
    """Samples and scoring curve disagree on instance or layer count."""
