"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes, so new error types should subclass one
of the three coarse categories: data, numeric, protocol.
"""


class LemonError(Exception):
    """Base class for all package errors."""


class DataError(LemonError):
    """Malformed or inconsistent artifacts: manifests, blobs, checkpoints."""


class NumericError(LemonError):
    """Numeric failure: solver instability, NaN gradients, bad shapes."""


class ProtocolViolation(LemonError):
    """An evaluation protocol precondition was broken (e.g. train/test leak)."""


class StructuralError(LemonError):
    """Expression tree violates an arity or well-formedness invariant."""


class ParseError(DataError):
    """A prefix token sequence failed to parse; carries the token index."""


class VocabularyError(DataError):
    """A token is missing from the vocabulary."""


class DomainError(LemonError):
    """A sampled parameter falls outside its declared domain."""


class NormalizationError(NumericError):
    """Degenerate input to a normalization (flat range, zero mass)."""


class SolverError(NumericError):
    """A PDE solve blew up or hit its refinement limit."""


class DimensionError(NumericError):
    """Tensor shapes are incompatible for the requested op."""


class AutodiffError(NumericError):
    """Misuse of the tape: repeated backward, non-scalar loss, detached graph."""


class ConfigError(LemonError):
    """An invalid or contradictory run configuration."""
