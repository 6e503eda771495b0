"""Exception hierarchy for RPF Cocycle.

Every exception carries the process exit code the CLI reports for it:

- 1: invalid input or configuration
- 2: a verification clause failed
- 3: a structural assertion failed (a construction did not meet its own invariant)
"""

from typing import Optional, Sequence

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VERIFICATION = 2
EXIT_STRUCTURAL = 3


class RpfError(Exception):
    """Base class for all errors raised by the library."""

    exit_code: int = EXIT_INVALID


class InputError(RpfError, ValueError):
    """Invalid user-supplied data."""


class DuplicateSymbolError(InputError):
    """A symbol is declared twice in an alphabet."""


class UnknownSymbolError(InputError):
    """A word or transition references an undeclared symbol."""


class NotEssentialError(InputError):
    """Some symbol has no allowed successor or no allowed predecessor."""


class NotIrreducibleError(InputError):
    """The transition digraph is not strongly connected."""


class CodeError(InputError):
    """The one-block code is not total or not surjective."""


class PotentialError(InputError):
    """The potential table is incomplete, has extra entries or non-finite values."""


class RangeTooLargeError(InputError):
    """The potential range exceeds what the operation supports."""


class NotAPreimageError(InputError):
    """A source word does not map onto the given target word."""


class WordNotInImageError(InputError):
    """A target word has no preimage."""


class MeasureError(InputError):
    """A measure presentation violates its invariants."""


class NotIrreducibleChainError(MeasureError):
    """The Markov chain of a measure presentation is not irreducible."""


class NotPeriodicPointError(InputError):
    """The word does not generate a periodic point of the image."""


class DimensionTooSmallError(InputError):
    """More exponents were requested than the operator dimension."""


class ZeroVectorError(InputError):
    """A projective distance was requested for the zero vector."""


class AllZeroError(InputError):
    """A diameter was requested for the zero matrix."""


class ConfigError(InputError):
    """Base class for configuration errors."""


class ParseError(ConfigError):
    """Malformed configuration text."""

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
        field: Optional[str] = None,
    ) -> None:
        location = []
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column {column}")
        if field is not None:
            location.append(f"field {field}")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(f"{message}{suffix}")
        self.line = line
        self.column = column
        self.field = field


class ConfigValidationError(ConfigError):
    """The configuration violates one or more invariants."""

    def __init__(self, problems: Sequence[str]) -> None:
        self.problems = list(problems)
        super().__init__("Invalid configuration: " + "; ".join(self.problems))


class StructuralError(RpfError):
    """A construction failed its own runtime check."""

    exit_code = EXIT_STRUCTURAL


class LanguageMismatchError(StructuralError):
    """A presentation's language differs from the image language."""


class RoutingOverlapError(StructuralError):
    """Two representative fibers share a symbol."""


class NoWindowError(StructuralError):
    """The word contains no full copy of the transition block."""


class InfiniteDiameterError(StructuralError):
    """A block product has infinite projective diameter."""


class VerificationFailed(RpfError):
    """A verification clause failed; carries the report that was produced."""

    exit_code = EXIT_VERIFICATION

    def __init__(self, clause: str, detail: str, report: object = None) -> None:
        super().__init__(f"Verification failed: {clause}: {detail}")
        self.clause = clause
        self.detail = detail
        self.report = report
