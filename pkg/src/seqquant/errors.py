"""Exception hierarchy shared by all seqquant modules."""


class SeqQuantError(Exception):
    """Base class for every error raised by the library."""


class DomainError(SeqQuantError, ValueError):
    """An argument lies outside the domain of a formula."""


class DimensionMismatch(SeqQuantError, ValueError):
    pass


class AbsoluteContinuityViolation(SeqQuantError, ValueError):
    """One distribution puts mass where the other has none."""


class DegenerateChannel(SeqQuantError, ValueError):
    """A quantizer induces an output pair with a zero KL divergence."""


class EmptyLevel(SeqQuantError, ValueError):
    pass


class SizeLimit(SeqQuantError, ValueError):
    pass


class RegimeError(SeqQuantError, ValueError):
    """Per-sample cost too large for the small-cost asymptotic formulas."""


class AssumptionViolated(SeqQuantError, ValueError):
    pass


class NotRandomized(SeqQuantError, ValueError):
    pass


class NotFound(SeqQuantError):
    def __init__(self, message: str, best_margin: float | None = None):
        super().__init__(message)
        self.best_margin = best_margin


class NoConvergence(SeqQuantError):
    """Value iteration hit ``max_iters`` before the sup-norm change fell below ``tol``."""

    def __init__(self, message: str, last_change: float, value: float | None = None):
        super().__init__(message)
        self.last_change = last_change
        self.value = value


class ZeroMass(SeqQuantError, ValueError):
    pass


class NonTermination(SeqQuantError):
    def __init__(self, message: str, capped_trials: int):
        super().__init__(message)
        self.capped_trials = capped_trials


class NoImprovement(SeqQuantError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ParseError(SeqQuantError, ValueError):
    """A problem file is malformed; the message names the offending field or line."""
