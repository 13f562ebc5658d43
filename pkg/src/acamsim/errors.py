"""Exception hierarchy for the analog CAM simulator.

The CLI maps these onto distinct exit codes: input/parse problems (2),
domain and validation problems (3), convergence failures (4).
"""


class AcamError(Exception):
    """Base class for all simulator errors."""


class ParseError(AcamError):
    """Malformed input file or configuration document."""


class DomainError(AcamError):
    """Argument outside its valid domain (conductance window, voltage range, shape)."""


class InconsistentCellError(DomainError):
    """Conductance pair maps to an inverted interval (lower bound above upper bound)."""


class OutOfWindowError(DomainError):
    """Requested interval needs a conductance outside the programmable window.

    ``bound`` names the violated endpoint ("lo" or "hi").
    """

    def __init__(self, message: str, bound: str):
        super().__init__(message)
        self.bound = bound


class PackingError(DomainError):
    """Discrete levels do not fit in the requested voltage window."""


class EmptyIntervalError(DomainError):
    """An in-array sweep found no matching stimulus at all."""


class NoDischargeError(DomainError):
    """Latency requested for a row that matches (its match line never crosses)."""


class AmbiguousMatchError(AcamError):
    """Classification produced zero or multiple matching rows."""

    def __init__(self, message: str, matched_rows: tuple[int, ...]):
        super().__init__(message)
        self.matched_rows = matched_rows


class MalformedTreeError(DomainError):
    """Decision tree contains a contradictory (empty-interval) root-to-leaf path."""


class ProgrammingError(AcamError):
    """Program-and-verify loop did not converge; carries the best state reached."""

    def __init__(self, message: str, best_g: float, iterations: int):
        super().__init__(message)
        self.best_g = best_g
        self.iterations = iterations


class CalibrationError(AcamError):
    """Parameter fit failed or left a residual above the acceptance limit."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals if residuals is not None else []
