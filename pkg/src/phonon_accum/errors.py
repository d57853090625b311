"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class UndefinedMetricError(ValueError):
    """Metric has no value for this input (e.g. Fano factor of the vacuum)."""


class ValidityError(ArithmeticError):
    """A numerical approximation left its range of validity."""


class TruncationError(ValidityError):
    """Fock-space truncation too small for the requested accuracy."""

    def __init__(self, message, suggested_n_cap=None):
        super().__init__(message)
        self.suggested_n_cap = suggested_n_cap


class FitError(RuntimeError):
    """Tomographic fit failed to converge; carries the best iterate found."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class IncompleteDistributionWarning(UserWarning):
    """Distribution carries more tail mass than the requested tolerance."""


class SupportWarning(UserWarning):
    """Reference distribution vanishes where the argument does not."""


class ConfigError(DomainError):
    """Invalid configuration; ``field`` is the dotted key path, ``line`` 1-based when known."""

    def __init__(self, message, field=None, line=None):
        where = ""
        if line is not None:
            where += f"line {line}: "
        if field:
            where += f"{field}: "
        super().__init__(where + message)
        self.field = field
        self.line = line
