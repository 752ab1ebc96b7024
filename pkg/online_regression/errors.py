class OnlineRegressionError(Exception):
    """Base class for every error raised by this package."""

    def __init__(self, detail: str) -> None:
        super().__init__(detail)
        self.detail = detail


class NotPositiveDefinite(OnlineRegressionError):
    """A Cholesky pivot was not strictly positive."""


class SingularUpdate(OnlineRegressionError):
    """A rank-1 inverse update or downdate hit a vanishing denominator."""


class DegenerateScalar(OnlineRegressionError):
    """A partitioned-inverse pivot (Schur complement) vanished."""


class IllegalTransition(OnlineRegressionError):
    pass


class InsufficientData(OnlineRegressionError):
    pass


class NonPositiveFeature(OnlineRegressionError):
    """ln/sqrt feature mapping needs strictly positive inputs."""


class ZeroDensity(OnlineRegressionError):
    pass


class DomainError(OnlineRegressionError):
    pass


class NegativeRuntime(OnlineRegressionError):
    pass


class UnknownLearner(OnlineRegressionError):
    pass


class ParseError(OnlineRegressionError):
    def __init__(self, detail: str, line: int | None = None) -> None:
        super().__init__(detail if line is None else f"line {line}: {detail}")
        self.line = line
