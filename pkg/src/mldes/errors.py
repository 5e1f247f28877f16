"""Exception types shared across the toolkit."""


class MldesError(Exception):
    """Base class for all toolkit errors."""


class ModelError(MldesError):
    """Invalid model input (syntax or well-formedness violation).

    Carries the 1-based source line when the problem can be located in an
    input file.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ClusteringError(MldesError):
    """Invalid clustering input or parameters."""


class ConvergenceError(ClusteringError):
    """Markov iteration did not settle within the iteration cap."""

    def __init__(self, iterations: int, delta: float):
        self.iterations = iterations
        self.delta = delta
        super().__init__(
            f"markov iteration did not converge after {iterations} iterations "
            f"(last delta {delta:.3e})"
        )


class TransformError(MldesError):
    """Clustering violates the structural requirements of the tree transform."""


class StateBudgetExceeded(MldesError):
    """A composed state space grew past the configured bound."""

    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"state budget of {budget} states exceeded")


class PipelineError(MldesError):
    """A pipeline stage failed; carries the stage name for reporting."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
