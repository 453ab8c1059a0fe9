"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid model parameters or run configuration."""


class ConvergenceFailure(ArithmeticError):
    """The QL iteration did not converge.

    ``index`` is the eigenvalue that failed; ``realization`` and ``context`` are
    filled in by the ensemble/sweep layers as the error propagates.
    """

    def __init__(self, index, iterations, realization=None, context=None):
        self.index = index
        self.iterations = iterations
        self.realization = realization
        self.context = context
        msg = f"no convergence for eigenvalue {index} after {iterations} iterations"
        if realization is not None:
            msg += f" (realization {realization})"
        if context:
            msg += f" [{context}]"
        super().__init__(msg)
