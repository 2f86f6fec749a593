class QcapError(Exception):
    """Base class for every error raised by the qcap library."""


class DimensionError(QcapError, ValueError):
    pass


class NotHermitianError(QcapError, ValueError):
    def __init__(self, max_asymmetry, tol):
        self.max_asymmetry = float(max_asymmetry)
        self.tol = float(tol)
        super().__init__(
            f"matrix is not Hermitian: max |h - h^dag| = {self.max_asymmetry:.3e} exceeds tol {self.tol:.1e}"
        )


class NotPositiveError(QcapError, ValueError):
    def __init__(self, min_eigenvalue, threshold):
        self.min_eigenvalue = float(min_eigenvalue)
        self.threshold = float(threshold)
        super().__init__(
            f"operator is not positive semidefinite: smallest eigenvalue {self.min_eigenvalue:.3e} is below {self.threshold:.3e}"
        )


class ChannelError(QcapError, ValueError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class ModelError(QcapError, ValueError):
    pass


class SolverError(QcapError, RuntimeError):
    def __init__(self, label, solution, message=None):
        self.label = label
        self.solution = solution
        status = solution.status.value if solution is not None else "unknown"
        super().__init__(message or f"{label}: solver finished with status '{status}'")


class NonMonotoneError(QcapError):
    pass


class ConfigError(QcapError, ValueError):
    pass
