"""Exception hierarchy shared by every rfplan module."""


class RfplanError(Exception):
    """Base class for all errors raised by rfplan."""


class ContractViolation(RfplanError, ValueError):
    """An argument broke a documented precondition (wrong dimension, bad value)."""


class EmptyFreeSpace(RfplanError):
    """Offsetting by ``rho`` annihilated the free space."""

    def __init__(self, rho, message=None):
        self.rho = float(rho)
        super().__init__(message or f"free space is empty after offsetting by rho={self.rho:.6g}")


class EmptyDataset(RfplanError):
    """No historical state survives in the eroded free space."""

    def __init__(self, message="no data points remain inside the eroded free space", **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            detail = ", ".join(f"{k}={v}" for k, v in diagnostics.items())
            message = f"{message} ({detail})"
        super().__init__(message)


class UnsupportedKernel(RfplanError):
    """The kernel has infinite support and cannot give a rejection-free guarantee."""


class GuaranteeViolation(RfplanError):
    """A rejection-free sample fell outside the target free space."""

    def __init__(self, point, count=1):
        self.point = point
        self.count = int(count)
        super().__init__(f"{self.count} sample(s) outside the free space, first at {list(point)}")


class PlanningError(RfplanError):
    """The planning query itself is invalid (start or goal in collision)."""


class BenchAborted(RfplanError):
    """Too many trials raised errors during an experiment."""
