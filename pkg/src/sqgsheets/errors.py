from __future__ import annotations


class NumericError(Exception):
    """Base class for failures of the numerical method (CLI exit code 4)."""


class AdmissibilityError(NumericError, ValueError):
    """State outside the admissible regime: r <= 0, sheets too close, bad eps or d."""


class SingularBlockError(NumericError):
    def __init__(self, j: int, det: float):
        super().__init__(f"singular 2x2 block at mode j={j} (det={det:.3e})")
        self.j = j
        self.det = det


class SingularJacobianError(NumericError):
    def __init__(self, cond: float):
        super().__init__(f"Newton Jacobian is singular (condition estimate {cond:.3e})")
        self.cond = cond


class NonConvergenceError(NumericError):
    """Newton did not reach the tolerance; carries the residual history."""

    def __init__(self, eps: float, history: list[float]):
        last = history[-1] if history else float("nan")
        super().__init__(
            f"Newton failed to converge at eps={eps!r} after {len(history) - 1} iterations "
            f"(last residual {last:.3e})"
        )
        self.eps = eps
        self.history = list(history)
