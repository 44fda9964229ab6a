"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class SntcError(Exception):
    """Base class for toolkit errors."""


class ConfigurationError(SntcError, ValueError):
    """Unknown parameter, malformed scenario, or inconsistent settings."""


class DomainError(SntcError, ValueError):
    """Argument outside the domain where a formula is defined."""


class InvalidConstantsError(DomainError):
    pass


class DerivativeMismatchError(SntcError):
    """Analytic derivative disagrees with finite differences."""

    def __init__(self, block: str, error: float, tol: float):
        self.block = block
        self.error = error
        self.tol = tol
        super().__init__(f"derivative block '{block}' mismatch: {error:.3e} > tol {tol:.1e}")


class KinkError(DomainError):
    """Evaluation stencil straddles a non-smooth point of the right-hand side."""

    def __init__(self, component: int, location: float):
        self.component = component
        self.location = location
        super().__init__(f"stencil straddles kink of component {component} at {location:.12g}")


class BorderDegeneracyError(SntcError, ArithmeticError):
    """Bordered matrix is (numerically) singular; the caller must re-border."""

    def __init__(self, rcond: float):
        self.rcond = rcond
        super().__init__(f"bordered matrix singular (rcond={rcond:.3e})")


class TangentDegeneracyError(SntcError, ArithmeticError):
    """Extended Jacobian lost rank: singular point on the curve."""


class DegenerateTangentError(SntcError, ArithmeticError):
    """Parameter-plane projection of the tangent vanishes."""


class StepFailure(SntcError):
    """Newton corrector did not converge."""

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class LocalizationError(SntcError):
    """Bisection of a test-function bracket collapsed without a zero."""

    def __init__(self, message: str, bracket: dict):
        self.bracket = bracket
        super().__init__(message)


class AmbiguousPointError(SntcError):
    """Several codimension-two tests vanish at once; not classified."""

    def __init__(self, diagnostics: dict):
        self.diagnostics = diagnostics
        super().__init__("simultaneous zeros of beta_cusp and beta_bt with alpha nonzero")


class PreconditionError(SntcError, ValueError):
    pass


class StiffnessError(SntcError):
    """Integrator step size underflowed."""

    def __init__(self, t: float, state, h: float):
        self.t = t
        self.state = state
        self.h = h
        super().__init__(f"step size underflow (h={h:.3e}) at t={t:.6g}; problem may be stiff")
