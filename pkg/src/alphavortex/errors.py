"""Exception types raised by the library."""


class DomainError(ValueError):
    """Argument outside the domain of a kernel (e.g. evaluation at the origin)."""


class TailTooLarge(RuntimeError):
    """The boundary trace has not decayed at the edge of its window."""

    def __init__(self, tail, tol, half_width):
        self.tail = tail
        self.tol = tol
        self.half_width = half_width
        super().__init__(
            f"|g(+-L)| = {tail:.3e} >= tail_tol = {tol:.3e} at L = {half_width:g}; "
            "increase the window half-width"
        )


class TargetOutsideWindow(ValueError):
    """A target lies outside the alias-free part of the periodic trace window."""


class QuadratureNoConvergence(RuntimeError):
    """Adaptive refinement exhausted its budget."""


class GridTooCoarse(ValueError):
    """The sampling grid cannot hold the requested finite-difference stencils."""


class BoundaryCrossing(RuntimeError):
    """A time step moved a particle onto or below the wall."""

    def __init__(self, dt, index):
        self.dt = dt
        self.index = index
        super().__init__(f"particle {index} crossed x2 <= 0 with dt = {dt:g}")


class ConfigError(ValueError):
    """Invalid run configuration."""
