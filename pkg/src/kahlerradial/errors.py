"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ConvergenceError(RuntimeError):
    """A numerical solver did not reach its accuracy contract."""


class SimulationError(RuntimeError):
    """A Monte Carlo run produced non-finite values."""
