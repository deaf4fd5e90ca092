"""Exception types shared across the toolkit."""


class InfeasibleError(ValueError):
    """Observed statistics lie outside the domain where a key rate is certified."""


class NumericalError(RuntimeError):
    """An internal consistency check or solver residual bound failed."""
