"""Exception types shared across the engine."""


class ContractViolation(ValueError):
    """An operation was called with arguments that break its contract."""


class NumericsError(RuntimeError):
    """A computation produced non-finite values and cannot continue."""
