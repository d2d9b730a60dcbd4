"""Shared exception types."""


class ContractError(ValueError):
    """An argument violates a documented precondition (width mismatch,
    overlapping masks, stray bits, out-of-range dimension value, ...)."""
