"""Shared exception types."""


class BudgetExceeded(RuntimeError):
    """An enumeration or search would exceed its configured budget."""


class PostconditionError(RuntimeError):
    """A recomputed quantity violated a postcondition that is supposed to be
    guaranteed; this always indicates a bug, never bad input."""
