"""Shared exception types for the prodstate toolkit."""


class PromiseViolationError(RuntimeError):
    """An algorithm's input promise appears to be violated at run time.

    Raised when a safety cap engages (e.g. an optimizer exceeds its iteration
    budget, or a survivor set outgrows its certified bound), which can only
    happen when the caller's promise about the hidden state does not hold.
    """


class ResourceBudgetError(RuntimeError):
    """A configured desk-scale resource budget (net size, copies) was exceeded.

    Maps to CLI exit code 2.
    """
