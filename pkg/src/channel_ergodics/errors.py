"""Exception types shared across the package."""


class InputValidationError(ValueError):
    """Malformed or inconsistent user input (file schemas, shapes, weights)."""


class NotStochasticError(ValueError):
    """An operation required sum_a w_a L_a† L_a = Id and the input violates it."""


class NotIrreducibleError(ValueError):
    """An operation required an irreducible channel."""


class DegenerateStepError(RuntimeError):
    """All per-step selection probabilities vanished along a sampled path."""


class EnumerationBudgetError(RuntimeError):
    """Exact word enumeration would exceed the configured budget."""


class SpectralError(RuntimeError):
    """The eigenvalue analysis could not produce a usable Perron eigenpair."""
