"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input is well-formed but outside the mathematical domain of an operation."""


class DegenerateStateError(ValueError):
    """A projection or trace-out left nothing to normalize."""


class ContractError(RuntimeError):
    """A constructed object failed verification of its stated contract."""
