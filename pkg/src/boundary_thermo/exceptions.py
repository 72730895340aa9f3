"""Exception types shared across the package."""


class StructureError(ValueError):
    """Shapes, dimensions or indices do not fit together."""


class ContractError(ValueError):
    """A numerical precondition or postcondition was violated."""


class PositivityError(ContractError):
    """An integrated density matrix lost positivity beyond tolerance."""
