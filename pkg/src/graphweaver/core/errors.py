"""Exception hierarchy shared by every graphweaver module."""

from __future__ import annotations

from typing import Optional


class GraphWeaverError(Exception):
    """Base class for all errors raised by graphweaver."""


class InvalidDimensionError(GraphWeaverError, ValueError):
    """Raised when a lattice dimension or lattice shorthand is invalid."""


class InvalidGraphError(GraphWeaverError, ValueError):
    """Raised when a graph violates the simple undirected graph invariants."""


class GraphParseError(GraphWeaverError):
    """Raised when graph or schedule text cannot be parsed."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PlanningError(GraphWeaverError):
    """Raised when a weave schedule cannot be planned or executed."""


class DomainError(GraphWeaverError, ValueError):
    """Raised when a numeric argument lies outside the domain of a formula."""


class CapacityError(GraphWeaverError):
    """Raised when a state vector would exceed the configured qubit cap."""


class ContractError(GraphWeaverError):
    """Raised when a quantum-state precondition of an operation is violated."""


class InvalidStateError(GraphWeaverError):
    """Raised when a spider transition is attempted from the wrong state."""
