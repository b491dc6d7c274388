"""Optimization-level exceptions shared by the solver-facing modules."""

__all__ = ["Infeasible", "SolverFailure", "Degenerate"]


class Infeasible(RuntimeError):
    """The constraint set admits no solution for the given data."""


class SolverFailure(RuntimeError):
    """A conic solve did not reach an acceptable status."""


class Degenerate(RuntimeError):
    """The problem data is degenerate (zero channel, vanishing scale factor)."""
