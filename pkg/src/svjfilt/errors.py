"""Shared exception types with enough context to diagnose failures."""

from __future__ import annotations


class GridError(ValueError):
    """Grid construction failed (degenerate moments or too few nodes)."""


class ZeroLikelihoodError(ArithmeticError):
    """A filter step produced a zero or non-finite likelihood contribution.

    Carries the step index and observation so the offending data point can
    be found.
    """

    def __init__(self, t: int, y_t: float, detail: str = ""):
        self.t = int(t)
        self.y_t = float(y_t)
        msg = f"zero likelihood at step t={t} (y_t={y_t:.6g})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class ParticleCollapseError(ArithmeticError):
    """Every particle weight underflowed to zero at some step."""

    def __init__(self, t: int, y_t: float):
        self.t = int(t)
        self.y_t = float(y_t)
        super().__init__(
            f"all particle weights are zero at step t={t} (y_t={y_t:.6g})")


class DataError(ValueError):
    """Input data file is missing, malformed, or incomplete."""
