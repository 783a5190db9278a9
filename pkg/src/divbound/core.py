"""Shared result types and exceptions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


class DivboundError(Exception):
    """Base class for library errors."""


class PreconditionError(DivboundError):
    """The input lies outside the domain where a bound is valid."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class QuadratureError(DivboundError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, value: float = float("nan"), error: float = float("nan")):
        super().__init__(message)
        self.value = value
        self.error = error


class OracleError(DivboundError):
    """A Monte Carlo oracle met a non-finite log-density."""


class InternalCheckError(DivboundError):
    """A guaranteed mathematical relation failed numerically."""


@dataclass(frozen=True)
class BoundInterval:
    """Certified ``[lower, upper]`` for a divergence.

    ``clipped`` records whether either side was moved onto the natural range
    (``[0, 1]`` for TVD, ``[0, inf]`` for KLD) after evaluation.
    """

    lower: float
    upper: float
    regime: str | None = None
    clipped: bool = False
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise InternalCheckError(f"bound ordering violated: lower={self.lower!r} > upper={self.upper!r}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack
