"""Predator-prey vector field with additive Allee effect and Holling type IV predation.

    dN/dt = r N (1 - N/K - h/(w + N)) - a N P / (b + N^2)
    dP/dt = c N P / (b + N^2) - delta P
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, fields, replace
from typing import NamedTuple

PARAM_NAMES = ("r", "K", "w", "h", "a", "b", "c", "delta")

# Clamp window of the non-negativity guard; anything more negative is a step failure.
CLAMP_TOL = 1e-12


class AlleeRegime(enum.Enum):
    WEAK = "Weak"
    STRONG = "Strong"
    BOUNDARY = "Boundary"


class State(NamedTuple):
    N: float
    P: float


@dataclass(frozen=True)
class ModelParams:
    """The eight positive constants of the model.

    Parameters
    ----------
    r : float
        Intrinsic prey growth rate.
    K : float
        Prey carrying capacity.
    w : float
        Prey size at which fitness is half its maximum (Allee half-fitness).
    h : float
        Severity of the Allee effect.
    a : float
        Predation rate.
    b : float
        Half-saturation constant of the type IV response.
    c : float
        Predator conversion rate.
    delta : float
        Predator death rate.
    """

    r: float
    K: float
    w: float
    h: float
    a: float
    b: float
    c: float
    delta: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ValueError(f"parameter {f.name!r} must be a number, got {value!r}") from None
            if not value > 0 or value == float("inf"):
                raise ValueError(f"parameter {f.name!r} must be positive and finite, got {value!r}")
            object.__setattr__(self, f.name, value)
        if self.w >= self.K:
            warnings.warn(
                f"w={self.w} >= K={self.K}: Allee half-fitness size is expected below carrying capacity",
                stacklevel=3,
            )

    @property
    def w_exceeds_K(self) -> bool:
        return self.w >= self.K

    @property
    def regime(self) -> AlleeRegime:
        return allee_regime(self)

    def with_value(self, name: str, value: float) -> "ModelParams":
        if name not in PARAM_NAMES:
            raise ValueError(f"unknown parameter {name!r}; expected one of {', '.join(PARAM_NAMES)}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return replace(self, **{name: value})

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in PARAM_NAMES}


@dataclass(frozen=True)
class Matrix2:
    a11: float
    a12: float
    a21: float
    a22: float

    @property
    def trace(self) -> float:
        return self.a11 + self.a22

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def as_rows(self) -> list[list[float]]:
        return [[self.a11, self.a12], [self.a21, self.a22]]


def allee_regime(p: ModelParams) -> AlleeRegime:
    if p.h < p.w:
        return AlleeRegime.WEAK
    if p.h > p.w:
        return AlleeRegime.STRONG
    return AlleeRegime.BOUNDARY


def vector_field(p: ModelParams, s) -> State:
    N, P = s
    q = p.b + N * N
    dN = p.r * N * (1.0 - N / p.K - p.h / (p.w + N)) - p.a * N * P / q
    dP = p.c * N * P / q - p.delta * P
    return State(dN, dP)


def jacobian(p: ModelParams, s) -> Matrix2:
    """Analytic Jacobian of the vector field at ``s``."""
    N, P = s
    q = p.b + N * N
    a11 = (
        p.r
        - 2.0 * p.r * N / p.K
        - p.r * p.h * p.w / (p.w + N) ** 2
        - p.a * P * (p.b - N * N) / q**2
    )
    a12 = -p.a * N / q
    a21 = p.c * P / q - 2.0 * p.c * N * N * P / q**2
    a22 = p.c * N / q - p.delta
    return Matrix2(a11, a12, a21, a22)
