"""Closed-form equilibria and their existence conditions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .model import AlleeRegime, ModelParams, State, allee_regime

ROOT_TOL = 1e-10
# Coexistence candidates with |P| at or below this are boundary-degenerate, not equilibria.
P_TOL = 1e-10


class EquilibriumKind(enum.Enum):
    TRIVIAL = "Trivial"
    AXIAL = "Axial"
    COEXISTENCE = "Coexistence"


@dataclass(frozen=True)
class Equilibrium:
    label: str
    kind: EquilibriumKind
    state: State

    @property
    def N(self) -> float:
        return self.state.N

    @property
    def P(self) -> float:
        return self.state.P


@dataclass
class ExistenceReport:
    D1: float
    D2: float
    equilibria: list[Equilibrium]
    notes: list[str] = field(default_factory=list)

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.equilibria]

    def get(self, label: str) -> Equilibrium | None:
        for e in self.equilibria:
            if e.label == label:
                return e
        return None


def axial_discriminant(p: ModelParams) -> float:
    return (p.K - p.w) ** 2 - 4.0 * p.K * (p.h - p.w)


def coexistence_discriminant(p: ModelParams) -> float:
    return p.c**2 - 4.0 * p.b * p.delta**2


def axial_fold_h(p: ModelParams) -> float:
    """Allee severity at which the two axial roots merge."""
    return (p.K + p.w) ** 2 / (4.0 * p.K)


def _is_degenerate(disc: float, *terms: float) -> bool:
    scale = max(1.0, *(abs(t) for t in terms))
    return abs(disc) <= ROOT_TOL * scale


def axial_roots(p: ModelParams) -> list[tuple[str, float]]:
    """Strictly positive roots of N^2 - (K - w) N + K (h - w) = 0, labelled E1/E2/E3."""
    s = p.K - p.w
    prod = p.K * (p.h - p.w)
    D1 = axial_discriminant(p)
    if _is_degenerate(D1, s * s, 4.0 * prod):
        N3 = s / 2.0
        return [("E3", N3)] if N3 > 0 else []
    if D1 < 0:
        return []
    sq = math.sqrt(D1)
    # Larger-magnitude root first, the other from the product of roots (no cancellation).
    if s >= 0:
        N1 = (s + sq) / 2.0
        N2 = prod / N1 if N1 != 0 else 0.0
    else:
        N2 = (s - sq) / 2.0
        N1 = prod / N2 if N2 != 0 else 0.0
    roots = []
    if N1 > 0:
        roots.append(("E1", N1))
    if N2 > 0:
        roots.append(("E2", N2))
    return roots


def prey_nullcline_P(p: ModelParams, N: float) -> float:
    """Predator density on the prey nullcline at prey density ``N`` (signed)."""
    bracket = (p.K - p.w) * N - p.K * (p.h - p.w) - N * N
    return p.r * (p.b + N * N) * bracket / (p.K * p.a * (p.w + N))


def coexistence_candidates(p: ModelParams) -> list[tuple[str, float]]:
    """Prey coordinates solving c N / (b + N^2) = delta, before the P > 0 filter."""
    D2 = coexistence_discriminant(p)
    if _is_degenerate(D2, p.c**2, 4.0 * p.b * p.delta**2):
        return [("E6", p.c / (2.0 * p.delta))]
    if D2 < 0:
        return []
    sq = math.sqrt(D2)
    N4 = (p.c + sq) / (2.0 * p.delta)
    # N4 * N5 = b
    N5 = 2.0 * p.b * p.delta / (p.c + sq)
    return [("E4", N4), ("E5", N5)]


def _coexistence(p: ModelParams, notes: list[str] | None = None) -> list[Equilibrium]:
    if notes is None:
        notes = []
    cands = coexistence_candidates(p)
    if not cands:
        notes.append(
            "Theorem 6(i): b > (c/2delta)^2 (D2 < 0), no coexistence equilibrium"
        )
        return []
    out = []
    for label, N in cands:
        P = prey_nullcline_P(p, N)
        clause = "Theorem 6(ii)" if label == "E6" else "Theorem 6(iii)"
        if P > P_TOL:
            out.append(Equilibrium(label, EquilibriumKind.COEXISTENCE, State(N, P)))
            notes.append(f"{clause}: {label} exists, N={N!r}, P={P!r} > 0")
        elif P >= -P_TOL:
            notes.append(
                f"{clause}: {label} boundary-degenerate, N={N!r}, |P|={abs(P)!r} <= {P_TOL}; not reported"
            )
        else:
            notes.append(f"{clause}: {label} rejected, N={N!r}, P(N)={P!r} < 0")
    return out


def coexistence_points(p: ModelParams) -> list[Equilibrium]:
    return _coexistence(p)


def all_equilibria(p: ModelParams) -> ExistenceReport:
    notes = ["E0 = (0, 0) always exists"]
    eqs = [Equilibrium("E0", EquilibriumKind.TRIVIAL, State(0.0, 0.0))]

    regime = allee_regime(p)
    roots = axial_roots(p)
    if regime is AlleeRegime.WEAK:
        notes.append("Theorem 4: weak Allee effect (h < w), E1 exists and is unique")
    elif regime is AlleeRegime.STRONG:
        hstar = axial_fold_h(p)
        if p.K <= p.w:
            notes.append("strong Allee effect with K <= w: Theorem 5 hypothesis K > w fails, no positive axial roots")
        elif not roots:
            notes.append(f"Theorem 5(i): h > (K+w)^2/4K = {hstar!r}, no axial equilibrium")
        elif roots[0][0] == "E3":
            notes.append(f"Theorem 5(ii): h = (K+w)^2/4K = {hstar!r}, single axial equilibrium E3")
        else:
            notes.append(f"Theorem 5(iii): h < (K+w)^2/4K = {hstar!r}, axial equilibria E1 and E2")
    else:
        notes.append("boundary regime h = w: axial roots N = K - w and N = 0")
    for label, N in roots:
        eqs.append(Equilibrium(label, EquilibriumKind.AXIAL, State(N, 0.0)))

    eqs.extend(_coexistence(p, notes))
    return ExistenceReport(axial_discriminant(p), coexistence_discriminant(p), eqs, notes)
