"""Local stability of equilibria from the Jacobian spectrum, cross-checked
against the analytic stability conditions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .equilibria import (
    Equilibrium,
    EquilibriumKind,
    axial_roots,
    coexistence_points,
)
from .model import AlleeRegime, Matrix2, ModelParams, allee_regime, jacobian, vector_field

HYP_TOL = 1e-8
RESIDUAL_TOL = 1e-6


class MissingEquilibrium(ValueError):
    """The equilibrium an analytic quantity refers to does not exist."""


class Classification(enum.Enum):
    STABLE_NODE = "StableNode"
    STABLE_FOCUS = "StableFocus"
    UNSTABLE_NODE = "UnstableNode"
    UNSTABLE_FOCUS = "UnstableFocus"
    SADDLE = "Saddle"
    NON_HYPERBOLIC = "NonHyperbolic"

    @property
    def is_stable(self) -> bool:
        return self in (Classification.STABLE_NODE, Classification.STABLE_FOCUS)


@dataclass(frozen=True)
class EigenPair:
    lambda1: complex
    lambda2: complex


@dataclass
class StabilityReport:
    equilibrium: Equilibrium
    eigen: EigenPair
    trace: float
    det: float
    classification: Classification
    theorem_note: str
    # "stable" | "unstable" | "nonhyperbolic", or None when the analytic condition is within HYP_TOL of its threshold
    theorem_prediction: str | None = None


def eigenvalues_2x2(m: Matrix2) -> EigenPair:
    """Roots of lambda^2 - tr lambda + det = 0, larger real part first."""
    tr = m.trace
    det = m.det
    # (a11 - a22)^2 + 4 a12 a21 equals tr^2 - 4 det without the cancellation
    disc = (m.a11 - m.a22) ** 2 + 4.0 * m.a12 * m.a21
    if disc < 0:
        im = math.sqrt(-disc) / 2.0
        return EigenPair(complex(tr / 2.0, im), complex(tr / 2.0, -im))
    sq = math.sqrt(disc)
    q = (tr + math.copysign(sq, tr)) / 2.0
    if q == 0.0:
        return EigenPair(0j, 0j)
    l1, l2 = q, det / q
    if l2 > l1:
        l1, l2 = l2, l1
    return EigenPair(complex(l1, 0.0), complex(l2, 0.0))


def classify_matrix(m: Matrix2, tol: float = HYP_TOL) -> Classification:
    ev = eigenvalues_2x2(m)
    re1, re2 = ev.lambda1.real, ev.lambda2.real
    if min(abs(re1), abs(re2)) <= tol:
        return Classification.NON_HYPERBOLIC
    disc = (m.a11 - m.a22) ** 2 + 4.0 * m.a12 * m.a21
    if disc < -tol:
        return Classification.STABLE_FOCUS if m.trace < 0 else Classification.UNSTABLE_FOCUS
    if re1 * re2 < 0:
        return Classification.SADDLE
    return Classification.STABLE_NODE if m.trace < 0 else Classification.UNSTABLE_NODE


def _sign_prediction(value: float, negative: str, positive: str) -> str | None:
    if value < -HYP_TOL:
        return negative
    if value > HYP_TOL:
        return positive
    return None


def _theorem(p: ModelParams, e: Equilibrium, m: Matrix2) -> tuple[str, str | None]:
    regime = allee_regime(p)
    N = e.N
    if e.kind is EquilibriumKind.TRIVIAL:
        margin = p.h - p.w
        if regime is AlleeRegime.STRONG:
            note = "Theorem 7: strong Allee effect (h > w), E0 locally asymptotically stable"
        elif regime is AlleeRegime.WEAK:
            note = "Theorem 7: weak Allee effect (h < w), E0 unstable (saddle)"
        else:
            note = "Theorem 7 boundary h = w: lambda1 = r(w - h)/w = 0, E0 non-hyperbolic"
        pred = _sign_prediction(-margin, "stable", "unstable")
        return note, pred if pred is not None else "nonhyperbolic"

    if e.kind is EquilibriumKind.AXIAL:
        cstar = p.delta * (p.b + N * N) / N
        if e.label == "E3":
            return ("Theorem 9(i): h = (K+w)^2/4K, lambda1 = 0, E3 non-hyperbolic", "nonhyperbolic")
        if e.label == "E2":
            return ("Theorem 9(ii): E2 has lambda1 > 0, unstable (saddle)", "unstable")
        # E1
        if regime is AlleeRegime.WEAK:
            clause = "Theorem 8"
        else:
            clause = "Theorem 9(ii)"
        pred = _sign_prediction(p.c - cstar, "stable", "unstable")
        if pred == "stable":
            note = f"{clause}: c < delta(b+N1^2)/N1 = {cstar!r}, E1 locally asymptotically stable"
        elif pred == "unstable":
            note = f"{clause}: c > delta(b+N1^2)/N1 = {cstar!r}, E1 unstable (saddle)"
        else:
            note = f"{clause}: c = delta(b+N1^2)/N1 = {cstar!r}, transcritical threshold"
        return note, pred if pred is not None else "nonhyperbolic"

    # coexistence
    if e.label == "E6":
        return ("Theorem 10(i): b = (c/2delta)^2, det(J) = 0, E6 non-hyperbolic", "nonhyperbolic")
    if e.label == "E4":
        return ("Theorem 10(ii): det(J_E4) < 0, E4 unstable", "unstable")
    pred = _sign_prediction(m.trace, "stable", "unstable")
    if pred == "stable":
        note = f"Theorem 10(ii): det(J_E5) > 0 and tr = {m.trace!r} < 0, E5 locally asymptotically stable"
    elif pred == "unstable":
        note = f"Theorem 10(ii): det(J_E5) > 0 but tr = {m.trace!r} > 0, E5 unstable"
    else:
        note = "Theorem 10(ii): tr(J_E5) = 0, Hopf threshold"
    return note, pred if pred is not None else "nonhyperbolic"


def classify(p: ModelParams, e: Equilibrium) -> StabilityReport:
    res = vector_field(p, e.state)
    if max(abs(res.N), abs(res.P)) > RESIDUAL_TOL:
        raise ValueError(
            f"{e.label} at {tuple(e.state)} is not an equilibrium of these parameters (residual {tuple(res)})"
        )
    m = jacobian(p, e.state)
    note, pred = _theorem(p, e, m)
    return StabilityReport(
        equilibrium=e,
        eigen=eigenvalues_2x2(m),
        trace=m.trace,
        det=m.det,
        classification=classify_matrix(m),
        theorem_note=note,
        theorem_prediction=pred,
    )


def _unique_e1(p: ModelParams) -> float:
    if allee_regime(p) is not AlleeRegime.WEAK:
        raise MissingEquilibrium("E1 threshold is defined for the weak Allee regime (h < w)")
    roots = dict(axial_roots(p))
    if "E1" not in roots:
        raise MissingEquilibrium("E1 does not exist for these parameters")
    return roots["E1"]


def e1_transcritical_c(p: ModelParams) -> float:
    """Conversion rate at which E1 exchanges stability with the coexistence branch."""
    N1 = _unique_e1(p)
    return p.delta * (p.b + N1 * N1) / N1


def e1_transcritical_b(p: ModelParams) -> float:
    N1 = _unique_e1(p)
    return p.c * N1 / p.delta - N1 * N1


def e5_point(p: ModelParams) -> Equilibrium:
    for e in coexistence_points(p):
        if e.label == "E5":
            return e
    raise MissingEquilibrium("E5 does not exist for these parameters")


def coexistence_trace(p: ModelParams) -> float:
    """Trace of the Jacobian at E5, using the reduced form valid on both nullclines."""
    e = e5_point(p)
    N, P = e.state
    q = p.b + N * N
    return p.h * p.r * N / (p.w + N) ** 2 + 2.0 * p.a * N * N * P / q**2 - p.r * N / p.K


def coexistence_det(p: ModelParams) -> float:
    e = e5_point(p)
    return jacobian(p, e.state).det

