"""One-parameter sweeps and critical parameter values (transcritical, Hopf, folds)."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np
from scipy.optimize import brentq

from .dynamics import (
    AttractorId,
    IntegrationError,
    IntegratorConfig,
    Undetermined,
    classify_tail,
    integrate,
    tail_summary,
    TAIL_FRAC,
)
from .equilibria import all_equilibria, axial_roots
from .model import PARAM_NAMES, ModelParams, State
from .stability import (
    Classification,
    MissingEquilibrium,
    classify,
    coexistence_det,
    coexistence_trace,
    e1_transcritical_b,
    e1_transcritical_c,
)

ROOT_XTOL = 1e-12
# Warm-started probes are lifted off an invariant axis they collapsed onto.
WARM_FLOOR = 1e-4


class NoSignChange(ValueError):
    pass


class E5Vanished(ValueError):
    pass


class CriticalKind(enum.Enum):
    TRANSCRITICAL = "Transcritical"
    HOPF = "Hopf"
    COEXISTENCE_FOLD = "CoexistenceFold"
    AXIAL_DEGENERATE = "AxialDegenerate"


class Method(enum.Enum):
    ANALYTIC = "Analytic"
    ROOT_FIND = "RootFind"
    SWEEP_DETECT = "SweepDetect"


@dataclass(frozen=True)
class CriticalPoint:
    kind: CriticalKind
    param_name: str
    value: float
    method: Method


@dataclass
class SweepRecord:
    param_name: str
    param_value: float
    equilibria_summary: list[tuple[str, State, Classification]]
    attractor: AttractorId
    N_min: float = math.nan
    N_max: float = math.nan
    P_min: float = math.nan
    P_max: float = math.nan
    error: str | None = None
    notes: list[str] = field(default_factory=list)

    def classification_of(self, label: str) -> Classification | None:
        for lab, _, cls in self.equilibria_summary:
            if lab == label:
                return cls
        return None


def _check_param(name: str) -> None:
    if name not in PARAM_NAMES:
        raise ValueError(f"unknown parameter {name!r}; expected one of {', '.join(PARAM_NAMES)}")


def sweep(p: ModelParams, param_name: str, lo: float, hi: float, steps: int,
          probe_s0=(0.5, 0.3), cfg: IntegratorConfig | None = None, *,
          probe: bool = True, tail_frac: float = TAIL_FRAC) -> list[SweepRecord]:
    """Recompute equilibria, their stability and the probe attractor along a parameter range.

    The probe trajectory is warm-started from the previous value's final
    state, so the records follow the attracting branch. With ``probe=False``
    only the equilibria and their local stability are recorded.
    """
    _check_param(param_name)
    if not lo < hi:
        raise ValueError(f"sweep range must satisfy lo < hi, got [{lo}, {hi}]")
    if steps < 2:
        raise ValueError(f"sweep needs at least 2 steps, got {steps}")
    if lo <= 0:
        raise ValueError(f"parameter {param_name!r} must stay positive across the sweep, got lo={lo}")
    cfg = cfg or IntegratorConfig()
    s0 = State(float(probe_s0[0]), float(probe_s0[1]))
    start = s0

    records = []
    for value in np.linspace(lo, hi, steps):
        q = p.with_value(param_name, float(value))
        report = all_equilibria(q)
        summary = [(e.label, e.state, classify(q, e).classification) for e in report.equilibria]
        rec = SweepRecord(param_name, float(value), summary, Undetermined("not probed"))
        if probe:
            try:
                traj = integrate(q, start, cfg)
            except IntegrationError as exc:
                rec.attractor = Undetermined(f"integration failed: {exc}")
                rec.error = str(exc)
            else:
                tail = tail_summary(traj, tail_frac)
                rec.attractor = classify_tail(tail, report)
                rec.N_min, rec.N_max = tail.N_min, tail.N_max
                rec.P_min, rec.P_max = tail.P_min, tail.P_max
                fN, fP = traj.final
                start = State(
                    max(fN, WARM_FLOOR) if s0.N > 0 else fN,
                    max(fP, WARM_FLOOR) if s0.P > 0 else fP,
                )
        records.append(rec)
    return records


def detect_stability_changes(records: Sequence[SweepRecord]) -> list[CriticalPoint]:
    """Midpoints between consecutive records where E1 or E5 changes local stability."""
    out = []
    for prev, cur in zip(records, records[1:]):
        for label, kind in (("E1", CriticalKind.TRANSCRITICAL), ("E5", CriticalKind.HOPF)):
            a, b = prev.classification_of(label), cur.classification_of(label)
            if a is None or b is None or a.is_stable == b.is_stable:
                continue
            if kind is CriticalKind.HOPF and Classification.SADDLE in (a, b):
                continue
            mid = 0.5 * (prev.param_value + cur.param_value)
            out.append(CriticalPoint(kind, cur.param_name, mid, Method.SWEEP_DETECT))
    return out


def transcritical_point(p: ModelParams, param_name: str) -> CriticalPoint:
    """Closed-form value where E1's predator eigenvalue crosses zero."""
    if param_name == "c":
        value = e1_transcritical_c(p)
    elif param_name == "b":
        value = e1_transcritical_b(p)
    else:
        raise ValueError(f"transcritical point is available for 'c' or 'b', not {param_name!r}")
    return CriticalPoint(CriticalKind.TRANSCRITICAL, param_name, value, Method.ANALYTIC)


def _e1_predator_eigenvalue(q: ModelParams) -> float:
    roots = dict(axial_roots(q))
    if "E1" not in roots:
        raise MissingEquilibrium("E1 does not exist")
    N1 = roots["E1"]
    return q.c * N1 / (q.b + N1 * N1) - q.delta


def transcritical_rootfind(p: ModelParams, param_name: str, bracket: tuple[float, float]) -> CriticalPoint:
    """Same threshold as :func:`transcritical_point`, found numerically from the E1 spectrum."""
    _check_param(param_name)
    lo, hi = bracket
    f = lambda v: _e1_predator_eigenvalue(p.with_value(param_name, v))
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise NoSignChange(f"E1 predator eigenvalue has the same sign at {lo} and {hi}")
    value = brentq(f, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)
    return CriticalPoint(CriticalKind.TRANSCRITICAL, param_name, value, Method.ROOT_FIND)


def _trace_at(p: ModelParams, name: str, value: float) -> float:
    try:
        return coexistence_trace(p.with_value(name, value))
    except MissingEquilibrium:
        raise E5Vanished(f"E5 does not exist at {name}={value!r}") from None


def hopf_point(p: ModelParams, param_name: str, bracket: tuple[float, float]) -> CriticalPoint:
    """Root of tr(J) at E5 inside ``bracket``, checked to have det(J) > 0."""
    _check_param(param_name)
    lo, hi = float(bracket[0]), float(bracket[1])
    tlo, thi = _trace_at(p, param_name, lo), _trace_at(p, param_name, hi)
    if tlo == 0.0:
        value = lo
    elif thi == 0.0:
        value = hi
    elif (tlo < 0) == (thi < 0):
        raise NoSignChange(
            f"tr(J_E5) does not change sign on [{lo}, {hi}] ({tlo!r}, {thi!r})"
        )
    else:
        value = brentq(lambda v: _trace_at(p, param_name, v), lo, hi,
                       xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)
    det = coexistence_det(p.with_value(param_name, value))
    if not det > 0:
        raise E5Vanished(f"det(J_E5) = {det!r} <= 0 at {param_name}={value!r}: not a Hopf point")
    return CriticalPoint(CriticalKind.HOPF, param_name, value, Method.ROOT_FIND)


def fold_points(p: ModelParams, param_name: str,
                bracket: tuple[float, float] | None = None) -> list[CriticalPoint]:
    """Parameter values where the coexistence roots (D2 = 0) or axial roots (D1 = 0) merge."""
    _check_param(param_name)
    out = []

    fold = None
    if param_name == "c":
        fold = 2.0 * p.delta * math.sqrt(p.b)
    elif param_name == "b":
        fold = (p.c / (2.0 * p.delta)) ** 2
    elif param_name == "delta":
        fold = p.c / (2.0 * math.sqrt(p.b))
    if fold is not None:
        out.append(CriticalPoint(CriticalKind.COEXISTENCE_FOLD, param_name, fold, Method.ANALYTIC))

    # (K + w)^2 = 4 K h
    candidates: list[float] = []
    if param_name == "h":
        candidates = [(p.K + p.w) ** 2 / (4.0 * p.K)]
    elif param_name == "w":
        candidates = [2.0 * math.sqrt(p.K * p.h) - p.K]
    elif param_name == "K" and p.h >= p.w:
        s = 2.0 * math.sqrt(p.h * (p.h - p.w))
        candidates = [2.0 * p.h - p.w + s, 2.0 * p.h - p.w - s]
    for v in candidates:
        if v > 0:
            q = p.with_value(param_name, v)
            if q.K - q.w > 0:  # the merged root (K - w)/2 must be positive
                out.append(CriticalPoint(CriticalKind.AXIAL_DEGENERATE, param_name, v, Method.ANALYTIC))

    out = [cp for cp in out if cp.value > 0]
    if bracket is not None:
        lo, hi = bracket
        out = [cp for cp in out if lo <= cp.value <= hi]
    return out


def _fmt(x: float) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


DIAGRAM_HEADER = ["param", "value", "N_min", "N_max", "P_min", "P_max", "attractor", "labels"]


def diagram_export(records: Sequence[SweepRecord], critical_points: Sequence[CriticalPoint],
                   fh: TextIO) -> None:
    """Write the bifurcation diagram as CSV, critical points appended as flagged rows.

    Data rows carry the attractor label and ``label:classification`` pairs
    for every equilibrium; critical rows have ``critical:<kind>`` in the
    attractor column and the method in ``labels``.
    """
    if not records:
        raise ValueError("no sweep records to export")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(DIAGRAM_HEADER)
    for rec in records:
        labels = ";".join(f"{lab}:{cls.value}" for lab, _, cls in rec.equilibria_summary)
        w.writerow([rec.param_name, _fmt(rec.param_value), _fmt(rec.N_min), _fmt(rec.N_max),
                    _fmt(rec.P_min), _fmt(rec.P_max), rec.attractor.label, labels])
    for cp in critical_points:
        w.writerow([cp.param_name, _fmt(cp.value), "", "", "", "",
                    f"critical:{cp.kind.value}", cp.method.value])


def attractor_labels(records: Sequence[SweepRecord]) -> list[str]:
    return [r.attractor.label for r in records]
