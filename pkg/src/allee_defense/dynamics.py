"""Trajectory integration (Dormand-Prince 5(4)) and long-run attractor identification."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import TextIO, Union

import numpy as np

from .equilibria import ExistenceReport, all_equilibria
from .model import CLAMP_TOL, ModelParams, State

TAIL_FRAC = 0.25
FP_TOL = 1e-3
CYCLE_AMP_TOL = 1e-2
# a cycle's prey range may differ by at most this fraction between the tail halves
CYCLE_PERSIST_TOL = 0.1

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0

# Dormand-Prince 5(4) tableau
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# fifth-order weights minus the embedded fourth-order weights
E1 = 71 / 57600
E3 = -71 / 16695
E4 = 71 / 1920
E5 = -17253 / 339200
E6 = 22 / 525
E7 = -1 / 40


class IntegrationError(RuntimeError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


class MaxStepsExceeded(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    h_init: float = 1e-2
    h_min: float = 1e-12
    h_max: float = 5.0
    t_end: float = 2000.0
    max_steps: int = 2_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "h_init", "h_min", "h_max", "t_end"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"integrator setting {name!r} must be positive and finite, got {v!r}")
        if not self.h_min <= self.h_init <= self.h_max:
            raise ValueError(
                f"integrator step bounds must satisfy h_min <= h_init <= h_max, "
                f"got h_min={self.h_min!r}, h_init={self.h_init!r}, h_max={self.h_max!r}"
            )
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ValueError(f"integrator setting 'max_steps' must be a positive integer, got {self.max_steps!r}")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    params: ModelParams
    accepted_steps: int = 0
    rejected_steps: int = 0

    @property
    def N(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def P(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def final(self) -> State:
        return State(float(self.states[-1, 0]), float(self.states[-1, 1]))

    def __len__(self) -> int:
        return len(self.times)


def _rhs(N, P, r, K, w, h, a, b, c, d):
    q = b + N * N
    return r * N * (1.0 - N / K - h / (w + N)) - a * N * P / q, c * N * P / q - d * P


def _clamp(x):
    """Map roundoff-sized negatives to 0; return None for a genuine negative excursion."""
    if x >= 0.0:
        return x
    if x > -CLAMP_TOL:
        return 0.0
    return None


def integrate(p: ModelParams, s0, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate from ``s0`` over ``[0, cfg.t_end]`` with adaptive step control.

    Every accepted step is recorded. The local error estimate of each step
    satisfies ``|err_i| <= abs_tol + rel_tol * max(|y_i|, |y_i_new|)``.

    Raises
    ------
    StepSizeUnderflow
        If the controller asks for a step below ``cfg.h_min``.
    MaxStepsExceeded
        If more than ``cfg.max_steps`` step attempts are needed.
    """
    cfg = cfg or IntegratorConfig()
    N, P = float(s0[0]), float(s0[1])
    if not (N >= 0 and P >= 0):
        raise ValueError(f"initial state must lie in the first quadrant, got {(N, P)}")
    pr = (p.r, p.K, p.w, p.h, p.a, p.b, p.c, p.delta)
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    t_end = float(cfg.t_end)

    times = [0.0]
    Ns = [N]
    Ps = [P]
    t = 0.0
    h = cfg.h_init
    accepted = rejected = 0
    k1N, k1P = _rhs(N, P, *pr)
    while t < t_end:
        if accepted + rejected >= cfg.max_steps:
            raise MaxStepsExceeded(f"exceeded {cfg.max_steps} steps at t={t!r}")
        last = t + h >= t_end
        hs = t_end - t if last else h

        k2N, k2P = _rhs(N + hs * A21 * k1N, P + hs * A21 * k1P, *pr)
        k3N, k3P = _rhs(N + hs * (A31 * k1N + A32 * k2N), P + hs * (A31 * k1P + A32 * k2P), *pr)
        k4N, k4P = _rhs(
            N + hs * (A41 * k1N + A42 * k2N + A43 * k3N),
            P + hs * (A41 * k1P + A42 * k2P + A43 * k3P),
            *pr,
        )
        k5N, k5P = _rhs(
            N + hs * (A51 * k1N + A52 * k2N + A53 * k3N + A54 * k4N),
            P + hs * (A51 * k1P + A52 * k2P + A53 * k3P + A54 * k4P),
            *pr,
        )
        k6N, k6P = _rhs(
            N + hs * (A61 * k1N + A62 * k2N + A63 * k3N + A64 * k4N + A65 * k5N),
            P + hs * (A61 * k1P + A62 * k2P + A63 * k3P + A64 * k4P + A65 * k5P),
            *pr,
        )
        yN = N + hs * (B1 * k1N + B3 * k3N + B4 * k4N + B5 * k5N + B6 * k6N)
        yP = P + hs * (B1 * k1P + B3 * k3P + B4 * k4P + B5 * k5P + B6 * k6P)
        k7N, k7P = _rhs(yN, yP, *pr)

        eN = hs * (E1 * k1N + E3 * k3N + E4 * k4N + E5 * k5N + E6 * k6N + E7 * k7N)
        eP = hs * (E1 * k1P + E3 * k3P + E4 * k4P + E5 * k5P + E6 * k6P + E7 * k7P)
        err = max(
            abs(eN) / (atol + rtol * max(abs(N), abs(yN))),
            abs(eP) / (atol + rtol * max(abs(P), abs(yP))),
        )

        cN, cP = _clamp(yN), _clamp(yP)
        if err <= 1.0 and cN is not None and cP is not None:
            t = t_end if last else t + hs
            N, P = cN, cP
            if cN != yN or cP != yP:
                k1N, k1P = _rhs(N, P, *pr)
            else:
                k1N, k1P = k7N, k7P
            times.append(t)
            Ns.append(N)
            Ps.append(P)
            accepted += 1
            fac = _FAC_MAX if err == 0.0 else min(_FAC_MAX, _SAFETY * err ** -0.2)
            h = min(cfg.h_max, hs * fac) if not last else h
        else:
            rejected += 1
            if err <= 1.0:
                fac = 0.5  # negative excursion with an acceptable error estimate
            else:
                fac = max(_FAC_MIN, _SAFETY * err ** -0.2)
            h = hs * fac
            if h < cfg.h_min:
                raise StepSizeUnderflow(f"step size {h!r} below h_min={cfg.h_min!r} at t={t!r}")

    states = np.column_stack([Ns, Ps])
    return Trajectory(np.asarray(times), states, p, accepted, rejected)


def integrate_batch(p: ModelParams, s0: np.ndarray, cfg: IntegratorConfig | None = None,
                    tail_frac: float = TAIL_FRAC) -> "BatchResult":
    """Integrate many initial states at once and keep only tail statistics.

    Each row advances with its own time and step size; the arithmetic is
    elementwise, so a row's result does not depend on the other rows.
    """
    cfg = cfg or IntegratorConfig()
    s0 = np.asarray(s0, dtype=float).reshape(-1, 2)
    M = len(s0)
    if np.any(s0 < 0) or not np.all(np.isfinite(s0)):
        raise ValueError("initial states must lie in the first quadrant")
    r, K, w, hh, a, b, c, d = p.r, p.K, p.w, p.h, p.a, p.b, p.c, p.delta
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    t_end = float(cfg.t_end)
    t_tail = (1.0 - tail_frac) * t_end
    t_half = t_tail + 0.5 * (t_end - t_tail)

    def rhs(N, P):
        q = b + N * N
        return r * N * (1.0 - N / K - hh / (w + N)) - a * N * P / q, c * N * P / q - d * P

    N = s0[:, 0].copy()
    P = s0[:, 1].copy()
    t = np.zeros(M)
    h = np.full(M, cfg.h_init)
    k1N, k1P = rhs(N, P)
    n_steps = np.zeros(M, dtype=np.int64)
    accepted = np.zeros(M, dtype=np.int64)
    status = np.zeros(M, dtype=np.int8)  # 0 running/done, 1 underflow, 2 max steps

    in_tail0 = t_tail <= 0.0
    mn = s0.T.copy() if in_tail0 else np.full((2, M), np.inf)
    mx = s0.T.copy() if in_tail0 else np.full((2, M), -np.inf)
    area = np.zeros((2, M))
    # prey extrema over [t_tail, t_half) and [t_half, t_end]
    h1 = np.array([mn[0].copy(), mx[0].copy()])
    h2 = np.array([np.full(M, np.inf), np.full(M, -np.inf)])
    t_first = np.full(M, 0.0 if in_tail0 else np.nan)

    active = np.arange(M)
    while active.size:
        i = active
        Ni, Pi, ti = N[i], P[i], t[i]
        last = ti + h[i] >= t_end
        hs = np.where(last, t_end - ti, h[i])
        a1N, a1P = k1N[i], k1P[i]
        a2N, a2P = rhs(Ni + hs * A21 * a1N, Pi + hs * A21 * a1P)
        a3N, a3P = rhs(Ni + hs * (A31 * a1N + A32 * a2N), Pi + hs * (A31 * a1P + A32 * a2P))
        a4N, a4P = rhs(Ni + hs * (A41 * a1N + A42 * a2N + A43 * a3N),
                       Pi + hs * (A41 * a1P + A42 * a2P + A43 * a3P))
        a5N, a5P = rhs(Ni + hs * (A51 * a1N + A52 * a2N + A53 * a3N + A54 * a4N),
                       Pi + hs * (A51 * a1P + A52 * a2P + A53 * a3P + A54 * a4P))
        a6N, a6P = rhs(Ni + hs * (A61 * a1N + A62 * a2N + A63 * a3N + A64 * a4N + A65 * a5N),
                       Pi + hs * (A61 * a1P + A62 * a2P + A63 * a3P + A64 * a4P + A65 * a5P))
        yN = Ni + hs * (B1 * a1N + B3 * a3N + B4 * a4N + B5 * a5N + B6 * a6N)
        yP = Pi + hs * (B1 * a1P + B3 * a3P + B4 * a4P + B5 * a5P + B6 * a6P)
        a7N, a7P = rhs(yN, yP)
        eN = hs * (E1 * a1N + E3 * a3N + E4 * a4N + E5 * a5N + E6 * a6N + E7 * a7N)
        eP = hs * (E1 * a1P + E3 * a3P + E4 * a4P + E5 * a5P + E6 * a6P + E7 * a7P)
        err = np.maximum(
            np.abs(eN) / (atol + rtol * np.maximum(np.abs(Ni), np.abs(yN))),
            np.abs(eP) / (atol + rtol * np.maximum(np.abs(Pi), np.abs(yP))),
        )
        clampN = (yN < 0) & (yN > -CLAMP_TOL)
        clampP = (yP < 0) & (yP > -CLAMP_TOL)
        cN = np.where(clampN, 0.0, yN)
        cP = np.where(clampP, 0.0, yP)
        positive = (cN >= 0) & (cP >= 0)
        ok = (err <= 1.0) & positive
        n_steps[i] += 1

        # accepted rows
        acc = i[ok]
        if acc.size:
            t_old = t[acc]
            t_new = np.where(last[ok], t_end, t_old + hs[ok])
            newN, newP = cN[ok], cP[ok]
            entering = (t_new >= t_tail) & np.isnan(t_first[acc])
            t_first[acc[entering]] = t_new[entering]
            both_in = t_old >= t_tail
            dt = t_new - t_old
            area[0, acc] += np.where(both_in, 0.5 * dt * (N[acc] + newN), 0.0)
            area[1, acc] += np.where(both_in, 0.5 * dt * (P[acc] + newP), 0.0)
            in_tail = t_new >= t_tail
            mn[0, acc] = np.where(in_tail, np.minimum(mn[0, acc], newN), mn[0, acc])
            mn[1, acc] = np.where(in_tail, np.minimum(mn[1, acc], newP), mn[1, acc])
            mx[0, acc] = np.where(in_tail, np.maximum(mx[0, acc], newN), mx[0, acc])
            mx[1, acc] = np.where(in_tail, np.maximum(mx[1, acc], newP), mx[1, acc])
            first = in_tail & (t_new < t_half)
            second = t_new >= t_half
            h1[0, acc] = np.where(first, np.minimum(h1[0, acc], newN), h1[0, acc])
            h1[1, acc] = np.where(first, np.maximum(h1[1, acc], newN), h1[1, acc])
            h2[0, acc] = np.where(second, np.minimum(h2[0, acc], newN), h2[0, acc])
            h2[1, acc] = np.where(second, np.maximum(h2[1, acc], newN), h2[1, acc])
            clamped = clampN[ok] | clampP[ok]
            r7N, r7P = a7N[ok], a7P[ok]
            if clamped.any():
                fN, fP = rhs(newN[clamped], newP[clamped])
                r7N = r7N.copy()
                r7P = r7P.copy()
                r7N[clamped] = fN
                r7P[clamped] = fP
            k1N[acc], k1P[acc] = r7N, r7P
            N[acc], P[acc], t[acc] = newN, newP, t_new
            e_ok = err[ok]
            with np.errstate(divide="ignore"):
                fac = np.where(e_ok == 0.0, _FAC_MAX, np.minimum(_FAC_MAX, _SAFETY * e_ok ** -0.2))
            h[acc] = np.where(last[ok], h[acc], np.minimum(cfg.h_max, hs[ok] * fac))
            accepted[acc] += 1

        rej = i[~ok]
        if rej.size:
            e_r = err[~ok]
            fac = np.where(e_r <= 1.0, 0.5, np.maximum(_FAC_MIN, _SAFETY * e_r ** -0.2))
            h_new = hs[~ok] * fac
            h[rej] = h_new
            status[rej[h_new < cfg.h_min]] = 1

        status[i[(n_steps[i] >= cfg.max_steps) & (t[i] < t_end) & (status[i] == 0)]] = 2
        active = i[(t[i] < t_end) & (status[i] == 0)]

    span = t_end - t_first
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(span > 0, area / span, mx)
    return BatchResult(
        final=np.column_stack([N, P]),
        tail_min=mn.T.copy(),
        tail_max=mx.T.copy(),
        tail_mean=mean.T.copy(),
        N_range_halves=np.column_stack([h1[1] - h1[0], h2[1] - h2[0]]),
        status=status,
        accepted_steps=accepted,
        rejected_steps=n_steps - accepted,
    )


@dataclass
class BatchResult:
    final: np.ndarray
    tail_min: np.ndarray
    tail_max: np.ndarray
    tail_mean: np.ndarray
    N_range_halves: np.ndarray
    status: np.ndarray
    accepted_steps: np.ndarray
    rejected_steps: np.ndarray

    def summary(self, k: int) -> "TailSummary":
        return TailSummary(
            N_min=float(self.tail_min[k, 0]), N_max=float(self.tail_max[k, 0]),
            P_min=float(self.tail_min[k, 1]), P_max=float(self.tail_max[k, 1]),
            N_mean=float(self.tail_mean[k, 0]), P_mean=float(self.tail_mean[k, 1]),
            final=State(float(self.final[k, 0]), float(self.final[k, 1])),
            N_range_halves=(float(self.N_range_halves[k, 0]), float(self.N_range_halves[k, 1])),
        )


# --- attractors ----------------------------------------------------------------------


@dataclass(frozen=True)
class FixedPoint:
    eq_label: str
    state: State

    @property
    def label(self) -> str:
        return self.eq_label


@dataclass(frozen=True)
class LimitCycle:
    N_min: float
    N_max: float
    P_min: float
    P_max: float
    period_estimate: float | None = None

    label = "cycle"


@dataclass(frozen=True)
class Undetermined:
    reason: str = ""

    label = "undetermined"


AttractorId = Union[FixedPoint, LimitCycle, Undetermined]


@dataclass
class TailSummary:
    N_min: float
    N_max: float
    P_min: float
    P_max: float
    N_mean: float
    P_mean: float
    final: State
    period: float | None = None
    # prey range over the first and second half of the tail window
    N_range_halves: tuple[float, float] | None = None


def tail_summary(traj: Trajectory, tail_frac: float = TAIL_FRAC) -> TailSummary:
    t = traj.times
    t0 = t[0] + (1.0 - tail_frac) * (t[-1] - t[0])
    sel = t >= t0
    tt = t[sel]
    Nt, Pt = traj.N[sel], traj.P[sel]
    span = tt[-1] - tt[0]
    if span > 0:
        N_mean = float(np.trapezoid(Nt, tt) / span)
        P_mean = float(np.trapezoid(Pt, tt) / span)
    else:
        N_mean, P_mean = float(Nt[-1]), float(Pt[-1])
    first = tt < t0 + 0.5 * (t[-1] - t0)
    halves = None
    if first.any() and (~first).any():
        halves = (float(np.ptp(Nt[first])), float(np.ptp(Nt[~first])))
    return TailSummary(
        N_min=float(Nt.min()), N_max=float(Nt.max()),
        P_min=float(Pt.min()), P_max=float(Pt.max()),
        N_mean=N_mean, P_mean=P_mean,
        final=traj.final,
        period=_period_estimate(tt, Nt - N_mean),
        N_range_halves=halves,
    )


def _period_estimate(t: np.ndarray, x: np.ndarray) -> float | None:
    up = np.nonzero((x[:-1] < 0) & (x[1:] >= 0))[0]
    if len(up) < 2:
        return None
    # linear interpolation of each upward crossing
    tc = t[up] - x[up] * (t[up + 1] - t[up]) / (x[up + 1] - x[up])
    return float(np.mean(np.diff(tc)))


def classify_tail(s: TailSummary, eqs: ExistenceReport, fp_tol: float = FP_TOL,
                  cycle_amp_tol: float = CYCLE_AMP_TOL) -> AttractorId:
    values = (s.N_min, s.N_max, s.P_min, s.P_max)
    if not all(math.isfinite(v) for v in values):
        return Undetermined("non-finite tail")
    best = None
    for e in eqs.equilibria:
        dist = max(abs(s.N_min - e.N), abs(s.N_max - e.N), abs(s.P_min - e.P), abs(s.P_max - e.P))
        if dist <= fp_tol and (best is None or dist < best[0]):
            best = (dist, e)
    if best is not None:
        return FixedPoint(best[1].label, best[1].state)
    ampN = (s.N_max - s.N_min) / max(abs(s.N_mean), 1e-300)
    ampP = (s.P_max - s.P_min) / max(abs(s.P_mean), 1e-300)
    if ampN > cycle_amp_tol and ampP > cycle_amp_tol:
        if s.N_range_halves is not None:
            r1, r2 = s.N_range_halves
            if abs(r1 - r2) > CYCLE_PERSIST_TOL * max(r1, r2):
                return Undetermined(f"oscillation still transient (prey range {r1:.3g} then {r2:.3g})")
        return LimitCycle(s.N_min, s.N_max, s.P_min, s.P_max, s.period)
    return Undetermined(f"tail neither settled nor oscillating (relative amplitudes {ampN:.3g}, {ampP:.3g})")


def classify_attractor(p: ModelParams, traj: Trajectory, eqs: ExistenceReport | None = None, *,
                       tail_frac: float = TAIL_FRAC, fp_tol: float = FP_TOL,
                       cycle_amp_tol: float = CYCLE_AMP_TOL) -> AttractorId:
    """Identify the long-run behaviour from the last ``tail_frac`` of ``traj``.

    A fixed point wins when every tail sample lies within ``fp_tol``
    (componentwise) of a known equilibrium; otherwise a bounded tail whose
    prey and predator ranges both exceed ``cycle_amp_tol`` relative to their
    means is a limit cycle.
    """
    if eqs is None:
        eqs = all_equilibria(p)
    return classify_tail(tail_summary(traj, tail_frac), eqs, fp_tol, cycle_amp_tol)


def write_trajectory_csv(traj: Trajectory, fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "N", "P"])
    for t, (N, P) in zip(traj.times.tolist(), traj.states.tolist()):
        w.writerow([repr(t), repr(N), repr(P)])
