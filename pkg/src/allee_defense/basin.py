"""Basins of attraction on a grid of initial states."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .dynamics import (
    FP_TOL,
    AttractorId,
    FixedPoint,
    IntegratorConfig,
    LimitCycle,
    TAIL_FRAC,
    Undetermined,
    classify_tail,
    integrate,
    integrate_batch,
    tail_summary,
)
from .equilibria import all_equilibria
from .model import ModelParams, State

CHUNK = 4096


@dataclass
class BasinGrid:
    N_range: tuple[float, float]
    P_range: tuple[float, float]
    resolution: tuple[int, int]
    cells: list[list[AttractorId]]  # cells[i][j]: i-th prey center, j-th predator center
    params: ModelParams
    N_centers: np.ndarray = field(repr=False, default=None)
    P_centers: np.ndarray = field(repr=False, default=None)

    def labels(self) -> np.ndarray:
        return np.array([[a.label for a in row] for row in self.cells], dtype=object)


@dataclass
class BasinSummary:
    shares: dict[str, float]
    boundary_cells: list[tuple[int, int]]

    @property
    def attractors(self) -> list[str]:
        return list(self.shares)


def cell_centers(lo: float, hi: float, n: int) -> np.ndarray:
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


def compute_basin(p: ModelParams, N_range=(0.0, 1.0), P_range=(0.0, 1.0), resolution=(41, 41),
                  cfg: IntegratorConfig | None = None, *, tail_frac: float = TAIL_FRAC,
                  fp_tol: float = FP_TOL) -> BasinGrid:
    """Integrate from every cell center and classify where each trajectory ends up."""
    nN, nP = int(resolution[0]), int(resolution[1])
    if nN < 2 or nP < 2:
        raise ValueError(f"basin resolution must be at least 2x2, got {nN}x{nP}")
    for name, (lo, hi) in (("N_range", N_range), ("P_range", P_range)):
        if not 0 <= lo < hi:
            raise ValueError(f"{name} must satisfy 0 <= lo < hi, got {(lo, hi)}")
    cfg = cfg or IntegratorConfig()
    eqs = all_equilibria(p)
    e0 = eqs.get("E0")

    Nc = cell_centers(N_range[0], N_range[1], nN)
    Pc = cell_centers(P_range[0], P_range[1], nP)
    NN, PP = np.meshgrid(Nc, Pc, indexing="ij")
    starts = np.column_stack([NN.ravel(), PP.ravel()])
    cells: list[AttractorId] = [None] * len(starts)

    # with N = 0 the predator just decays to the origin
    on_axis = starts[:, 0] == 0.0
    for k in np.nonzero(on_axis)[0]:
        cells[k] = FixedPoint(e0.label, e0.state)

    todo = np.nonzero(~on_axis)[0]
    for lo in range(0, len(todo), CHUNK):
        idx = todo[lo:lo + CHUNK]
        res = integrate_batch(p, starts[idx], cfg, tail_frac)
        for j, k in enumerate(idx):
            if res.status[j] != 0:
                reason = "step size underflow" if res.status[j] == 1 else "max steps exceeded"
                cells[k] = Undetermined(f"integration failed: {reason}")
                continue
            att = classify_tail(res.summary(j), eqs, fp_tol)
            if isinstance(att, LimitCycle):
                # the batch run keeps no samples, so rerun this cell for a period estimate
                period = tail_summary(integrate(p, starts[k], cfg), tail_frac).period
                att = LimitCycle(att.N_min, att.N_max, att.P_min, att.P_max, period)
            cells[k] = att

    grid = [[cells[i * nP + j] for j in range(nP)] for i in range(nN)]
    return BasinGrid((float(N_range[0]), float(N_range[1])), (float(P_range[0]), float(P_range[1])),
                     (nN, nP), grid, p, Nc, Pc)


def bistability_report(g: BasinGrid) -> BasinSummary:
    labels = g.labels()
    total = labels.size
    counts = Counter(labels.ravel().tolist())
    shares = {lab: counts[lab] / total for lab in sorted(counts)}
    nN, nP = labels.shape
    boundary = []
    for i in range(nN):
        for j in range(nP):
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, j + dj
                if 0 <= a < nN and 0 <= b < nP and labels[a, b] != labels[i, j]:
                    boundary.append((i, j))
                    break
    return BasinSummary(shares, boundary)


def write_basin_csv(g: BasinGrid, fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["N0", "P0", "attractor_label"])
    for i, N0 in enumerate(g.N_centers.tolist()):
        for j, P0 in enumerate(g.P_centers.tolist()):
            w.writerow([repr(N0), repr(P0), g.cells[i][j].label])


def cell_state(g: BasinGrid, i: int, j: int) -> State:
    return State(float(g.N_centers[i]), float(g.P_centers[j]))
