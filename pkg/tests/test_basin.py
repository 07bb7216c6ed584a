import io

import numpy as np
import pytest

from allee_defense.basin import bistability_report, cell_centers, cell_state, compute_basin, write_basin_csv
from allee_defense.dynamics import FixedPoint, classify_tail, integrate_batch
from allee_defense.equilibria import all_equilibria
from allee_defense.stability import classify

from .conftest import table1, table2

FIG4A = table1(c=0.1, h=0.4)
FIG7B = table2(b=0.7, h=0.4)
FIG7C = table2(b=1.1, h=0.4)


@pytest.fixture(scope="module")
def fig4a():
    return compute_basin(FIG4A, resolution=(21, 21))


class TestExamples:
    def test_fig4a_bistable(self, fig4a):
        labels = set(fig4a.labels().ravel())
        assert labels == {"E0", "E1"}
        rep = bistability_report(fig4a)
        assert rep.attractors == ["E0", "E1"]
        assert all(s > 0.05 for s in rep.shares.values())
        assert rep.boundary_cells

    def test_fig7b_bistable(self):
        labels = set(compute_basin(FIG7B, resolution=(21, 21)).labels().ravel())
        assert labels == {"E0", "E5"}

    def test_global_convergence_to_E5(self):
        g = compute_basin(table1(c=0.3), resolution=(11, 11))
        rep = bistability_report(g)
        assert rep.shares == {"E5": 1.0}
        assert rep.boundary_cells == []

    def test_fig7c_subset(self):
        rep = bistability_report(compute_basin(FIG7C, resolution=(21, 21)))
        assert set(rep.attractors) <= {"E0", "E1"}


class TestProperties:
    def test_shape_and_centers(self, fig4a):
        assert fig4a.resolution == (21, 21)
        assert len(fig4a.cells) == 21 and all(len(row) == 21 for row in fig4a.cells)
        np.testing.assert_allclose(fig4a.N_centers, cell_centers(0, 1, 21))
        assert cell_state(fig4a, 0, 0) == (pytest.approx(1 / 42), pytest.approx(1 / 42))

    def test_shares_sum_to_one(self, fig4a):
        assert sum(bistability_report(fig4a).shares.values()) == pytest.approx(1.0)

    @pytest.mark.parametrize("p", [table1(c=0.3), table1(c=0.4), FIG7B])
    def test_prey_axis_never_coexistence(self, p):
        # cell centers never sit on P = 0, so the prey edge is probed directly
        starts = np.column_stack([cell_centers(0, 1, 21), np.zeros(21)])
        res = integrate_batch(p, starts)
        eqs = all_equilibria(p)
        assert np.all(res.final[:, 1] == 0.0)
        for k in range(21):
            assert classify_tail(res.summary(k), eqs).label in ("E0", "E1", "E2", "E3")

    @pytest.mark.parametrize("p", [FIG4A, FIG7B, table1(c=0.3)])
    def test_cell_containing_stable_equilibrium(self, p):
        n = 41
        g = compute_basin(p, resolution=(n, n))
        for e in all_equilibria(p).equilibria:
            if e.N <= 0 or not classify(p, e).classification.is_stable:
                continue
            i = min(int(e.N * n), n - 1)
            j = min(int(e.P * n), n - 1)
            # holds even though the cell center sits farther than fp_tol from the equilibrium
            assert g.cells[i][j].label == e.label

    @pytest.mark.parametrize("p", [FIG4A, FIG7B, FIG7C])
    def test_refinement_stable(self, p):
        coarse = bistability_report(compute_basin(p, resolution=(21, 21))).shares
        fine = bistability_report(compute_basin(p, resolution=(41, 41))).shares
        for lab in set(coarse) | set(fine):
            assert abs(coarse.get(lab, 0.0) - fine.get(lab, 0.0)) < 0.10

    def test_deterministic(self, fig4a):
        again = compute_basin(FIG4A, resolution=(21, 21))
        assert np.array_equal(again.labels(), fig4a.labels())

    def test_subgrid_matches(self, fig4a):
        # a cell's result depends only on its own start: a one-row grid reproduces row 5
        Nc = fig4a.N_centers
        half = (Nc[1] - Nc[0]) / 2
        sub = compute_basin(FIG4A, (Nc[5] - half, Nc[6] + half), (0.0, 1.0), (2, 21))
        assert [a.label for a in sub.cells[0]] == [a.label for a in fig4a.cells[5]]
        assert [a.label for a in sub.cells[1]] == [a.label for a in fig4a.cells[6]]

    def test_fixed_points_carry_state(self, fig4a):
        a = fig4a.cells[20][0]
        assert isinstance(a, FixedPoint)
        assert a.state == all_equilibria(FIG4A).get(a.label).state

    @pytest.mark.parametrize("kw", [{"resolution": (1, 5)}, {"N_range": (1.0, 0.5)}, {"P_range": (-1.0, 1.0)}])
    def test_bad_grids(self, kw):
        with pytest.raises(ValueError):
            compute_basin(FIG4A, **kw)


def test_csv(fig4a):
    buf = io.StringIO()
    write_basin_csv(fig4a, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "N0,P0,attractor_label"
    assert len(lines) == 1 + 21 * 21
    N0, P0, lab = lines[1].split(",")
    assert float(N0) == fig4a.N_centers[0] and float(P0) == fig4a.P_centers[0]
    assert lab == fig4a.cells[0][0].label
