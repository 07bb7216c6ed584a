import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from allee_defense.equilibria import Equilibrium, EquilibriumKind, all_equilibria, coexistence_points
from allee_defense.model import Matrix2, ModelParams, State, jacobian
from allee_defense.stability import (
    Classification,
    MissingEquilibrium,
    classify,
    classify_matrix,
    coexistence_trace,
    e1_transcritical_b,
    e1_transcritical_c,
    e5_point,
    eigenvalues_2x2,
)

from .conftest import table1, table2
from .strategies import params

finite = st.floats(-10, 10, allow_nan=False)


@st.composite
def two_coexistence_points(draw):
    """Parameters built so that both E4 and E5 exist with P > 0."""
    K = draw(st.floats(0.5, 5.0))
    w = K * draw(st.floats(0.05, 0.9))
    h = draw(st.floats(0.01, 2.0)) * w
    hstar = (K + w) ** 2 / (4 * K)
    assume(h < hstar * 0.99)
    D1 = (K - w) ** 2 - 4 * K * (h - w)
    N1 = ((K - w) + math.sqrt(D1)) / 2
    N2 = max(((K - w) - math.sqrt(D1)) / 2, 0.0)
    # the prey-nullcline bracket is positive strictly between the axial roots
    u = sorted(draw(st.lists(st.floats(0.05, 0.95), min_size=2, max_size=2, unique=True)))
    assume(u[1] - u[0] > 0.02)
    N5, N4 = N2 + u[0] * (N1 - N2), N2 + u[1] * (N1 - N2)
    delta = draw(st.floats(0.05, 2.0))
    return ModelParams(r=draw(st.floats(0.1, 3.0)), K=K, w=w, h=h, a=draw(st.floats(0.1, 3.0)),
                       b=N4 * N5, c=delta * (N4 + N5), delta=delta)


class TestEigenvalues:
    def test_diagonal(self):
        ev = eigenvalues_2x2(Matrix2(1 / 3, 0.0, 0.0, -0.1))
        assert ev.lambda1 == pytest.approx(1 / 3)
        assert ev.lambda2 == pytest.approx(-0.1)

    def test_rotation(self):
        ev = eigenvalues_2x2(Matrix2(0.0, -1.0, 1.0, 0.0))
        assert {ev.lambda1, ev.lambda2} == {1j, -1j}

    def test_e5_table1(self):
        m = jacobian(table1(), e5_point(table1()).state)
        ev = eigenvalues_2x2(m)
        assert ev.lambda1.imag != 0
        assert ev.lambda1.real == pytest.approx(-0.0120, abs=5e-4)
        assert ev.lambda1 == ev.lambda2.conjugate()
        assert m.det == pytest.approx(0.031925, abs=5e-6)

    def test_reduced_det_formula_carries_a(self):
        # On both nullclines a12 = -a delta / c, so det = a delta (c - 2 delta N) P / (c (b + N^2)).
        p = table1()
        N, P = e5_point(p).state
        reduced = p.delta * (p.c - 2 * p.delta * N) * P / (p.c * (p.b + N * N))
        assert reduced == pytest.approx(0.0532, abs=5e-4)
        assert jacobian(p, (N, P)).det == pytest.approx(p.a * reduced, rel=1e-12)

    @settings(max_examples=500)
    @given(finite, finite, finite, finite)
    def test_vieta(self, a11, a12, a21, a22):
        m = Matrix2(a11, a12, a21, a22)
        ev = eigenvalues_2x2(m)
        scale = max(1.0, abs(a11), abs(a12), abs(a21), abs(a22)) ** 2
        assert abs((ev.lambda1 + ev.lambda2) - m.trace) <= 1e-10 * scale
        assert abs(ev.lambda1 * ev.lambda2 - m.det) <= 1e-10 * scale

    @settings(max_examples=300)
    @given(finite, finite, finite, finite)
    def test_against_numpy(self, a11, a12, a21, a22):
        m = Matrix2(a11, a12, a21, a22)
        ev = eigenvalues_2x2(m)
        ref = np.linalg.eigvals(np.array(m.as_rows()))
        got = sorted([ev.lambda1, ev.lambda2], key=lambda z: (z.real, z.imag))
        ref = sorted(ref, key=lambda z: (z.real, z.imag))
        scale = max(1.0, np.abs(m.as_rows()).max())
        # eigenvalues of a defective matrix are only sqrt(eps)-conditioned
        for g, r in zip(got, ref):
            assert abs(g - r) <= 1e-6 * scale


class TestClassifyMatrix:
    @pytest.mark.parametrize(
        "m, expected",
        [
            (Matrix2(-1, 0, 0, -2), Classification.STABLE_NODE),
            (Matrix2(1, 0, 0, 2), Classification.UNSTABLE_NODE),
            (Matrix2(-0.1, -1, 1, -0.1), Classification.STABLE_FOCUS),
            (Matrix2(0.1, -1, 1, 0.1), Classification.UNSTABLE_FOCUS),
            (Matrix2(1, 0, 0, -1), Classification.SADDLE),
            (Matrix2(0, -1, 1, 0), Classification.NON_HYPERBOLIC),
            (Matrix2(0, 0, 0, -1), Classification.NON_HYPERBOLIC),
            (Matrix2(-1, 1, 0, -1), Classification.STABLE_NODE),  # repeated root counts as a node
        ],
    )
    def test_cases(self, m, expected):
        assert classify_matrix(m) is expected


class TestClassify:
    def test_E0_strong(self):
        p = table1(h=0.4)
        rep = classify(p, all_equilibria(p).get("E0"))
        assert rep.classification is Classification.STABLE_NODE
        assert sorted([rep.eigen.lambda1.real, rep.eigen.lambda2.real]) == [pytest.approx(-1 / 3), pytest.approx(-0.1)]
        assert "Theorem 7" in rep.theorem_note

    def test_E0_weak_is_saddle(self):
        p = table1(h=0.2)
        assert classify(p, all_equilibria(p).get("E0")).classification is Classification.SADDLE

    def test_E1_weak_stable_below_threshold(self):
        p = table1(c=0.1)
        rep = classify(p, all_equilibria(p).get("E1"))
        assert rep.classification is Classification.STABLE_NODE
        assert "Theorem 8" in rep.theorem_note
        assert "0.16735" in rep.theorem_note

    def test_E5_stable_focus(self):
        p = table1(c=0.3)
        rep = classify(p, all_equilibria(p).get("E5"))
        assert rep.classification is Classification.STABLE_FOCUS
        assert rep.trace == pytest.approx(-0.0240, abs=1e-3)
        assert rep.det > 0
        assert rep.trace**2 < 4 * rep.det
        assert "Theorem 10" in rep.theorem_note

    def test_rejects_foreign_equilibrium(self):
        e5 = all_equilibria(table1(c=0.3)).get("E5")
        with pytest.raises(ValueError, match="not an equilibrium"):
            classify(table1(c=0.4), e5)

    @settings(max_examples=300, deadline=None)
    @given(two_coexistence_points())
    def test_E4_saddle_E5_positive_det(self, p):
        pts = {e.label: e for e in coexistence_points(p)}
        assume({"E4", "E5"} <= set(pts))
        r4, r5 = classify(p, pts["E4"]), classify(p, pts["E5"])
        assert r4.det < 0
        assert r5.det > 0
        assert r4.classification in (Classification.SADDLE, Classification.NON_HYPERBOLIC)
        assert "Theorem 10(ii)" in r4.theorem_note
        assert r4.theorem_prediction == "unstable"

    def test_E6_non_hyperbolic(self):
        p = ModelParams(r=1, K=3, w=0.3, h=0.2, a=0.6, b=0.25, c=0.1, delta=0.1)
        e6 = all_equilibria(p).get("E6")
        rep = classify(p, e6)
        assert abs(rep.det) < 1e-8
        assert rep.classification is Classification.NON_HYPERBOLIC
        assert "Theorem 10(i)" in rep.theorem_note

    @given(st.floats(0.2, 3.0), st.floats(0.05, 0.9))
    def test_E3_non_hyperbolic(self, K, ratio):
        w = K * ratio
        p = table1(K=K, w=w, h=(K + w) ** 2 / (4 * K), c=0.01)
        rep = classify(p, all_equilibria(p).get("E3"))
        assert abs(rep.eigen.lambda1.real) < 1e-8 or abs(rep.eigen.lambda2.real) < 1e-8
        assert rep.classification is Classification.NON_HYPERBOLIC
        assert "Theorem 9(i)" in rep.theorem_note

    @settings(max_examples=500, deadline=None)
    @given(params())
    def test_theorem_and_spectrum_agree(self, p):
        for e in all_equilibria(p).equilibria:
            rep = classify(p, e)
            ev = rep.eigen
            assume(min(abs(ev.lambda1.real), abs(ev.lambda2.real)) > 1e-8 or rep.theorem_prediction == "nonhyperbolic")
            if rep.theorem_prediction == "stable":
                assert rep.classification.is_stable, (e, rep)
            elif rep.theorem_prediction == "unstable":
                assert not rep.classification.is_stable, (e, rep)
            elif rep.theorem_prediction == "nonhyperbolic":
                assert rep.classification is Classification.NON_HYPERBOLIC, (e, rep)

    @settings(max_examples=300)
    @given(params())
    def test_axial_lambda1_sign(self, p):
        # lambda1 = r N (h/(w+N)^2 - 1/K) is negative at E1 and positive at E2
        for e in all_equilibria(p).equilibria:
            if e.kind is EquilibriumKind.AXIAL and e.label in ("E1", "E2"):
                lam1 = jacobian(p, e.state).a11
                if e.label == "E1":
                    assert lam1 < 0
                else:
                    assert lam1 > 0


class TestThresholds:
    def test_transcritical_c(self):
        c_star = e1_transcritical_c(table1(h=0.2))
        assert c_star == pytest.approx(0.16736, abs=1e-4)
        assert c_star == pytest.approx(0.167, abs=5e-4)

    def test_threshold_identity(self):
        p = table1(h=0.2)
        q = p.with_value("c", e1_transcritical_c(p))
        N1 = all_equilibria(q).get("E1").N
        assert q.c * N1 / (q.b + N1 * N1) == pytest.approx(q.delta, rel=1e-14)

    def test_transcritical_b(self):
        assert e1_transcritical_b(table2(h=0.2)) == pytest.approx(0.9682, abs=1e-4)

    def test_strong_regime_rejected(self):
        with pytest.raises(MissingEquilibrium):
            e1_transcritical_c(table1(h=0.4))

    @pytest.mark.parametrize(
        "p, expected, tol",
        [(table1(c=0.3), -0.0240, 1e-3), (table1(c=0.359), 0.0, 1e-3), (table2(b=0.465), 0.0, 1e-3)],
    )
    def test_coexistence_trace(self, p, expected, tol):
        assert coexistence_trace(p) == pytest.approx(expected, abs=tol)

    def test_trace_matches_full_jacobian(self):
        p = table1(c=0.33)
        assert coexistence_trace(p) == pytest.approx(jacobian(p, e5_point(p).state).trace, abs=1e-14)

    def test_trace_without_E5(self):
        with pytest.raises(MissingEquilibrium):
            coexistence_trace(table1(c=0.1))


def test_equilibrium_kind_roundtrip():
    e = Equilibrium("E0", EquilibriumKind.TRIVIAL, State(0.0, 0.0))
    assert classify(table1(), e).equilibrium is e
