"""Cone projection: PAVA, Dykstra, the min-max oracle, KKT certificates."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from isodag.orders import Dag, LatticeSpec, build_lattice, is_isotonic
from isodag.solvers import (
    CertificateError,
    ConvergenceError,
    IsotonicProblem,
    is_chain,
    lse_fit,
    minmax_project_oracle,
    pava_chain,
    project_dykstra,
    verify_projection_certificate,
)

finite_floats = st.floats(min_value=-50, max_value=50, allow_nan=False)


def random_dag(rng, n, p=0.35):
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Dag.from_edges(n, edges)


# ---------------------------------------------------------------------------
# PAVA


def test_pava_sorted_input_unchanged():
    y = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(pava_chain(y, np.ones(3)), y)


def test_pava_single_violation_pools():
    out = pava_chain(np.array([2.0, 1.0]), np.ones(2))
    assert np.allclose(out, [1.5, 1.5])


def test_pava_weighted_pool():
    # pooled value is the weighted mean
    out = pava_chain(np.array([3.0, 0.0]), np.array([1.0, 3.0]))
    assert np.allclose(out, [0.75, 0.75])


def test_pava_decreasing_input_pools_to_mean():
    y = np.arange(10, 0, -1, dtype=float)
    out = pava_chain(y, np.ones(10))
    assert np.allclose(out, np.full(10, y.mean()))


@given(arrays(np.float64, st.integers(1, 30), elements=finite_floats))
@settings(max_examples=80, deadline=None)
def test_pava_matches_reference(y):
    """Cross-check against the compiled reference implementation."""
    from scipy.optimize import isotonic_regression

    ours = pava_chain(y, np.ones(y.size))
    ref = isotonic_regression(y).x
    assert np.allclose(ours, ref, atol=1e-10)


@given(arrays(np.float64, st.integers(1, 25), elements=finite_floats),
       st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_pava_is_projection(y, seed):
    """Nondecreasing output; optimal vs random isotonic competitors."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.5, 2.0, y.size)
    out = pava_chain(y, w)
    assert np.all(np.diff(out) >= -1e-12)
    for _ in range(5):
        other = np.sort(rng.uniform(y.min() - 1, y.max() + 1, y.size))
        assert np.dot(w, (y - out) ** 2) <= np.dot(w, (y - other) ** 2) + 1e-9


# ---------------------------------------------------------------------------
# solver agreement and certificates


def test_is_chain():
    assert is_chain(build_lattice(LatticeSpec((4,))))
    assert not is_chain(build_lattice(LatticeSpec((2, 2))))
    assert is_chain(Dag(1, []))


def test_dykstra_matches_oracle_small():
    rng = np.random.default_rng(0)
    for trial in range(25):
        n = int(rng.integers(2, 9))
        dag = random_dag(rng, n)
        y = rng.standard_normal(n)
        prob = IsotonicProblem(dag, y)
        ours = project_dykstra(prob, tol=1e-10).theta_hat
        oracle = minmax_project_oracle(prob)
        assert np.max(np.abs(ours - oracle)) < 1e-7, f"trial {trial}"


def test_dykstra_matches_oracle_weighted():
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = int(rng.integers(2, 8))
        dag = random_dag(rng, n)
        w = rng.uniform(0.2, 3.0, n)
        prob = IsotonicProblem(dag, rng.standard_normal(n), w)
        ours = project_dykstra(prob, tol=1e-10).theta_hat
        oracle = minmax_project_oracle(prob)
        assert np.max(np.abs(ours - oracle)) < 1e-7


def test_certificate_accepts_true_projection():
    rng = np.random.default_rng(3)
    dag = build_lattice(LatticeSpec((3, 3)))
    y = rng.standard_normal(9)
    res = lse_fit(dag, y, certify=True)
    assert res.certificate is not None
    assert res.certificate.reconstruction_error < 1e-6
    assert np.all(res.certificate.edge_multipliers >= 0)


def test_certificate_rejects_non_projection():
    dag = build_lattice(LatticeSpec((4,)))
    y = np.array([3.0, 1.0, 2.0, 0.0])
    prob = IsotonicProblem(dag, y)
    # isotonic but not the projection: residual correlates with feasible moves
    bogus = np.array([0.0, 0.5, 1.0, 1.5])
    with pytest.raises(CertificateError):
        verify_projection_certificate(prob, bogus)
    # not even isotonic
    with pytest.raises(CertificateError) as exc:
        verify_projection_certificate(prob, np.array([1.0, 0.0, 0.0, 0.0]))
    assert exc.value.condition == "isotonic"


def test_certificate_on_exact_data():
    # already isotonic input: projection is the identity, multipliers vanish
    dag = build_lattice(LatticeSpec((4,)))
    y = np.array([0.0, 1.0, 2.0, 3.0])
    cert = verify_projection_certificate(IsotonicProblem(dag, y), y.copy())
    assert cert.reconstruction_error < 1e-12


def test_convergence_error_carries_result():
    dag = build_lattice(LatticeSpec((3, 3, 3)))
    y = np.random.default_rng(1).standard_normal(27)
    with pytest.raises(ConvergenceError) as exc:
        project_dykstra(IsotonicProblem(dag, y), tol=1e-14, max_sweeps=2)
    partial = exc.value.result
    assert partial.theta_hat.shape == (27,)
    assert partial.iterations == 2


def test_lse_fit_dispatch_and_errors():
    chain = build_lattice(LatticeSpec((6,)))
    square = build_lattice(LatticeSpec((3, 3)))
    y = np.random.default_rng(5).standard_normal(6)
    a = lse_fit(chain, y, solver="auto").theta_hat
    b = lse_fit(chain, y, solver="pava").theta_hat
    c = lse_fit(chain, y, solver="dykstra").theta_hat
    d = lse_fit(chain, y, solver="oracle").theta_hat
    assert np.array_equal(a, b)
    assert np.max(np.abs(a - c)) < 1e-8
    assert np.max(np.abs(a - d)) < 1e-8
    with pytest.raises(ValueError):
        lse_fit(square, np.zeros(9), solver="pava")
    with pytest.raises(ValueError):
        lse_fit(square, np.zeros(9), solver="nope")
    with pytest.raises(ValueError):
        lse_fit(square, np.zeros(8))


# ---------------------------------------------------------------------------
# projection properties (cone geometry)


@st.composite
def dag_and_data(draw, max_n=8):
    n = draw(st.integers(2, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    dag = random_dag(rng, n)
    y = draw(arrays(np.float64, n, elements=finite_floats))
    return dag, y


@given(dag_and_data())
@settings(max_examples=50, deadline=None)
def test_projection_idempotent(case):
    dag, y = case
    theta = lse_fit(dag, y, tol=1e-10).theta_hat
    again = lse_fit(dag, theta, tol=1e-10).theta_hat
    assert np.max(np.abs(again - theta)) < 1e-7
    assert is_isotonic(dag, theta, tol=1e-8)


@given(dag_and_data(), dag_and_data())
@settings(max_examples=40, deadline=None)
def test_projection_nonexpansive(case_a, case_b):
    dag, y1 = case_a
    _, y2raw = case_b
    rng = np.random.default_rng(len(y1))
    y2 = y2raw[: len(y1)] if len(y2raw) >= len(y1) else rng.standard_normal(len(y1))
    t1 = lse_fit(dag, y1, tol=1e-10).theta_hat
    t2 = lse_fit(dag, y2, tol=1e-10).theta_hat
    assert np.linalg.norm(t1 - t2) <= np.linalg.norm(y1 - y2) + 1e-6


@given(dag_and_data(), st.floats(min_value=0.0, max_value=10.0))
@settings(max_examples=40, deadline=None)
def test_projection_positively_homogeneous(case, scale):
    dag, y = case
    t = lse_fit(dag, y, tol=1e-10).theta_hat
    ts = lse_fit(dag, scale * y, tol=1e-10).theta_hat
    assert np.max(np.abs(ts - scale * t)) < 1e-6 * max(1.0, scale)


@pytest.mark.parametrize("scale", [2.0 ** -52, 1e-300, 1e-20, 1e6])
def test_projection_converges_far_from_unit_scale(scale):
    # Dykstra's path-family projection must be scale-free: the offsets that
    # keep disjoint paths from interacting have to grow and shrink with the
    # data, or data far below the offset is quantized to the offset's ulp
    # and the sweeps stall short of every tolerance.
    dag = Dag.from_edges(6, [(0, 2), (0, 4), (1, 2), (2, 5)])
    y = np.array([0.0, 0.0, 0.0, 0.0, 0.0, -34.0])
    base = lse_fit(dag, y, tol=1e-10).theta_hat
    res = lse_fit(dag, scale * y, tol=1e-10)
    assert res.iterations < 1000
    assert np.max(np.abs(res.theta_hat - scale * base)) <= 1e-8 * scale * 34.0


@given(dag_and_data(), st.floats(min_value=-20, max_value=20, allow_nan=False))
@settings(max_examples=40, deadline=None)
def test_projection_translation_by_constants(case, c):
    # constants are in the cone's lineality space
    dag, y = case
    t = lse_fit(dag, y, tol=1e-10).theta_hat
    tc = lse_fit(dag, y + c, tol=1e-10).theta_hat
    assert np.max(np.abs(tc - (t + c))) < 1e-7


@given(dag_and_data())
@settings(max_examples=50, deadline=None)
def test_projection_mean_range_pythagoras(case):
    dag, y = case
    res = lse_fit(dag, y, tol=1e-10)
    t = res.theta_hat
    # weighted mean preserved (constants are feasible directions both ways)
    assert abs(t.mean() - y.mean()) < 1e-8
    # fitted values stay inside the data range
    assert t.min() >= y.min() - 1e-8 and t.max() <= y.max() + 1e-8
    # cone Pythagoras: |y|^2 = |y-t|^2 + |t|^2 + 2<y-t, t>, with the cross term ~ 0
    cross = float(np.dot(y - t, t))
    assert abs(cross) <= 1e-6 * max(1.0, float(np.dot(y, y)))


@given(dag_and_data())
@settings(max_examples=30, deadline=None)
def test_oracle_agreement_property(case):
    dag, y = case
    prob = IsotonicProblem(dag, y)
    ours = project_dykstra(prob, tol=1e-10).theta_hat
    oracle = minmax_project_oracle(prob)
    assert np.max(np.abs(ours - oracle)) < 1e-6


# ---------------------------------------------------------------------------
# chains at scale


@pytest.mark.parametrize("n", [10, 100, 1000])
def test_dykstra_equals_pava_on_chains(n):
    rng = np.random.default_rng(n)
    dag = build_lattice(LatticeSpec((n,)))
    y = rng.standard_normal(n)
    via_pava = lse_fit(dag, y, solver="pava").theta_hat
    via_dykstra = lse_fit(dag, y, solver="dykstra").theta_hat
    assert np.max(np.abs(via_pava - via_dykstra)) < 1e-9


def test_problem_validation():
    dag = build_lattice(LatticeSpec((3,)))
    with pytest.raises(ValueError):
        IsotonicProblem(dag, np.zeros(4))
    with pytest.raises(ValueError):
        IsotonicProblem(dag, np.zeros(3), weights=np.array([1.0, -1.0, 1.0]))
    with pytest.raises(ValueError):
        IsotonicProblem(dag, np.array([0.0, np.nan, 1.0]))
