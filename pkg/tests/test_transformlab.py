import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boundary_index import transformlab as tl


def _rand(rng, m, n):
    return rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))


def test_bounded_transform_examples():
    np.testing.assert_array_equal(tl.bounded_transform(np.zeros((3, 2))),
                                  np.zeros((3, 2)))
    np.testing.assert_allclose(tl.bounded_transform(np.array([[3.0]])),
                               [[3 / np.sqrt(10)]])


@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 6))
def test_bounded_transform_kernel_range_and_norm(seed, m, n):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(0, min(m, n) + 1))
    T = _rand(rng, m, r) @ _rand(rng, r, n)
    F = tl.bounded_transform(T)
    assert np.linalg.norm(F, 2) < 1
    # same range: projecting F onto ran T loses nothing, and vice versa
    PT = _proj(T)
    PF = _proj(F)
    assert np.linalg.norm(PT - PF) <= 1e-8
    assert np.linalg.norm(_proj(T.conj().T) - _proj(F.conj().T)) <= 1e-8


def _proj(X, tol=1e-9):
    U, s, _ = np.linalg.svd(X)
    r = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0)))
    return U[:, :r] @ U[:, :r].conj().T


@given(st.integers(0, 10_000))
def test_bounded_transform_unitary_equivariance(seed):
    rng = np.random.default_rng(seed)
    T = _rand(rng, 5, 5)
    U, _ = np.linalg.qr(_rand(rng, 5, 5))
    lhs = tl.bounded_transform(U @ T @ U.conj().T)
    rhs = U @ tl.bounded_transform(T) @ U.conj().T
    assert np.linalg.norm(lhs - rhs) <= 1e-12


def test_baaj_julg_scalar_and_zero():
    assert abs(tl.baaj_julg_quadrature(np.array([[1.0]]), 200)[0, 0]
               - 1 / np.sqrt(2)) < 1e-8
    np.testing.assert_array_equal(tl.baaj_julg_quadrature(np.zeros((2, 2)),
                                                          16), 0)
    with pytest.raises(ValueError):
        tl.baaj_julg_quadrature(np.eye(2), 4)


def test_baaj_julg_convergence_on_random_matrices():
    rng = np.random.default_rng(11)
    floor = 1e-13   # double-precision floor of the comparison
    for _ in range(20):
        T = _rand(rng, 20, 20)
        T *= rng.uniform(1, 5) / np.linalg.norm(T, 2)
        F = tl.bounded_transform(T)
        errs = [np.linalg.norm(tl.baaj_julg_quadrature(T, n) - F, 2)
                / np.linalg.norm(F, 2) for n in (25, 50, 100, 200)]
        assert errs[-1] <= 1e-6
        for a, b in zip(errs, errs[1:]):
            assert b <= max(a / 2, floor)


def test_baaj_julg_with_slow_convergence_still_halves():
    # large norm moves the integrand poles towards the real interval
    T = np.diag([10.0, 7.0, 0.5])
    F = tl.bounded_transform(T)
    errs = [np.linalg.norm(tl.baaj_julg_quadrature(T, n) - F, 2)
            for n in (8, 16, 32)]
    assert errs[1] <= errs[0] / 2 and errs[2] <= max(errs[1] / 2, 1e-13)


def test_polar_limit_examples():
    V, rows = tl.polar_isometry_limit(np.diag([2.0, 0.0]), [0.1])
    np.testing.assert_allclose(V, np.diag([1.0, 0.0]), atol=1e-15)
    assert rows[0]["bound"] == pytest.approx(0.0125)
    assert rows[0]["error"] == pytest.approx(1 - 2 / np.sqrt(4.1))
    assert rows[0]["error"] <= rows[0]["bound"]


@given(st.integers(0, 10_000))
def test_polar_limit_bound_and_unitarity(seed):
    rng = np.random.default_rng(seed)
    T = _rand(rng, 6, 6)
    V, rows = tl.polar_isometry_limit(T, [1e-1, 1e-2, 1e-3, 1e-4])
    assert np.linalg.norm(V.conj().T @ V - np.eye(6)) <= 1e-10
    for r in rows:
        assert r["error"] <= r["bound"] * (1 + 1e-9)


def test_polar_limit_requires_decreasing_deltas():
    with pytest.raises(ValueError):
        tl.polar_isometry_limit(np.eye(2), [0.1, 0.2])


def test_resolvent_identities_over_draws():
    rng = np.random.default_rng(5)
    for _ in range(50):
        op = tl.FiniteOperator.random(rng, int(rng.integers(4, 14)))
        res = tl.verify_resolvent_identities(op, 1 + 4 * rng.random())
        assert res["commutator_inverse"] <= 1e-12
        assert res["bounded_transform_commutator"] <= 1e-12
        assert res["almost_selfadjoint"] <= 1e-10


def test_defects_vanish_under_domain_hypotheses():
    # j supported on the small domain and T_e block-diagonal w.r.t. P
    rng = np.random.default_rng(6)
    n = 8
    mask = np.array([False] + [True] * (n - 2) + [False])
    Te = _rand(rng, n, n)
    Te[np.ix_(~mask, mask)] = 0
    Te[np.ix_(mask, ~mask)] = 0
    j = np.where(mask, rng.uniform(0, 1, n), 0.0)
    op = tl.FiniteOperator(Te, mask, j, rng.uniform(0, 1, n))
    res = tl.verify_resolvent_identities(op, 2.0)
    assert res["orthogonality_defect"] <= 1e-14


def test_finite_operator_validation():
    with pytest.raises(ValueError):
        tl.FiniteOperator(np.eye(3), [True] * 3, [0, 2, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        tl.FiniteOperator(np.eye(3), [True] * 2, [0, 0, 0], [0, 0, 0])


def test_decay_probe_trivial_cases():
    rows = tl.compactness_decay_probe("first", lambda x: np.zeros_like(x),
                                      (16, 32))
    assert all(max(r["sv_j_F_minus_Fstar"]) == 0 for r in rows)
    rows = tl.compactness_decay_probe("selfadjoint",
                                      lambda x: np.ones_like(x), (16, 32))
    assert all(max(r["sv_j_F_minus_Fstar"]) <= 1e-12 for r in rows)


def test_decay_probe_converges_and_decays_in_k():
    rows = tl.compactness_decay_probe("first", sizes=(64, 128, 256))
    s = np.array([r["sv_j_F_minus_Fstar"] for r in rows])
    # fixed k: values settle as the truncation grows
    assert np.abs(s[2] - s[1]).max() <= np.abs(s[1] - s[0]).max() + 1e-12
    assert np.abs(s[2] - s[1]).max() <= 0.01
    # decay in k at the largest size
    assert s[2, 7] <= 0.05 * s[2, 0]


@pytest.mark.xfail(strict=True, reason="the k=5 singular value of the "
                   "-i d/dx probe converges to its limit from below, so "
                   "the triple increases slightly")
def test_decay_probe_fifth_value_non_increasing():
    rows = tl.compactness_decay_probe("first", sizes=(64, 128, 256))
    trip = [r["sv_j_F_minus_Fstar"][4] for r in rows]
    assert trip[0] >= trip[1] >= trip[2]
