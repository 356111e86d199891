import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boundary_index import calderon as cd
from boundary_index import symbolcore as sc
from boundary_index.errors import NotIdempotent, SpectralGapViolation
from oracles import (LAPLACIAN_CALDERON, LAPLACIAN_CALDERON_XI2,
                     eig_projector, random_idempotent, range_projector)

OPS = [sc.cauchy_riemann(), sc.dbar_power(2), sc.laplacian(),
       sc.bilaplacian()]


def test_laplacian_projector_frozen_value():
    node = sc.BoundaryNode(0.0, 1)
    for fn in (cd.e_plus_projector, cd.hormander_symbol):
        np.testing.assert_allclose(fn(sc.laplacian(), node),
                                   LAPLACIAN_CALDERON, atol=1e-12)


def test_order_reduction_recovers_cosphere_value():
    node = sc.BoundaryNode(0.0, 1)
    P2 = cd.hormander_symbol(sc.laplacian(), node, xi_scale=2.0)
    np.testing.assert_allclose(P2, LAPLACIAN_CALDERON_XI2, atol=1e-12)
    np.testing.assert_allclose(cd.dn_order_reduce(P2, 2, 1, 2.0),
                               LAPLACIAN_CALDERON, atol=1e-12)


@pytest.mark.parametrize("spec", OPS, ids=lambda s: s.name)
def test_two_routes_agree_and_are_idempotent(spec):
    for th in np.linspace(0, 2 * np.pi, 9)[:-1]:
        for xi in (1, -1):
            node = sc.BoundaryNode(th, xi)
            P1 = cd.e_plus_projector(spec, node)
            P2 = cd.hormander_symbol(spec, node)
            assert np.linalg.norm(P1 - P2, 2) < 1e-10
            assert cd.idempotency_defect(P2) < 1e-10


def test_e_plus_ranks():
    assert cd.e_plus_rank(sc.cauchy_riemann(), 1) == 1
    assert cd.e_plus_rank(sc.cauchy_riemann(), -1) == 0
    assert cd.e_plus_rank(sc.dbar_power(2), 1) == 2
    assert cd.e_plus_rank(sc.dbar_power(2), -1) == 0
    assert cd.e_plus_rank(sc.laplacian(), 1) == 1
    assert cd.e_plus_rank(sc.laplacian(), -1) == 1
    assert cd.e_plus_rank(sc.bilaplacian(), -1) == 2


def test_riesz_projector_against_eigendecomposition():
    rng = np.random.default_rng(0)
    for _ in range(10):
        A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        split = cd.riesz_projector(A)
        np.testing.assert_allclose(split.p_minus_re, eig_projector(A),
                                   atol=1e-8)
        assert np.linalg.norm(split.p_minus_re @ A - A @ split.p_minus_re) \
            < 1e-10


def test_riesz_projector_spectral_gap_violation():
    with pytest.raises(SpectralGapViolation):
        cd.riesz_projector(np.diag([1j, -1.0]))


def test_matrix_valued_system_routes_agree():
    # Cauchy--Riemann type system with a non-normal coupling
    C10 = np.array([[1j, 0.3], [0.0, 1j]])
    C01 = np.array([[-1.0, 0.0], [0.2, -1.0]])
    spec = sc.OperatorSpec(1, 2, 2, "disc", {(1, 0): C10, (0, 1): C01})
    for th in (0.0, 1.0, 4.0):
        node = sc.BoundaryNode(th, 1)
        np.testing.assert_allclose(cd.e_plus_projector(spec, node),
                                   cd.hormander_symbol(spec, node),
                                   atol=1e-10)


def test_interval_projector_routes_agree():
    spec = sc.interval_operator([[[1.0, 0.2], [0.0, 1.0]],
                                 [[0.1, 0.0], [0.3, 0.2]],
                                 [[2.0, 0.0], [0.0, 3.0]]])
    for node in sc.CosphereGrid("interval").nodes:
        np.testing.assert_allclose(cd.e_plus_projector(spec, node),
                                   cd.hormander_symbol(spec, node),
                                   atol=1e-10)


def test_symbol_field_ranks_constant_on_components():
    f = cd.symbol_field(sc.dbar_power(2), sc.CosphereGrid("disc", 16),
                        "hormander")
    assert f.rank_on_component(1) == 2
    assert f.rank_on_component(-1) == 0
    assert max(f.defects) < 1e-10


@given(st.integers(0, 10_000), st.integers(2, 8))
def test_kaplansky_properties(seed, n):
    rng = np.random.default_rng(seed)
    rank = int(rng.integers(0, n + 1))
    e = random_idempotent(rng, n, rank)
    p = cd.kaplansky_projection(e)
    assert np.linalg.norm(p - p.conj().T) < 1e-9
    assert np.linalg.norm(p @ p - p) < 1e-9
    assert np.linalg.norm(e @ p - p) < 1e-9
    assert np.linalg.norm(p @ e - e) < 1e-9
    np.testing.assert_allclose(p, range_projector(e), atol=1e-8)


def test_kaplansky_rejects_non_idempotent():
    with pytest.raises(NotIdempotent):
        cd.kaplansky_projection(np.array([[1.0, 1.0], [0.0, 0.5]]))


def test_contour_route_for_clustered_roots():
    # bilaplacian: double roots; forced through the contour branch
    node = sc.BoundaryNode(0.4, 1)
    poly = sc.principal_symbol(sc.bilaplacian(), node)
    R = cd.upper_residues(poly, 6)
    # residues of xi^p/(xi^2+1)^2 at i: d/dxi [xi^p/(xi+i)^2] at xi=i
    want = [(p * 1j ** (p - 1) * (2j) - 2 * 1j ** p) / (2j) ** 3
            for p in range(7)]
    np.testing.assert_allclose(R[:, 0, 0], want, atol=1e-12)


@given(st.integers(0, 10_000), st.integers(2, 8))
def test_kaplansky_formula_agrees_with_schur_route(seed, n):
    rng = np.random.default_rng(seed)
    e = random_idempotent(rng, n, int(rng.integers(0, n + 1)), cond_max=30)
    np.testing.assert_allclose(cd.kaplansky_formula(e),
                               cd.kaplansky_projection(e), atol=1e-9)
