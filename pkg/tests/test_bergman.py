import numpy as np
import pytest

from boundary_index import bergman as bg
from boundary_index import symbolcore as sc
from boundary_index.errors import (IndexUnstable, KernelResolutionFailure,
                                   NotInvertibleOnBoundary, QuadratureError)
from boundary_index.polydisc import MatrixSymbol
from boundary_index.quadrature import DiscQuadrature
from oracles import bergman_norm_sq, weighted_shift


def _poly_sym(terms):
    return MatrixSymbol({k: np.full((1, 1), v) for k, v in terms.items()})


def test_cauchy_riemann_basis_norms_from_quadrature():
    B = bg.kernel_basis(sc.cauchy_riemann(), 3)
    assert B.monomials == [(0, 0), (1, 0), (2, 0), (3, 0)]
    for n in range(4):
        assert abs(B.coeffs[n, n]) == pytest.approx(
            1 / np.sqrt(bergman_norm_sq(n)))
    np.testing.assert_allclose(B.gram(), np.eye(4), atol=1e-12)


def test_laplacian_basis_monomials():
    B = bg.kernel_basis(sc.laplacian(), 2)
    assert sorted(B.monomials) == [(0, 0), (0, 1), (0, 2), (1, 0), (2, 0)]
    np.testing.assert_allclose(B.gram(), np.eye(5), atol=1e-12)


@pytest.mark.parametrize("spec", [sc.laplacian(), sc.bilaplacian(),
                                  sc.dbar_power(2), sc.dbar_power(3),
                                  sc.anti_cauchy_riemann()],
                         ids=lambda s: s.name)
def test_closed_bases_are_orthonormal_kernels(spec):
    from boundary_index.greens import apply_operator
    B = bg.kernel_basis(spec, 12)
    np.testing.assert_allclose(B.gram(), np.eye(B.size), atol=1e-10)
    for f in B.elements():
        Df = apply_operator(spec, f)
        assert np.sqrt(abs(Df.inner_exact(Df))) <= bg.TAU_KER


def test_degree_zero_basis():
    assert bg.kernel_basis(sc.laplacian(), 0).size == 1
    assert bg.kernel_basis(sc.dbar_power(2), 0).size == 1


def test_family_detection_up_to_scale():
    spec = sc.OperatorSpec(1, 1, 1, "disc", {(1, 0): 2j, (0, 1): -2.0})
    assert bg.detect_family(spec) == ("dbar", 1)
    assert bg.detect_family(sc.cauchy_riemann().with_lower_order(
        {(0, 0): 0.1})) is None
    assert bg.detect_family(sc.bilaplacian()) == ("lap", 2)


def test_toeplitz_unit_symbol_is_identity():
    prob = bg.ToeplitzProblem(sc.cauchy_riemann(), MatrixSymbol.zpower(0))
    np.testing.assert_allclose(bg.toeplitz_matrix(prob, 10), np.eye(10),
                               atol=1e-12)


def test_toeplitz_z_is_weighted_shift():
    prob = bg.ToeplitzProblem(sc.cauchy_riemann(), MatrixSymbol.zpower(1))
    T = bg.toeplitz_matrix(prob, 8, codomain_degree=8)
    np.testing.assert_allclose(T, weighted_shift(8), atol=1e-12)


@pytest.mark.parametrize("spec", [sc.cauchy_riemann(), sc.laplacian(),
                                  sc.bilaplacian()], ids=lambda s: s.name)
def test_compression_is_star_linear(spec):
    rng = np.random.default_rng(0)
    sym = bg.random_loop(rng)
    prob = bg.ToeplitzProblem(spec, sym)
    T = bg.toeplitz_matrix(prob, 15)
    Ts = bg.toeplitz_matrix(bg.ToeplitzProblem(spec, sym.adjoint()), 15)
    np.testing.assert_allclose(T.conj().T, Ts, atol=1e-12)
    herm = _poly_sym({(1, 0): 1.0, (0, 1): 1.0, (0, 0): 3.0})
    H = bg.toeplitz_matrix(bg.ToeplitzProblem(spec, herm), 15)
    np.testing.assert_allclose(H, H.conj().T, atol=1e-12)


def test_insufficient_quadrature_is_reported():
    B = bg.kernel_basis(sc.cauchy_riemann(), 10)
    with pytest.raises(QuadratureError):
        bg.compression(B, B, MatrixSymbol.zpower(1), DiscQuadrature(4, 8))


def test_symbol_vanishing_on_circle_is_rejected():
    with pytest.raises(NotInvertibleOnBoundary):
        bg.ToeplitzProblem(sc.cauchy_riemann(),
                           _poly_sym({(1, 0): 1.0, (0, 0): -1.0}))


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_classical_bergman_index(k):
    est = bg.numerical_index(bg.ToeplitzProblem(
        sc.cauchy_riemann(), MatrixSymbol.zpower(k), (50, 60, 70)))
    assert (est.index, est.dim_ker, est.dim_coker) == (-k, 0, k)
    assert est.stabilized and est.confident


def test_conjugate_power_index():
    est = bg.numerical_index(bg.ToeplitzProblem(
        sc.cauchy_riemann(), MatrixSymbol.zpower(-2), (20, 30, 40)))
    assert est.index == 2


def test_invertible_constant_matrix_symbol():
    M = np.array([[2.0, 1.0], [0.5, 3.0]])
    sym = MatrixSymbol({(0, 0): M})
    for spec in (sc.cauchy_riemann(), sc.laplacian()):
        est = bg.numerical_index(bg.ToeplitzProblem(spec, sym, (10, 15, 20)))
        assert est.index == 0 and est.dim_ker == 0


def test_multiplicativity_on_cauchy_riemann_space():
    syms = {"z": _poly_sym({(1, 0): 1.0}), "z2": _poly_sym({(2, 0): 1.0}),
            "z+2": _poly_sym({(1, 0): 1.0, (0, 0): 2.0})}
    sched = (20, 30, 40)
    idx = {k: bg.numerical_index(bg.ToeplitzProblem(
        sc.cauchy_riemann(), s, sched)).index for k, s in syms.items()}
    for a in syms:
        for b in syms:
            prod = {}
            for (p, q), c in syms[a].terms.items():
                for (r, s), d in syms[b].terms.items():
                    key = (p + r, q + s)
                    prod[key] = prod.get(key, 0) + c[0, 0] * d[0, 0]
            got = bg.numerical_index(bg.ToeplitzProblem(
                sc.cauchy_riemann(), _poly_sym(prod), sched)).index
            assert got == idx[a] + idx[b]


def test_unstable_schedule_raises_with_estimate():
    # kernel of T_{zbar - 1/2} decays like 2^-n and crosses tau_sv at n ~ 22
    sym = _poly_sym({(0, 1): 1.0, (0, 0): -0.5})
    with pytest.raises(IndexUnstable) as info:
        bg.numerical_index(bg.ToeplitzProblem(sc.cauchy_riemann(), sym,
                                              (15, 20, 25)))
    assert [r["index"] for r in info.value.estimate.table] == [0, 0, 1]
    est = bg.numerical_index(bg.ToeplitzProblem(sc.cauchy_riemann(), sym,
                                                (30, 40, 50)))
    assert est.index == 1


def test_fallback_basis_invariants():
    spec = sc.cauchy_riemann().with_lower_order({(0, 0): 0.1})
    B = bg.kernel_basis(spec, 14)
    assert B.kind == "fallback"
    assert np.all(B.residuals <= bg.TAU_KER)
    np.testing.assert_allclose(B.gram(), np.eye(B.size), atol=1e-10)


def test_fallback_reproduces_closed_form_space():
    # without perturbation the numerical kernel equals span{z^n, n <= N}
    B = bg.kernel_basis(sc.cauchy_riemann(), 9, fallback=True)
    C = bg.kernel_basis(sc.cauchy_riemann(), 9)
    q = DiscQuadrature.for_degree(18)
    _, w = q.points()
    cross = np.einsum("p,pi,pj->ij", w, C.values(q)[:, :, 0].conj(),
                      B.values(q)[:, :, 0])
    np.testing.assert_allclose(np.linalg.svd(cross, compute_uv=False),
                               np.ones(10), atol=1e-9)


def test_fallback_without_kernel_raises():
    # D_x^2 + D_y^2 + 1 has no polynomial kernel of degree 0
    spec = sc.laplacian().with_lower_order({(0, 0): 1.0})
    with pytest.raises(KernelResolutionFailure):
        bg.kernel_basis(spec, 0)


def test_zero_perturbation_gives_identical_estimate():
    rep = bg.lower_order_invariance(sc.cauchy_riemann(), {},
                                    MatrixSymbol.zpower(1), (10, 15, 20))
    assert rep.equal
    assert rep.base.to_json() == rep.perturbed.to_json()


def test_laplacian_plus_one_invariance():
    rep = bg.lower_order_invariance(sc.laplacian(), {(0, 0): 1.0},
                                    MatrixSymbol.zpower(2), (10, 15, 20),
                                    fallback_schedule=(10, 14, 18))
    assert rep.base.index == rep.perturbed.index == 0
