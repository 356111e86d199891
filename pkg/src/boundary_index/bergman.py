"""Kernel bases of elliptic operators on the disc and Toeplitz indices.

For the operator families with explicit polynomial kernels the basis is
built from monomials ``z^a zbar^b`` orthonormalised frequency by frequency
with exact moments.  Other operators use a numerical null space over an
orthonormal Zernike basis of polynomials of bounded degree.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (IndexUnstable, KernelResolutionFailure,
                     NotInvertibleOnBoundary, QuadratureError)
from .polydisc import (DiscPolynomial, MatrixSymbol, monomial_inner,
                       zernike_index, zernike_tables)
from .quadrature import DiscQuadrature
from .symbolcore import _DBAR, _DEE, _LAP, _ppow

TAU_KER = 1e-9
TAU_SV = 1e-6
TAU_INV = 1e-6
GAP_CONFIDENT = 1e3
DEFAULT_SCHEDULE = (40, 60, 80)


# ---------------------------------------------------------------------------
# operator families with explicit kernels

def _family_members(max_power=4):
    fam = []
    for m in range(1, max_power + 1):
        fam.append((_ppow(_DBAR, m), "dbar", m))
        fam.append((_ppow(_DEE, m), "dee", m))
    for m in (1, 2):
        fam.append((_ppow(_LAP, m), "lap", m))
    return fam


def detect_family(spec):
    """Return ``(kind, m)`` if ``spec`` is a multiple of a known operator
    with polynomial kernel, else ``None``.

    ``kind`` is ``"dbar"`` (kernel spanned by ``z^a zbar^b``, ``b < m``),
    ``"dee"`` (``a < m``) or ``"lap"`` (``min(a, b) < m``).
    """
    if spec.domain != "disc" or spec.rank_e != 1 or spec.rank_f != 1:
        return None
    coeffs = {k: complex(v[0, 0]) for k, v in spec.coefficients.items()
              if abs(v[0, 0]) > 0}
    for ref, kind, m in _family_members():
        if set(ref) != set(coeffs):
            continue
        key = next(iter(ref))
        lam = coeffs[key] / ref[key]
        if all(abs(coeffs[k] - lam * ref[k]) <= 1e-13 * abs(lam)
               for k in ref):
            return kind, m
    return None


def _in_family(kind, m, a, b):
    if kind == "dbar":
        return b < m
    if kind == "dee":
        return a < m
    return min(a, b) < m


def family_monomials(kind, m, degree):
    """Kernel monomials of total degree ``<= degree`` (sorted by degree)."""
    return [(a, d - a) for d in range(degree + 1) for a in range(d, -1, -1)
            if _in_family(kind, m, a, d - a)]


def family_count(kind, m, degree):
    return len(family_monomials(kind, m, degree))


# ---------------------------------------------------------------------------
# bases

@dataclass
class BergmanBasis:
    """Orthonormal basis of the polynomial part of ``Ker D_max``.

    Attributes
    ----------
    kind : str
        ``"closed"`` or ``"fallback"``.
    degree : int
        Maximal total degree of the elements.
    monomials : list of (a, b)
        Closed form only: monomial index set.
    coeffs : ndarray
        Closed form: ``(n_monomials, n_basis)`` coefficients.
        Fallback: ``(n_zernike * rank, n_basis)`` coefficients.
    residuals : ndarray
        ``|D b_i|`` for each element.
    """

    spec_name: str
    kind: str
    degree: int
    coeffs: np.ndarray
    rank: int = 1
    monomials: list = field(default_factory=list)
    residuals: np.ndarray = None
    singular_values: np.ndarray = None

    @property
    def size(self):
        return self.coeffs.shape[1]

    def elements(self):
        """Closed-form elements as :class:`DiscPolynomial` objects."""
        if self.kind != "closed":
            raise ValueError("only closed-form bases have polynomial form")
        return [DiscPolynomial({mono: c for mono, c in
                                zip(self.monomials, col) if c != 0})
                for col in self.coeffs.T]

    def values(self, quad):
        """Values at the nodes of ``quad``: ``(npts, n_basis, rank)``."""
        z, _ = quad.points()
        if self.kind == "closed":
            zb = z.conj()
            M = np.stack([z ** a * zb ** b for a, b in self.monomials],
                         axis=1)
            return (M @ self.coeffs)[:, :, None]
        V = _zernike_cached(self.degree, quad)[0]
        r = self.rank
        C = self.coeffs.reshape(V.shape[1], r, -1)
        return np.einsum("pj,jen->pne", V, C)

    def gram(self, quad=None):
        quad = quad or DiscQuadrature.for_degree(2 * self.degree)
        quad.require(2 * self.degree)
        B = self.values(quad)
        _, w = quad.points()
        return np.einsum("p,pie,pje->ij", w, B.conj(), B)


def _closed_basis(spec, kind, m, degree):
    monos = family_monomials(kind, m, degree)
    n = len(monos)
    coeffs = np.zeros((n, n), dtype=complex)
    byfreq = {}
    for i, (a, b) in enumerate(monos):
        byfreq.setdefault(a - b, []).append(i)
    for idx in byfreq.values():
        G = np.array([[monomial_inner(*monos[i], *monos[j]) for j in idx]
                      for i in idx])
        L = np.linalg.cholesky(G)
        # columns of inv(L)^H are orthonormal in degree order
        Linv = np.linalg.inv(L)
        for col, i in enumerate(idx):
            coeffs[idx, i] = Linv[col, :].conj()
    return BergmanBasis(spec.name, "closed", degree, coeffs, 1, monos,
                        np.zeros(n))


@lru_cache(maxsize=32)
def _zernike_cached(K, quad):
    return zernike_tables(K, quad)


def _derivative_matrices(K):
    quad = DiscQuadrature.for_degree(2 * K)
    V, Dz, Dzb, idx = _zernike_cached(K, quad)
    _, w = quad.points()
    Vw = V.conj() * w[:, None]
    return Vw.T @ Dz, Vw.T @ Dzb


@lru_cache(maxsize=64)
def _fallback_cached(fp, spec_ref, K):
    spec = spec_ref[0]
    Z, Zb = _derivative_matrices(K)
    n = Z.shape[0]
    I = np.eye(n)
    Dx = -1j * (Z + Zb)
    Dy = Z - Zb
    rf, re_ = spec.rank_f, spec.rank_e
    Dmat = np.zeros((n * rf, n * re_), dtype=complex)
    powx = [I]
    powy = [I]
    for _ in range(spec.order):
        powx.append(Dx @ powx[-1])
        powy.append(Dy @ powy[-1])
    for (a, b), C in spec.coefficients.items():
        Dmat += np.kron(powx[a] @ powy[b], C)
    _, s, Vh = np.linalg.svd(Dmat)
    full = np.zeros(n * re_)
    full[:s.size] = s
    keep = np.where(full <= TAU_KER)[0]
    return Vh[keep].conj().T, full[keep], full


def kernel_basis(spec, N, fallback=False):
    """Orthonormal basis of the degree-``<= N`` part of ``Ker D_max``.

    Parameters
    ----------
    spec : OperatorSpec
    N : int
        Degree cut.
    fallback : bool
        Force the numerical null space even when a closed form is known.

    Raises
    ------
    KernelResolutionFailure
        If the numerical null space is empty at this degree.
    """
    if spec.domain != "disc":
        raise ValueError("kernel bases are implemented on the disc")
    fam = None if fallback else detect_family(spec)
    if fam is not None:
        return _closed_basis(spec, fam[0], fam[1], N)
    vecs, res, full = _fallback_cached(spec.fingerprint(), _Ref(spec), N)
    if vecs.shape[1] == 0:
        raise KernelResolutionFailure(
            f"no singular value below {TAU_KER:g} at degree {N} "
            f"(smallest {full.min():.3g})")
    return BergmanBasis(spec.name, "fallback", N, vecs, spec.rank_e, [],
                        res, full)


class _Ref(tuple):
    # hashable by fingerprint only so that lru_cache can hold the spec
    def __new__(cls, spec):
        return super().__new__(cls, (spec,))

    def __hash__(self):
        return hash(self[0].fingerprint())

    def __eq__(self, other):
        return self[0].fingerprint() == other[0].fingerprint()


def basis_for_count(spec, target, fallback=False):
    """Smallest degree whose basis has at least ``target`` elements."""
    fam = None if fallback else detect_family(spec)
    if fam is not None:
        d = 0
        while family_count(fam[0], fam[1], d) < target:
            d += 1
        return kernel_basis(spec, d)
    d = 1
    while True:
        try:
            B = kernel_basis(spec, d, fallback=True)
        except KernelResolutionFailure:
            B = None
        if B is not None and B.size >= target:
            return B
        d += 1
        if d > 4 * target + 20:
            raise KernelResolutionFailure("kernel does not grow with degree")


# ---------------------------------------------------------------------------
# Toeplitz compressions

@dataclass
class ToeplitzProblem:
    """Compression of multiplication by ``symbol`` to ``Ker D_max``."""

    spec: object
    symbol: MatrixSymbol
    schedule: tuple = DEFAULT_SCHEDULE
    tau_sv: float = TAU_SV
    tau_inv: float = TAU_INV
    fallback: bool = False
    n_boundary: int = 1024

    def __post_init__(self):
        _, vals = self.symbol.boundary_values(self.n_boundary)
        dets = np.abs(np.linalg.det(vals))
        self.min_boundary_det = float(dets.min())
        if self.min_boundary_det < self.tau_inv:
            raise NotInvertibleOnBoundary(
                f"min |det alpha| on the circle = {self.min_boundary_det:.3g}")
        if len(self.schedule) < 3:
            raise ValueError("schedule needs at least three sizes")


def compression(dom, cod, symbol, quad=None):
    """Matrix of ``P_cod alpha`` restricted to ``dom``.

    Entry ``((i, s), (j, t)) = <c_i e_s, alpha b_j e_t>``.
    """
    deg = dom.degree + cod.degree + symbol.degree
    quad = quad or DiscQuadrature.for_degree(deg)
    quad.require(deg)
    z, w = quad.points()
    B = dom.values(quad)
    C = cod.values(quad)
    A = symbol.evaluate(z)
    n = symbol.size
    T = np.zeros((cod.size * n, dom.size * n), dtype=complex)
    Cw = C.conj() * w[:, None, None]
    for s in range(n):
        for t in range(n):
            blk = np.zeros((cod.size, dom.size), dtype=complex)
            for e in range(B.shape[2]):
                blk += (Cw[:, :, e] * A[:, s, t, None]).T @ B[:, :, e]
            T[s::n, t::n] = blk
    return T


def toeplitz_matrix(problem, N_trunc, codomain_degree=None):
    """Square or rectangular Toeplitz section.

    The domain is the smallest closed/fallback basis with at least
    ``N_trunc`` elements; the codomain is the basis of degree
    ``codomain_degree`` (default: same basis as the domain).
    """
    spec = problem.spec
    dom = basis_for_count(spec, N_trunc, problem.fallback)
    if codomain_degree is None:
        cod = dom
    else:
        cod = kernel_basis(spec, codomain_degree, problem.fallback)
    return compression(dom, cod, problem.symbol)


def _count_small(T, tau):
    s = np.linalg.svd(T, compute_uv=False)
    if s.size == 0:
        return 0, s, np.inf
    smax = s[0] if s[0] > 0 else 1.0
    ncols = T.shape[1]
    full = np.zeros(ncols)
    full[:min(ncols, s.size)] = s[:ncols]
    small = full < tau * smax
    kept = full[~small]
    dropped = full[small]
    floor = np.finfo(float).eps * smax
    gap = (kept.min() if kept.size else smax) / max(
        dropped.max() if dropped.size else 0.0, floor)
    return int(small.sum()), full, float(gap)


@dataclass
class IndexEstimate:
    dim_ker: int
    dim_coker: int
    index: int
    gap_ratio: float
    stabilized: bool
    confident: bool
    table: list

    def to_json(self):
        return {"dim_ker": self.dim_ker, "dim_coker": self.dim_coker,
                "index": self.index, "gap_ratio": _finite(self.gap_ratio),
                "stabilized": self.stabilized, "confident": self.confident,
                "table": self.table}


def _finite(x):
    return float(x) if np.isfinite(x) else "inf"


def numerical_index(problem, raise_on_unstable=True):
    """Finite-section estimate of ``ind P alpha P``.

    For every size in the schedule the domain is the smallest basis with
    at least that many elements and the codomain the basis of degree
    ``deg(domain) + deg(alpha)`` (plus two for numerical kernels), which
    contains the exact image for polynomial kernels.  ``dim_ker`` counts
    singular values of the compression of ``alpha`` below
    ``tau_sv * sigma_max``; ``dim_coker`` does the same for ``alpha^*``.
    """
    spec, sym = problem.spec, problem.symbol
    adj = sym.adjoint()
    margin = 2 if (problem.fallback or detect_family(spec) is None) else 0
    table = []
    for target in problem.schedule:
        dom = basis_for_count(spec, target, problem.fallback)
        cod = kernel_basis(spec, dom.degree + sym.degree + margin,
                           problem.fallback)
        T = compression(dom, cod, sym)
        Ts = compression(dom, cod, adj)
        k, s1, g1 = _count_small(T, problem.tau_sv)
        c, s2, g2 = _count_small(Ts, problem.tau_sv)
        table.append({
            "target": int(target), "domain_dim": int(T.shape[1]),
            "codomain_dim": int(T.shape[0]), "degree": int(dom.degree),
            "dim_ker": k, "dim_coker": c, "index": k - c,
            "gap_ratio": _finite(min(g1, g2)),
            "sv_alpha": [float(x) for x in s1],
            "sv_alpha_adjoint": [float(x) for x in s2],
        })
    last = table[-3:]
    stabilized = len({row["index"] for row in last}) == 1
    final = table[-1]
    gap = min(float(row["gap_ratio"]) for row in last)
    est = IndexEstimate(final["dim_ker"], final["dim_coker"], final["index"],
                        gap, stabilized, stabilized and gap >= GAP_CONFIDENT,
                        table)
    if not stabilized and raise_on_unstable:
        raise IndexUnstable(
            "index differs over the last three truncations: "
            f"{[row['index'] for row in last]}", est)
    return est


@dataclass
class InvarianceReport:
    base: IndexEstimate
    perturbed: IndexEstimate
    equal: bool

    def to_json(self):
        return {"base": self.base.to_json(),
                "perturbed": self.perturbed.to_json(), "equal": self.equal}


def lower_order_invariance(spec, perturbation, symbol,
                           schedule=DEFAULT_SCHEDULE, fallback_schedule=None,
                           force_fallback=False):
    """Compare indices of ``spec`` and ``spec + perturbation``.

    The perturbed operator (if non-trivial) rarely has a closed-form
    kernel; it then runs on the numerical null space with
    ``fallback_schedule`` (default ``schedule``).
    """
    base = numerical_index(ToeplitzProblem(spec, symbol, tuple(schedule),
                                           fallback=force_fallback))
    pert_spec = spec.with_lower_order(perturbation) if perturbation else spec
    use_fb = force_fallback or detect_family(pert_spec) is None
    sched = tuple(fallback_schedule or schedule) if use_fb else \
        tuple(schedule)
    pert = numerical_index(ToeplitzProblem(pert_spec, symbol, sched,
                                           fallback=use_fb))
    return InvarianceReport(base, pert, base.index == pert.index)


def random_loop(rng, max_factors=3, size=1):
    """Random polynomial symbol with zeros kept away from the circle.

    Returns a product ``c * prod (z - a_i) * prod (zbar - b_j)`` with
    ``|a_i|, |b_j|`` in ``[0, 0.4]`` or ``[2.5, 4]``; the boundary winding
    is ``#{|a_i| < 1} - #{|b_j| < 1}``.  Finite sections converge like
    ``|root|^(+-degree)``, so the annulus keeps the smallest default
    truncation (degree 20 for rank-two kernels) well below ``TAU_SV``.
    """
    n = int(rng.integers(1, max_factors + 1))
    terms = {(0, 0): complex(rng.normal() + 1j * rng.normal()) or 1.0}
    for _ in range(n):
        rad = rng.uniform(0.0, 0.4) if rng.random() < 0.5 else \
            rng.uniform(2.5, 4.0)
        root = rad * np.exp(2j * np.pi * rng.random())
        conj_factor = rng.random() < 0.5
        new = {}
        for (a, b), c in terms.items():
            if conj_factor:
                up, shift = (a, b + 1), (a, b)
            else:
                up, shift = (a + 1, b), (a, b)
            new[up] = new.get(up, 0) + c
            new[shift] = new.get(shift, 0) - root * c
        terms = new
    sym = MatrixSymbol({k: np.full((1, 1), v) for k, v in terms.items()})
    if size > 1:
        sym = MatrixSymbol.diagonal([sym] + [random_loop(rng, max_factors)
                                             for _ in range(size - 1)])
    return sym
