"""Principal symbol of the Calderon projector.

Two independent routes are provided.  :func:`e_plus_projector` splits the
companion matrix by a sorted Schur form and a Sylvester solve.
:func:`hormander_symbol` assembles the block formula built from residues of
``xi_n^p a(xi_n)^(-1)`` over the upper half plane, using roots of
``det a`` obtained from an interpolated characteristic polynomial.
Both return the projector in the ``D_t``-frame
``(v, D_t v, ..., D_t^(m-1) v)``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import (EllipticityViolation, NotIdempotent, ResidueFailure,
                     SpectralGapViolation)
from .symbolcore import (TAU_ELL, CosphereGrid, companion_matrix,
                         principal_symbol)

TAU_IDEM = 1e-8
TAU_AGREE = 1e-8
TAU_CLUSTER = 1e-6
N_CONTOUR = 256


@dataclass
class SpectralSplit:
    """Riesz projectors onto the ``Re < 0`` and ``Re > 0`` spectral
    subspaces of a matrix."""

    p_minus_re: np.ndarray
    p_plus_re: np.ndarray
    rank_minus_re: int
    rank_plus_re: int
    eigenvalues: np.ndarray


def riesz_projector(A, tol=TAU_ELL):
    """Spectral projector of ``A`` onto the left half plane.

    Computed from a complex Schur form sorted so that eigenvalues with
    negative real part come first; the off-diagonal coupling is removed by
    a Sylvester solve.

    Raises
    ------
    SpectralGapViolation
        If some eigenvalue has ``|Re| <= tol * max(1, |A|)``.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    T, Z, sdim = sla.schur(A, output="complex", sort="lhp")
    ev = np.diag(T)
    scale = max(1.0, np.abs(ev).max())
    if np.any(np.abs(ev.real) <= tol * scale):
        raise SpectralGapViolation(
            f"eigenvalue on the imaginary axis: "
            f"{ev[np.argmin(np.abs(ev.real))]:.6g}")
    k = sdim
    if k == 0:
        P = np.zeros((n, n), dtype=complex)
    elif k == n:
        P = np.eye(n, dtype=complex)
    else:
        T11, T12, T22 = T[:k, :k], T[:k, k:], T[k:, k:]
        R = sla.solve_sylvester(T11, -T22, T12)
        Q = np.zeros((n, n), dtype=complex)
        Q[:k, :k] = np.eye(k)
        Q[:k, k:] = R
        P = Z @ Q @ Z.conj().T
    return SpectralSplit(P, np.eye(n) - P, k, n - k, ev)


def _frame_change(m, r):
    return np.kron(np.diag((-1j) ** np.arange(m)), np.eye(r))


def e_plus_projector(spec, node, xi_scale=1.0, tol=TAU_ELL):
    """Projector onto Cauchy data of decaying solutions (``D_t``-frame).

    Returns the ``m r x m r`` idempotent whose range is ``E_+`` at ``node``.
    """
    poly = principal_symbol(spec, node, xi_scale)
    A = companion_matrix(poly)
    split = riesz_projector(A, tol)
    S = _frame_change(poly.degree, poly.rank)
    return S @ split.p_minus_re @ np.linalg.inv(S)


def _adjugate(M):
    # adj(M) = det(M) M^-1, computed stably from the SVD
    U, s, Vh = np.linalg.svd(M)
    n = s.size
    prods = np.array([np.prod(np.delete(s, i)) for i in range(n)])
    phase = np.linalg.det(U) * np.linalg.det(Vh)
    return phase * (Vh.conj().T * prods) @ U.conj().T


def _cluster_roots(roots, tol):
    clusters = []
    for z in roots:
        for c in clusters:
            if np.min(np.abs(np.asarray(c) - z)) < tol:
                c.append(z)
                break
        else:
            clusters.append([z])
    # merge transitively
    merged = True
    while merged:
        merged = False
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                d = np.min(np.abs(np.subtract.outer(clusters[i],
                                                    clusters[j])))
                if d < tol:
                    clusters[i].extend(clusters.pop(j))
                    merged = True
                    break
            if merged:
                break
    return [np.asarray(c) for c in clusters]


def _contour_residue(poly, center, radius, p_max, n_nodes):
    phi = 2 * np.pi * np.arange(n_nodes) / n_nodes
    pts = center + radius * np.exp(1j * phi)
    r = poly.rank
    vals = np.zeros((n_nodes, r, r), dtype=complex)
    for c in poly.coeffs:
        vals = vals * pts[:, None, None] + c
    inv = np.linalg.inv(vals) * ((pts - center) / n_nodes)[:, None, None]
    powers = pts[None, :] ** np.arange(p_max + 1)[:, None]
    return np.einsum("pn,nij->pij", powers, inv)


def upper_residues(poly, p_max, tol_cluster=TAU_CLUSTER,
                   n_contour=N_CONTOUR):
    """``R_p = sum_{Im rho > 0} Res_rho xi^p a(xi)^(-1)`` for
    ``p = 0..p_max``.

    Simple roots use ``adj a(rho) / (det a)'(rho)``; roots closer than
    ``tol_cluster`` are grouped and handled by a trapezoidal contour
    integral around the cluster.
    """
    roots = poly.roots()
    scale = max(1.0, np.abs(roots).max())
    if np.any(np.abs(roots.imag) <= TAU_ELL * scale):
        raise EllipticityViolation("real root of the boundary symbol",
                                   poly.node)
    clusters = _cluster_roots(roots, tol_cluster)
    detc = poly.determinant_coefficients()
    ddet = np.polyder(detc)
    r = poly.rank
    out = np.zeros((p_max + 1, r, r), dtype=complex)
    for c in clusters:
        center = c.mean()
        if center.imag <= 0:
            continue
        if c.size == 1:
            rho = c[0]
            dd = np.polyval(ddet, rho)
            adj = _adjugate(poly(rho))
            for p in range(p_max + 1):
                out[p] += rho ** p * adj / dd
            continue
        diam = np.max(np.abs(np.subtract.outer(c, c)))
        others = np.array([z for z in roots if not np.any(c == z)])
        gap = (np.min(np.abs(others - center)) if others.size
               else 1.0 + np.abs(center))
        radius = max(10 * diam, 0.5 * gap)
        if radius >= gap - diam:
            raise ResidueFailure("cluster is not isolated from other roots")
        full = _contour_residue(poly, center, radius, p_max, n_contour)
        half = _contour_residue(poly, center, radius, p_max, n_contour // 2)
        err = np.abs(full - half).max()
        if err > 1e-6 * max(1.0, np.abs(full).max()):
            raise ResidueFailure(
                f"contour quadrature unconverged (diff {err:.3g})")
        out += full
    return out


def hormander_symbol(spec, node, xi_scale=1.0, tol_cluster=TAU_CLUSTER,
                     n_contour=N_CONTOUR):
    """Projector onto ``E_+`` from the residue block formula.

    Block ``(j, k)`` equals ``sum_{l=0}^{m-k-1} R_{j+l} a_{m-k-1-l}`` with
    ``R_p`` from :func:`upper_residues`.  Returned in the ``D_t``-frame.
    """
    poly = principal_symbol(spec, node, xi_scale)
    m, r = poly.degree, poly.rank
    R = upper_residues(poly, 2 * m - 2, tol_cluster, n_contour)
    a = poly.coeffs
    P = np.zeros((m * r, m * r), dtype=complex)
    for j in range(m):
        for k in range(m):
            blk = np.zeros((r, r), dtype=complex)
            for l in range(m - k):
                blk += R[j + l] @ a[m - k - 1 - l]
            P[j * r:(j + 1) * r, k * r:(k + 1) * r] = blk
    return P


def dn_order_reduce(P, m, r, xi_norm):
    """Rescale block ``(j, k)`` by ``|xi'|^(k - j)``.

    Conjugation by ``diag(|xi'|^j)`` maps a projector evaluated at
    ``|xi'|`` to its value on the unit cosphere.
    """
    P = np.array(P, dtype=complex, copy=True)
    for j in range(m):
        for k in range(m):
            P[j * r:(j + 1) * r, k * r:(k + 1) * r] *= xi_norm ** (k - j)
    return P


def idempotency_defect(P):
    return float(np.linalg.norm(P @ P - P, 2))


def kaplansky_projection(e, tol=TAU_IDEM):
    """Orthogonal projection with the same range as the idempotent ``e``.

    Mathematically ``p = e e^* (1 + (e - e^*)(e^* - e))^(-1)``.  The
    formula loses a factor ``|e|`` in ``e p - p``, so ``p`` is formed from
    the Schur vectors of the eigenvalue-one block instead, which keeps
    ``e p - p`` and ``p e - e`` at the backward-error level
    ``eps |e|``.  :func:`kaplansky_formula` evaluates the formula itself.
    """
    e = _checked_idempotent(e, tol)
    _, Q, k = sla.schur(e, output="complex", sort=lambda x: x.real > 0.5)
    Q1 = Q[:, :k]
    return Q1 @ Q1.conj().T


def kaplansky_formula(e, tol=TAU_IDEM):
    """Direct evaluation of ``e e^* (1 + (e - e^*)(e^* - e))^(-1)``."""
    e = _checked_idempotent(e, tol)
    eh = e.conj().T
    d = e - eh
    M = np.eye(e.shape[0]) + d @ (-d)
    return np.linalg.solve(M.T, (e @ eh).T).T


def _checked_idempotent(e, tol):
    e = np.asarray(e, dtype=complex)
    defect = idempotency_defect(e)
    if defect > tol * max(1.0, np.linalg.norm(e, 2)):
        raise NotIdempotent(f"||e^2 - e|| = {defect:.3g}")
    return e


@dataclass
class ProjectorField:
    """Projector matrices over a :class:`CosphereGrid`.

    ``matrices[i]`` belongs to ``grid.nodes[i]``.
    """

    grid: CosphereGrid
    matrices: list
    method: str
    frame: str = "D_t"
    defects: list = field(default_factory=list)
    ranks: list = field(default_factory=list)

    def rank_on_component(self, xi):
        rk = {rank for node, rank in zip(self.grid.nodes, self.ranks)
              if node.xi == xi}
        if len(rk) != 1:
            raise SpectralGapViolation(f"rank jumps on component {xi}: {rk}")
        return rk.pop()


def symbol_field(spec, grid=None, method="riesz"):
    """Evaluate the projector at every node of ``grid``.

    ``method`` is ``"riesz"`` or ``"hormander"``.
    """
    grid = grid or CosphereGrid(spec.domain)
    fn = {"riesz": e_plus_projector, "hormander": hormander_symbol}[method]
    mats, defects, ranks = [], [], []
    for node in grid.nodes:
        P = fn(spec, node)
        mats.append(P)
        defects.append(idempotency_defect(P))
        ranks.append(int(round(np.trace(P).real)))
    return ProjectorField(grid, mats, method, "D_t", defects, ranks)


def e_plus_rank(spec, xi, theta=0.0):
    """Rank of ``E_+`` on the component ``xi' = xi`` (sampled at one node).

    The rank is locally constant on each component for elliptic operators.
    """
    from .symbolcore import BoundaryNode
    node = BoundaryNode(theta, xi, spec.domain)
    P = e_plus_projector(spec, node)
    return int(round(np.trace(P).real))
