"""Finite-dimensional checks of the bounded-transform calculus.

Unbounded operators are modelled by matrices; a closed extension
``T subset T_e`` is modelled as ``T = T_e P`` with ``P`` a coordinate
projection (the "domain mask").  Multipliers ``j`` and ``a`` are diagonal
with entries in ``[0, 1]``.
"""

from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_legendre_interval


def _h(X):
    return X.conj().T


def _comm(X, Y):
    return X @ Y - Y @ X


@dataclass
class FiniteOperator:
    """Matrix model of an operator, its extension and two multipliers.

    Parameters
    ----------
    t_ext : ndarray
        ``n x n`` matrix ``T_e``.
    mask : ndarray of bool
        Coordinates kept in the smaller domain; ``T = T_e diag(mask)``.
    j, a : ndarray
        Diagonals of the multiplier matrices.
    """

    t_ext: np.ndarray
    mask: np.ndarray
    j: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        self.t_ext = np.asarray(self.t_ext, dtype=complex)
        n = self.t_ext.shape[1]
        self.mask = np.asarray(self.mask, dtype=bool)
        self.j = np.asarray(self.j, dtype=float)
        self.a = np.asarray(self.a, dtype=float)
        if self.t_ext.shape[0] != n:
            raise ValueError("identity checks need a square model")
        for name, v in (("mask", self.mask), ("j", self.j), ("a", self.a)):
            if v.shape != (n,):
                raise ValueError(f"{name} has the wrong length")
        for name, v in (("j", self.j), ("a", self.a)):
            if v.min() < 0 or v.max() > 1:
                raise ValueError(f"multiplier {name} leaves [0, 1]")

    @property
    def n(self):
        return self.t_ext.shape[0]

    @property
    def projector(self):
        return np.diag(self.mask.astype(float))

    @property
    def t(self):
        return self.t_ext @ self.projector

    @classmethod
    def random(cls, rng, n=12, n_masked=2):
        """Random draw: complex Gaussian ``T_e``, random boundary mask and
        cutoffs."""
        te = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        mask = np.ones(n, dtype=bool)
        mask[rng.choice(n, n_masked, replace=False)] = False
        return cls(te, mask, rng.uniform(0, 1, n), rng.uniform(0, 1, n))


def bounded_transform(T):
    """``T (1 + T^* T)^(-1/2)`` via the singular value decomposition."""
    T = np.asarray(T, dtype=complex)
    U, s, Vh = np.linalg.svd(T, full_matrices=False)
    return (U * (s / np.sqrt(1.0 + s * s))) @ Vh


def baaj_julg_quadrature(T, node_count=200):
    """Integral representation of the bounded transform.

    With ``mu = 1 + tan^2 theta`` the integral over ``mu`` becomes
    ``(2/pi) int_0^{pi/2} T (1 + cos^2 theta T^* T)^(-1) d theta``,
    evaluated by Gauss--Legendre with ``node_count`` nodes.
    """
    if node_count < 8:
        raise ValueError("node_count must be at least 8")
    T = np.asarray(T, dtype=complex)
    th, w = gauss_legendre_interval(node_count, 0.0, np.pi / 2)
    G = _h(T) @ T
    I = np.eye(G.shape[0])
    acc = np.zeros_like(G)
    for t, wk in zip(th, w):
        acc += wk * np.linalg.inv(I + np.cos(t) ** 2 * G)
    return (2.0 / np.pi) * T @ acc


def polar_isometry(T, cutoff=1e-12):
    """Partial isometry of the polar decomposition of ``T``."""
    U, s, Vh = np.linalg.svd(np.asarray(T, dtype=complex),
                             full_matrices=False)
    keep = s > cutoff
    return U[:, keep] @ Vh[keep], s[keep]


def polar_isometry_limit(T, deltas):
    """Approximate the polar isometry by ``T (delta + T^* T)^(-1/2)``.

    Returns ``V`` and a table of rows ``(delta, error, bound)`` with
    ``bound = delta / (2 C^2)`` and ``C`` the smallest nonzero singular
    value.  The inverse square root is evaluated from the Hermitian
    eigendecomposition of ``T^* T`` (independent of the SVD giving ``V``).
    """
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas <= 0) or np.any(np.diff(deltas) >= 0):
        raise ValueError("deltas must be positive and strictly decreasing")
    T = np.asarray(T, dtype=complex)
    V, s = polar_isometry(T)
    C = s.min() if s.size else np.inf
    lam, Q = np.linalg.eigh(_h(T) @ T)
    lam = np.clip(lam, 0.0, None)
    rows = []
    for d in deltas:
        root = (Q / np.sqrt(d + lam)) @ _h(Q)
        err = np.linalg.norm(T @ root - V, 2)
        rows.append({"delta": float(d), "error": float(err),
                     "bound": float(d / (2 * C * C)) if s.size else 0.0})
    return V, rows


def verify_resolvent_identities(op, mu):
    """Residuals of three resolvent rewrites.

    Keys of the returned dict:

    ``commutator_inverse``
        ``[B, j] = -T A [T^*, j] B - B [T, j] T^* B`` with
        ``A = (mu + T^* T)^-1`` and ``B = (mu + T T^*)^-1``.
    ``bounded_transform_commutator``
        ``[T A, a] = mu B [T, a] A + (T^* B [T, a^*] A T^*)^*``.
    ``almost_selfadjoint``
        ``K j = -K [T, j] T^* B + Z + Y`` with
        ``K = A_e T_e^* - A T^*``; ``Z`` and ``Y`` are the two terms that
        vanish when ``j`` preserves the small domain and ``T_e`` maps it
        orthogonally to the extra directions.  Their norms are reported as
        ``locality_defect`` and ``orthogonality_defect``.
    """
    if mu < 1:
        raise ValueError("mu must be at least 1")
    n = op.n
    I = np.eye(n)
    Te = op.t_ext
    P = op.projector
    T = Te @ P
    j = np.diag(op.j).astype(complex)
    a = np.diag(op.a).astype(complex)
    A = np.linalg.inv(mu * I + _h(T) @ T)
    B = np.linalg.inv(mu * I + T @ _h(T))
    Ae = np.linalg.inv(mu * I + _h(Te) @ Te)
    out = {}

    lhs = _comm(B, j)
    rhs = -T @ A @ _comm(_h(T), j) @ B - B @ _comm(T, j) @ _h(T) @ B
    out["commutator_inverse"] = _rel(lhs, rhs)

    lhs = _comm(T @ A, a)
    rhs = mu * B @ _comm(T, a) @ A + \
        _h(_h(T) @ B @ _comm(T, _h(a)) @ A @ _h(T))
    out["bounded_transform_commutator"] = _rel(lhs, rhs)

    K = Ae @ _h(Te) - A @ _h(T)
    R = K @ j
    final = -K @ _comm(T, j) @ _h(T) @ B
    Q = I - P
    Z = mu * Ae @ Q @ _h(Te) @ j @ B
    Y = -mu * Ae @ Q @ _h(Te) @ Te @ P @ A @ _comm(_h(T), j) @ B
    out["almost_selfadjoint"] = _rel(R, final + Z + Y)
    out["locality_defect"] = float(np.linalg.norm(Z, 2))
    out["orthogonality_defect"] = float(np.linalg.norm(Y, 2))
    out["R_norm"] = float(np.linalg.norm(R, 2))
    return out


def _rel(x, y):
    return float(np.linalg.norm(x - y, 2) /
                 max(1.0, np.linalg.norm(x, 2), np.linalg.norm(y, 2)))


# ---------------------------------------------------------------------------
# compactness probes on (0, 1)

def _nodal_model(N, order):
    # Gauss--Legendre collocation; u_k = sqrt(w_k) f(x_k) is L2-isometric
    x, w = gauss_legendre_interval(N)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    logc = -np.sum(np.log(np.abs(diff)), axis=1)
    sgn = np.prod(np.sign(diff), axis=1)
    c = sgn * np.exp(logc - logc.max())
    Dm = (c[None, :] / c[:, None]) / diff
    np.fill_diagonal(Dm, 0.0)
    np.fill_diagonal(Dm, -Dm.sum(axis=1))
    sw = np.sqrt(w)
    op = ((-1j) ** order) * np.linalg.matrix_power(Dm, order)
    Te = sw[:, None] * op / sw[None, :]
    cons = []
    for t in (0.0, 1.0):
        lag = c / (t - x)
        lag = lag / lag.sum()
        cons.append(lag / sw)
        if order == 2:
            cons.append((lag @ Dm) / sw)
    Q, _ = np.linalg.qr(np.array(cons).T)
    P = np.eye(N) - Q @ _h(Q)
    return x, Te @ P


def interior_bump(x, lo=0.2, hi=0.8, steep=0.02):
    """Smooth cutoff supported in ``(lo, hi)`` with maximum 1."""
    out = np.zeros_like(x)
    inside = (x > lo) & (x < hi)
    out[inside] = np.exp(-steep / ((x[inside] - lo) * (hi - x[inside])))
    return out / out.max() if out.max() > 0 else out


def differential_model(kind="first"):
    """Size-to-matrix factory for the built-in models.

    ``"first"``: ``-i d/dx`` on ``(0, 1)`` with the two boundary values
    removed.  ``"second"``: ``-d^2/dx^2`` with values and first derivatives
    removed at both ends.  ``"selfadjoint"``: the Hermitian part of the
    second model, for which ``F = F^*``.
    """
    if kind == "first":
        return lambda N: _nodal_model(N, 1)
    if kind == "second":
        return lambda N: _nodal_model(N, 2)
    if kind == "selfadjoint":
        def f(N):
            x, T = _nodal_model(N, 2)
            return x, 0.5 * (T + _h(T))
        return f
    raise ValueError(f"unknown model {kind!r}")


def compactness_decay_probe(model="first", cutoff=interior_bump,
                            sizes=(64, 128, 256), k_max=8):
    """Leading singular values of ``j (F - F^*)`` and ``[F, a]``.

    ``model`` is a built-in name or a callable ``N -> (x, T)``; ``cutoff``
    maps node positions to the diagonal of ``j`` (``a`` is multiplication
    by ``x``).  Returns a list of rows, one per size.
    """
    factory = differential_model(model) if isinstance(model, str) else model
    order = {"first": 1, "second": 2, "selfadjoint": 2}.get(model) \
        if isinstance(model, str) else None
    rows = []
    for N in sizes:
        x, T = factory(N)
        F = bounded_transform(T)
        jd = np.asarray(cutoff(x), dtype=float)
        s1 = np.linalg.svd(jd[:, None] * (F - _h(F)), compute_uv=False)
        s2 = np.linalg.svd(F * x[None, :] - x[:, None] * F,
                           compute_uv=False)
        rows.append({"size": int(N), "order": order,
                     "sv_j_F_minus_Fstar": [float(v) for v in s1[:k_max]],
                     "sv_F_a_commutator": [float(v) for v in s2[:k_max]]})
    return rows
