"""Frozen reference values and independent oracle computations.

Values are derived by hand (closed-form integrals, residues) or by
routes that share no code with the package under test.
"""

import numpy as np

# Calderon symbol of the positive Laplacian on the unit cosphere, D_t-frame
# (residue of xi^p / (xi^2 + 1) at xi = i).
LAPLACIAN_CALDERON = np.array([[0.5, -0.5j], [0.5j, 0.5]])

# Same symbol before order reduction, evaluated at |xi'| = 2.
LAPLACIAN_CALDERON_XI2 = np.array([[0.5, -0.25j], [1.0j, 0.5]])

# Companion matrix of xi^2 + 1 in the d/dt frame.
COMPANION_XI2_PLUS_1 = np.array([[0.0, 1.0], [1.0, 0.0]])

# Green identity for the positive Laplacian, f = z zbar, g = 1:
# <f, L g> - <L f, g> = 0 - <-4, 1> = 4 pi.
GREEN_LAPLACIAN_ZZBAR_1 = 4 * np.pi


def bergman_norm_sq(n):
    """||z^n||^2 on the unit disc."""
    return np.pi / (n + 1)


def weighted_shift(N):
    """Matrix of T_z on the first N normalised monomials (rows N+1)."""
    M = np.zeros((N + 1, N))
    for n in range(N):
        M[n + 1, n] = np.sqrt((n + 1) / (n + 2))
    return M


def cr_trace_ratio(n):
    """Closed-form ||gamma z^n||_{H^{-1/2}} / ||z^n||_D for d/dzbar."""
    return np.sqrt(2 * np.pi * (1 + n * n) ** -0.5 / bergman_norm_sq(n))


def laplacian_trace_ratio(n):
    h = 2 * np.pi * ((1 + n * n) ** -0.5 + n * n * (1 + n * n) ** -1.5)
    return np.sqrt(h / bergman_norm_sq(n))


def eig_projector(A):
    """Spectral projector onto Re < 0 from an eigendecomposition."""
    w, V = np.linalg.eig(A)
    sel = np.diag((w.real < 0).astype(float))
    return V @ sel @ np.linalg.inv(V)


def range_projector(e, tol=1e-10):
    """Orthogonal projector onto ran(e) from an SVD."""
    U, s, _ = np.linalg.svd(e)
    r = int(np.sum(s > tol * max(1.0, s[0])))
    return U[:, :r] @ U[:, :r].conj().T


def random_idempotent(rng, n, rank, cond_max=1e3):
    """S diag(1..1, 0..0) S^-1 with cond(S) <= cond_max."""
    while True:
        X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        U, _, Vh = np.linalg.svd(X)
        s = np.exp(rng.uniform(0, np.log(cond_max), n))
        s /= s.max()
        S = U @ np.diag(s) @ Vh
        if np.linalg.cond(S) <= cond_max:
            break
    D = np.diag([1.0] * rank + [0.0] * (n - rank))
    return S @ D @ np.linalg.inv(S)
