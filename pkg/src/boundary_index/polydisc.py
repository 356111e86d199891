"""Polynomials in ``z`` and ``conj(z)`` on the unit disc.

A :class:`DiscPolynomial` is a finite sum of ``c_ab z**a conj(z)**b`` with
vector coefficients ``c_ab`` (one entry per bundle component).  Derivatives
are exact, so the ambient constant-coefficient operators of
:mod:`boundary_index.symbolcore` act on these without discretisation.
A :class:`MatrixSymbol` is the matrix-valued analogue used as a Toeplitz
symbol.
"""

import numpy as np
from scipy.special import eval_jacobi

from .quadrature import DiscQuadrature


def monomial_inner(a, b, c, d):
    """Exact ``L2(disc)`` inner product of ``z^a zb^b`` against ``z^c zb^d``.

    The second argument is conjugated.
    """
    if a - b != c - d:
        return 0.0
    return 2.0 * np.pi / (a + b + c + d + 2)


class DiscPolynomial:
    """Vector-valued polynomial ``sum c_ab z^a zbar^b``.

    Parameters
    ----------
    terms : dict
        Maps ``(a, b)`` to a coefficient (scalar or length-``rank`` array).
    rank : int
        Number of components.
    """

    __slots__ = ("terms", "rank")

    def __init__(self, terms=None, rank=1):
        self.rank = int(rank)
        self.terms = {}
        for (a, b), c in (terms or {}).items():
            c = np.asarray(c, dtype=complex).reshape(-1)
            if c.size == 1 and self.rank > 1:
                c = np.full(self.rank, c[0])
            if c.size != self.rank:
                raise ValueError("coefficient length does not match rank")
            if a < 0 or b < 0:
                raise ValueError("negative exponent")
            if np.any(c != 0):
                key = (int(a), int(b))
                self.terms[key] = self.terms.get(key, 0) + c

    @classmethod
    def monomial(cls, a, b, rank=1, component=None):
        c = np.zeros(rank, dtype=complex)
        if component is None:
            c[:] = 1.0
        else:
            c[component] = 1.0
        return cls({(a, b): c}, rank)

    @property
    def degree(self):
        return max((a + b for a, b in self.terms), default=0)

    def copy(self):
        return DiscPolynomial(dict(self.terms), self.rank)

    def __add__(self, other):
        out = DiscPolynomial(dict(self.terms), self.rank)
        for k, c in other.terms.items():
            out.terms[k] = out.terms.get(k, 0) + c
        return out

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, s):
        return DiscPolynomial({k: s * c for k, c in self.terms.items()},
                              self.rank)

    def apply_matrix(self, m):
        """Multiply every coefficient by the matrix ``m`` (``r_out x rank``)."""
        m = np.atleast_2d(np.asarray(m, dtype=complex))
        return DiscPolynomial({k: m @ c for k, c in self.terms.items()},
                              m.shape[0])

    def dz(self):
        return DiscPolynomial({(a - 1, b): a * c
                               for (a, b), c in self.terms.items() if a},
                              self.rank)

    def dzbar(self):
        return DiscPolynomial({(a, b - 1): b * c
                               for (a, b), c in self.terms.items() if b},
                              self.rank)

    def evaluate(self, z):
        """Values at complex points ``z``; shape ``(len(z), rank)``."""
        z = np.asarray(z, dtype=complex).reshape(-1)
        zb = z.conj()
        out = np.zeros((z.size, self.rank), dtype=complex)
        for (a, b), c in self.terms.items():
            out += np.outer(z ** a * zb ** b, c)
        return out

    def radial_trace(self, k):
        """Fourier coefficients of ``(-d/dr)^k`` of ``self`` at ``r = 1``.

        Returns ``dict`` mapping frequency to coefficient vector.
        """
        out = {}
        for (a, b), c in self.terms.items():
            n = a + b
            ff = 1.0
            for i in range(k):
                ff *= (n - i)
            if ff == 0:
                continue
            f = a - b
            out[f] = out.get(f, 0) + ((-1) ** k) * ff * c
        return out

    def inner_exact(self, other):
        """Exact ``<self, other>`` from closed-form monomial moments."""
        s = 0j
        for (a, b), c in self.terms.items():
            for (p, q), d in other.terms.items():
                m = monomial_inner(a, b, p, q)
                if m:
                    s += m * np.vdot(d, c)
        return s

    def __repr__(self):
        return f"DiscPolynomial({len(self.terms)} terms, rank={self.rank})"


class MatrixSymbol:
    """Matrix-valued polynomial ``alpha = sum A_ab z^a zbar^b``.

    Parameters
    ----------
    terms : dict
        Maps ``(a, b)`` to an ``n x n`` coefficient matrix (scalars allowed
        when ``n == 1``).
    """

    def __init__(self, terms, size=None):
        conv = {}
        for (a, b), c in terms.items():
            c = np.atleast_2d(np.asarray(c, dtype=complex))
            conv[(int(a), int(b))] = c
        if not conv:
            raise ValueError("symbol has no terms")
        shapes = {c.shape for c in conv.values()}
        if len(shapes) != 1:
            raise ValueError("inconsistent coefficient shapes")
        shape = shapes.pop()
        if shape[0] != shape[1]:
            raise ValueError("symbol coefficients must be square")
        if size is not None and size != shape[0]:
            raise ValueError("size does not match coefficients")
        self.size = shape[0]
        self.terms = conv

    @classmethod
    def zpower(cls, k, size=1):
        if k >= 0:
            return cls({(k, 0): np.eye(size)})
        return cls({(0, -k): np.eye(size)})

    @classmethod
    def diagonal(cls, symbols):
        n = len(symbols)
        keys = set()
        for s in symbols:
            if s.size != 1:
                raise ValueError("diagonal blocks must be scalar")
            keys |= set(s.terms)
        terms = {}
        for key in keys:
            m = np.zeros((n, n), dtype=complex)
            for i, s in enumerate(symbols):
                if key in s.terms:
                    m[i, i] = s.terms[key][0, 0]
            terms[key] = m
        return cls(terms)

    @property
    def degree(self):
        return max(a + b for a, b in self.terms)

    def adjoint(self):
        """Pointwise conjugate transpose."""
        return MatrixSymbol({(b, a): c.conj().T
                             for (a, b), c in self.terms.items()})

    def evaluate(self, z):
        """Values at points ``z``; shape ``(len(z), n, n)``."""
        z = np.asarray(z, dtype=complex).reshape(-1)
        zb = z.conj()
        out = np.zeros((z.size, self.size, self.size), dtype=complex)
        for (a, b), c in self.terms.items():
            out += (z ** a * zb ** b)[:, None, None] * c[None]
        return out

    def boundary_values(self, n_samples):
        th = 2.0 * np.pi * np.arange(n_samples) / n_samples
        return th, self.evaluate(np.exp(1j * th))

    def to_json(self):
        return {"size": self.size,
                "terms": [[a, b, _cmat(c)]
                          for (a, b), c in sorted(self.terms.items())]}


def _cmat(m):
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


# ---------------------------------------------------------------------------
# Orthonormal Zernike basis of polynomials of degree <= K

def zernike_index(K):
    """List of ``(n, m)`` with ``0 <= n <= K``, ``|m| <= n``, ``n - m`` even."""
    return [(n, m) for n in range(K + 1) for m in range(-n, n + 1, 2)]


def _radial(n, m, r):
    am = abs(m)
    k = (n - am) // 2
    x = 1.0 - 2.0 * r * r
    sgn = (-1.0) ** k
    p = eval_jacobi(k, am, 0, x)
    val = sgn * r ** am * p
    if k > 0:
        dp = 0.5 * (k + am + 1) * eval_jacobi(k - 1, am + 1, 1, x)
    else:
        dp = np.zeros_like(r)
    rm1 = r ** (am - 1) if am else np.zeros_like(r)
    dval = sgn * (am * rm1 * p - 4.0 * r ** (am + 1) * dp)
    norm = np.sqrt((n + 1) / np.pi)
    return norm * val, norm * dval


def zernike_tables(K, quad):
    """Values of the orthonormal Zernike functions and of their ``d/dz`` and
    ``d/dzbar`` derivatives at the nodes of ``quad``.

    Returns arrays of shape ``(npts, nbasis)`` and the index list.
    """
    r, th, _ = quad.nodes()
    idx = zernike_index(K)
    V = np.empty((r.size, len(idx)), dtype=complex)
    Dz = np.empty_like(V)
    Dzb = np.empty_like(V)
    with np.errstate(divide="ignore", invalid="ignore"):
        for j, (n, m) in enumerate(idx):
            R, dR = _radial(n, m, r)
            am = abs(m)
            # R/r is a polynomial when m != 0, evaluate it directly
            if am:
                Ror = R / r
            else:
                Ror = np.zeros_like(r)
            V[:, j] = R * np.exp(1j * m * th)
            Dz[:, j] = 0.5 * np.exp(1j * (m - 1) * th) * (dR + m * Ror)
            Dzb[:, j] = 0.5 * np.exp(1j * (m + 1) * th) * (dR - m * Ror)
    return V, Dz, Dzb, idx
