"""Test sections with exact derivatives.

:class:`DiscPolynomial` covers polynomial data.  :class:`BumpSection`
multiplies a polynomial by the smooth radial cutoff
``phi(s) = exp(-1/(rho^2 - s))`` (``s = |z|^2``), supported in ``|z| < rho``;
the family ``sum_k phi^(k)(s) P_k(z, zbar)`` is closed under ``d/dz`` and
``d/dzbar`` so derivatives stay exact.
"""

import numpy as np
from numpy.polynomial import polynomial as P

from .polydisc import DiscPolynomial


def _phi_derivative_polys(kmax):
    # phi^(k)(s) = exp(-t) q_k(t), t = 1/(rho^2 - s), dt/ds = t^2
    qs = [np.array([1.0])]
    for _ in range(kmax):
        q = qs[-1]
        nxt = P.polysub(P.polyder(q), q) if q.size > 1 else -q
        qs.append(P.polymulx(P.polymulx(nxt)))
    return qs


class BumpSection:
    """``sum_k phi^(k)(|z|^2) P_k`` with ``phi`` a cutoff of radius ``rho``.

    Parameters
    ----------
    base : DiscPolynomial
        Polynomial factor (``P_0``).
    rho : float
        Support radius, ``0 < rho < 1``.
    """

    def __init__(self, base, rho=0.7, parts=None):
        if not 0 < rho < 1:
            raise ValueError("support radius must lie in (0, 1)")
        self.rho = float(rho)
        self.rank = base.rank if base is not None else parts[0].rank
        self.parts = dict(parts) if parts is not None else {0: base}

    @property
    def degree(self):
        return max(p.degree for p in self.parts.values())

    def _wrap(self, parts):
        return BumpSection(None, self.rho, parts)

    def dz(self):
        out = {}
        for k, p in self.parts.items():
            zb = DiscPolynomial({(a, b + 1): c for (a, b), c
                                 in p.terms.items()}, p.rank)
            for kk, q in ((k, p.dz()), (k + 1, zb)):
                out[kk] = out[kk] + q if kk in out else q
        return self._wrap(out)

    def dzbar(self):
        out = {}
        for k, p in self.parts.items():
            zz = DiscPolynomial({(a + 1, b): c for (a, b), c
                                 in p.terms.items()}, p.rank)
            for kk, q in ((k, p.dzbar()), (k + 1, zz)):
                out[kk] = out[kk] + q if kk in out else q
        return self._wrap(out)

    def scale(self, s):
        return self._wrap({k: p.scale(s) for k, p in self.parts.items()})

    def apply_matrix(self, m):
        return self._wrap({k: p.apply_matrix(m)
                           for k, p in self.parts.items()})

    def __add__(self, other):
        out = dict(self.parts)
        for k, p in other.parts.items():
            out[k] = out[k] + p if k in out else p
        return self._wrap(out)

    def evaluate(self, z):
        z = np.asarray(z, dtype=complex).reshape(-1)
        s = np.abs(z) ** 2
        inside = s < self.rho ** 2 - 1e-14
        t = np.zeros_like(s)
        t[inside] = 1.0 / (self.rho ** 2 - s[inside])
        qs = _phi_derivative_polys(max(self.parts))
        out = np.zeros((z.size, self.rank), dtype=complex)
        e = np.zeros_like(s)
        e[inside] = np.exp(-t[inside])
        for k, p in self.parts.items():
            fac = e * P.polyval(t, qs[k])
            out += fac[:, None] * p.evaluate(z)
        return out

    def radial_trace(self, k):
        # the support is strictly inside the disc
        return {}
