"""Tensor-product quadrature on the closed unit disc and on intervals."""

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError


def gauss_legendre_interval(n, lo=0.0, hi=1.0):
    """Gauss--Legendre nodes and weights on ``[lo, hi]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


@dataclass(frozen=True)
class DiscQuadrature:
    """Gauss--Legendre (radial, weight ``r``) times trapezoid (angular).

    ``radius < 1`` restricts the rule to a smaller disc (for integrands
    supported there).

    The rule integrates ``r**k * exp(1j*l*theta)`` exactly whenever
    ``k + 1 <= 2*n_radial - 1`` and ``|l| < n_angular``, so a polynomial in
    ``z, conj(z)`` of total degree ``d`` is integrated exactly provided
    ``d <= exact_degree``.
    """

    n_radial: int
    n_angular: int
    radius: float = 1.0

    @classmethod
    def for_degree(cls, degree):
        """Smallest rule that is exact for total degree ``degree``."""
        degree = max(int(degree), 0)
        n_r = (degree + 1) // 2 + 1
        n_t = degree + 1
        return cls(n_r, max(n_t, 4))

    @property
    def exact_degree(self):
        return min(2 * self.n_radial - 2, self.n_angular - 1)

    def refined(self):
        return DiscQuadrature(2 * self.n_radial, 2 * self.n_angular,
                              self.radius)

    def require(self, degree):
        if degree > self.exact_degree:
            raise QuadratureError(
                f"rule exact to degree {self.exact_degree}, "
                f"integrand has degree {degree}")

    def nodes(self):
        """Return ``(r, theta, w)`` flattened over the tensor grid."""
        r, wr = gauss_legendre_interval(self.n_radial, 0.0, self.radius)
        th = 2.0 * np.pi * np.arange(self.n_angular) / self.n_angular
        wt = np.full(self.n_angular, 2.0 * np.pi / self.n_angular)
        R, T = np.meshgrid(r, th, indexing="ij")
        W = np.outer(wr * r, wt)
        return R.ravel(), T.ravel(), W.ravel()

    def points(self):
        r, th, w = self.nodes()
        return r * np.exp(1j * th), w
