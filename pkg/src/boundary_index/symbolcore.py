"""Operator descriptions, boundary symbols and ellipticity checks.

Conventions
-----------
``D_x = -i d/dx`` and ``D_y = -i d/dy``.  An operator on the disc is a
constant-coefficient sum ``sum_ab C_ab D_x^a D_y^b`` with ``C_ab`` of shape
``(rank_f, rank_e)``; its principal symbol is ``sum_{a+b=m} C_ab xi_x^a
xi_y^b``.  With this convention the positive Laplacian
``D_x^2 + D_y^2 = -(d_x^2 + d_y^2)`` has symbol ``|xi|^2``.

At the boundary point ``theta`` of the unit circle a covector is split as
``xi = xi' e_theta + xi_n n`` with ``e_theta = (-sin, cos)`` and ``n`` the
inward normal ``-(cos, sin)``.  Freezing ``xi'`` turns the principal symbol
into a matrix polynomial in ``xi_n``.

On the interval ``(0, 1)`` an operator is given by collar constants
``A_0..A_m`` with ``D = sum_j A_j D_x^(m-j)``; at the endpoint ``x = 0`` the
boundary symbol is ``sum_j A_j xi'^j xi_n^(m-j)`` and at ``x = 1`` the
inward coordinate is ``1 - x`` so odd powers of ``xi_n`` change sign.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import EllipticityViolation

#: tolerance on ``|Re mu|`` and on the conditioning of leading coefficients
TAU_ELL = 1e-8


def _as_cmatrix(c, rf, re_):
    c = np.asarray(c, dtype=complex)
    if c.ndim == 0:
        if rf != re_:
            raise ValueError("scalar coefficient needs square ranks")
        c = c * np.eye(rf)
    if c.shape != (rf, re_):
        raise ValueError(f"coefficient shape {c.shape} != {(rf, re_)}")
    return c


@dataclass(eq=False)
class OperatorSpec:
    """Constant-coefficient elliptic operator on the disc or the interval.

    Parameters
    ----------
    order : int
        Order ``m`` of the operator.
    rank_e, rank_f : int
        Ranks of the source and target bundles.
    domain : {"disc", "interval"}
    coefficients : dict, optional
        Disc only. ``(a, b) -> C_ab`` for ``C_ab D_x^a D_y^b``.
    collar : sequence of arrays, optional
        Interval only. ``A_0, ..., A_m``.
    name : str
    """

    order: int
    rank_e: int
    rank_f: int
    domain: str = "disc"
    coefficients: dict = field(default_factory=dict)
    collar: tuple = ()
    name: str = ""

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be positive")
        if self.domain not in ("disc", "interval"):
            raise ValueError(f"unknown domain {self.domain!r}")
        rf, re_ = self.rank_f, self.rank_e
        if self.domain == "disc":
            coeffs = {}
            for (a, b), c in self.coefficients.items():
                if a < 0 or b < 0 or a + b > self.order:
                    raise ValueError(f"bad multi-index {(a, b)}")
                coeffs[(int(a), int(b))] = _as_cmatrix(c, rf, re_)
            if not any(a + b == self.order for a, b in coeffs):
                raise ValueError("no principal part")
            self.coefficients = coeffs
            self.collar = ()
        else:
            if len(self.collar) != self.order + 1:
                raise ValueError("collar needs order + 1 constants")
            self.collar = tuple(_as_cmatrix(c, rf, re_) for c in self.collar)
            self.coefficients = {}

    @property
    def is_square(self):
        return self.rank_e == self.rank_f

    def principal_part(self):
        return {k: c for k, c in self.coefficients.items()
                if sum(k) == self.order}

    def fingerprint(self):
        """Stable digest of the operator data (used for caching)."""
        h = hashlib.sha256()
        h.update(repr((self.order, self.rank_e, self.rank_f,
                       self.domain)).encode())
        for k in sorted(self.coefficients):
            h.update(repr(k).encode())
            h.update(np.round(self.coefficients[k], 14).tobytes())
        for c in self.collar:
            h.update(np.round(c, 14).tobytes())
        return h.hexdigest()

    def with_lower_order(self, perturbation):
        """Return a copy with extra terms of order ``< m`` added."""
        if self.domain != "disc":
            raise ValueError("lower-order perturbation needs a disc operator")
        coeffs = dict(self.coefficients)
        for k, c in perturbation.items():
            if sum(k) >= self.order:
                raise ValueError("perturbation must have order below m")
            c = _as_cmatrix(c, self.rank_f, self.rank_e)
            coeffs[k] = coeffs.get(k, 0) + c
        return OperatorSpec(self.order, self.rank_e, self.rank_f, "disc",
                            coeffs, name=self.name + "+lower")

    def to_json(self):
        def cm(m):
            return [[[float(v.real), float(v.imag)] for v in row]
                    for row in m]
        d = {"name": self.name, "order": self.order, "rank_e": self.rank_e,
             "rank_f": self.rank_f, "domain": self.domain}
        if self.domain == "disc":
            d["coefficients"] = [[a, b, cm(c)] for (a, b), c
                                 in sorted(self.coefficients.items())]
        else:
            d["collar"] = [cm(c) for c in self.collar]
        return d


# ---------------------------------------------------------------------------
# polynomial helpers in (D_x, D_y)

def _pmul(p, q):
    out = {}
    for (a, b), c in p.items():
        for (e, f), d in q.items():
            k = (a + e, b + f)
            out[k] = out.get(k, 0) + c * d
    return {k: v for k, v in out.items() if v != 0}


def _ppow(p, m):
    out = {(0, 0): 1.0 + 0j}
    for _ in range(m):
        out = _pmul(out, p)
    return out


# d_x + i d_y = i D_x - D_y
_DBAR = {(1, 0): 1j, (0, 1): -1.0}
# d_x - i d_y = i D_x + D_y
_DEE = {(1, 0): 1j, (0, 1): 1.0}
_LAP = {(2, 0): 1.0, (0, 2): 1.0}


def cauchy_riemann():
    """``d/dx + i d/dy`` (twice ``d/dzbar``)."""
    return OperatorSpec(1, 1, 1, "disc", dict(_DBAR), name="cauchy_riemann")


def anti_cauchy_riemann():
    """``d/dx - i d/dy`` (twice ``d/dz``)."""
    return OperatorSpec(1, 1, 1, "disc", dict(_DEE),
                        name="anti_cauchy_riemann")


def dbar_power(m):
    """``(d/dx + i d/dy)^m``."""
    if m == 1:
        return cauchy_riemann()
    return OperatorSpec(m, 1, 1, "disc", _ppow(_DBAR, m),
                        name=f"dbar^{m}")


def dee_power(m):
    """``(d/dx - i d/dy)^m``."""
    if m == 1:
        return anti_cauchy_riemann()
    return OperatorSpec(m, 1, 1, "disc", _ppow(_DEE, m), name=f"dee^{m}")


def laplacian():
    """Positive Laplacian ``D_x^2 + D_y^2``."""
    return OperatorSpec(2, 1, 1, "disc", dict(_LAP), name="laplacian")


def bilaplacian():
    """Square of the positive Laplacian."""
    return OperatorSpec(4, 1, 1, "disc", _ppow(_LAP, 2), name="bilaplacian")


def wave_operator():
    """``-D_x^2 + D_y^2``: not elliptic."""
    return OperatorSpec(2, 1, 1, "disc", {(2, 0): -1.0, (0, 2): 1.0},
                        name="wave")


def interval_operator(collar, name="interval"):
    collar = [np.atleast_2d(np.asarray(c, dtype=complex)) for c in collar]
    r_f, r_e = collar[0].shape
    return OperatorSpec(len(collar) - 1, r_e, r_f, "interval",
                        collar=tuple(collar), name=name)


BUILTINS = {
    "laplacian": laplacian,
    "bilaplacian": bilaplacian,
    "cauchy_riemann": cauchy_riemann,
    "anti_cauchy_riemann": anti_cauchy_riemann,
    "dbar2": lambda: dbar_power(2),
    "wave": wave_operator,
}


# ---------------------------------------------------------------------------
# boundary nodes and symbols

@dataclass(frozen=True)
class BoundaryNode:
    """A point of the cosphere bundle of the boundary.

    ``point`` is an angle on the circle or an endpoint ``0``/``1`` of the
    interval; ``xi`` is ``+1`` or ``-1``.
    """

    point: float
    xi: int
    domain: str = "disc"

    def to_json(self):
        return {"point": float(self.point), "xi": int(self.xi),
                "domain": self.domain}


@dataclass(frozen=True)
class CosphereGrid:
    """Uniform sample of the boundary cosphere bundle.

    For the disc: ``n_points`` equally spaced angles times ``xi' = +-1``.
    For the interval: the two endpoints times ``xi' = +-1``.
    """

    domain: str = "disc"
    n_points: int = 64

    @property
    def nodes(self):
        if self.domain == "disc":
            th = 2.0 * np.pi * np.arange(self.n_points) / self.n_points
            pts = th
        else:
            pts = (0.0, 1.0)
        return [BoundaryNode(float(p), s, self.domain)
                for s in (1, -1) for p in pts]

    def component(self, xi):
        return [n for n in self.nodes if n.xi == xi]


class MatrixPolynomial:
    """``a(xi_n) = sum_l a_l xi_n^(m-l)`` with square matrix coefficients.

    ``coeffs[l]`` is ``a_l``; ``coeffs[0]`` is the leading coefficient.
    """

    def __init__(self, coeffs, node=None):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None, None]
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise ValueError("coefficients must be (m+1, r, r)")
        self.coeffs = c
        self.node = node

    @property
    def degree(self):
        return self.coeffs.shape[0] - 1

    @property
    def rank(self):
        return self.coeffs.shape[1]

    def __call__(self, xi):
        m = self.degree
        out = np.zeros(self.coeffs.shape[1:], dtype=complex)
        for c in self.coeffs:
            out = out * xi + c
        return out if m >= 0 else out

    def derivative_at(self, xi):
        m = self.degree
        out = np.zeros(self.coeffs.shape[1:], dtype=complex)
        for l in range(m):
            out = out * xi + (m - l) * self.coeffs[l]
        return out

    def determinant_coefficients(self):
        """Coefficients of ``det a(xi)`` (highest power first).

        ``det a`` has degree ``m r``; it is recovered exactly (up to
        rounding) by sampling at ``m r + 1`` roots of unity and inverting
        the discrete Fourier transform.
        """
        d = self.degree * self.rank
        n = d + 1
        pts = np.exp(2j * np.pi * np.arange(n) / n)
        vals = np.array([np.linalg.det(self(p)) for p in pts])
        asc = np.fft.fft(vals) / n
        return asc[::-1]

    def roots(self):
        """All roots of ``det a``."""
        c = self.determinant_coefficients()
        lead = np.abs(c[0])
        if lead < TAU_ELL * max(np.abs(c).max(), 1.0):
            raise EllipticityViolation("leading coefficient is singular",
                                       self.node)
        return np.roots(c)


def _disc_symbol(spec, theta, xi_t):
    m, rf, re_ = spec.order, spec.rank_f, spec.rank_e
    s, c = np.sin(theta), np.cos(theta)
    # xi_x = -xi_t s - xi_n c ; xi_y = xi_t c - xi_n s (ascending in xi_n)
    px = np.array([-xi_t * s, -c], dtype=complex)
    py = np.array([xi_t * c, -s], dtype=complex)
    asc = np.zeros((m + 1, rf, re_), dtype=complex)
    for (a, b), C in spec.principal_part().items():
        poly = np.array([1.0 + 0j])
        for _ in range(a):
            poly = np.convolve(poly, px)
        for _ in range(b):
            poly = np.convolve(poly, py)
        for k, v in enumerate(poly):
            asc[k] += v * C
    return asc[::-1]


def _interval_symbol(spec, endpoint, xi_t):
    m = spec.order
    out = []
    for l, A in enumerate(spec.collar):
        sgn = (-1.0) ** (m - l) if endpoint else 1.0
        out.append(sgn * A * xi_t ** l)
    return np.array(out)


def principal_symbol(spec, node, xi_scale=1.0):
    """Boundary symbol at ``node`` as a :class:`MatrixPolynomial`.

    ``xi_scale`` evaluates at ``xi' = node.xi * xi_scale`` instead of the
    unit cosphere (the result is then homogeneous of degree ``m``).

    Raises
    ------
    EllipticityViolation
        If the operator is not square or the leading coefficient is
        singular at ``node``.
    """
    if not spec.is_square:
        raise EllipticityViolation("operator is not square", node)
    xi_t = node.xi * xi_scale
    if spec.domain == "disc":
        co = _disc_symbol(spec, node.point, xi_t)
    else:
        co = _interval_symbol(spec, int(round(node.point)), xi_t)
    a0 = co[0]
    sv = np.linalg.svd(a0, compute_uv=False)
    scale = max(np.abs(co).max(), 1.0)
    if sv[-1] <= TAU_ELL * scale:
        raise EllipticityViolation(
            f"leading coefficient singular at node {node.to_json()}", node)
    return MatrixPolynomial(co, node)


def companion_matrix(poly):
    """First-order system for ``a(D_t) v = 0`` in the frame
    ``(v, dv/dt, ..., d^(m-1)v/dt^(m-1))``.

    Eigenvalues are ``mu = i xi_n`` for the roots ``xi_n`` of ``det a``, so
    decaying solutions (``Im xi_n > 0``) belong to ``Re mu < 0``.
    """
    m, r = poly.degree, poly.rank
    a0inv = np.linalg.inv(poly.coeffs[0])
    A = np.zeros((m * r, m * r), dtype=complex)
    for k in range(m - 1):
        A[k * r:(k + 1) * r, (k + 1) * r:(k + 2) * r] = np.eye(r)
    for k in range(m):
        # a(D) v = sum_l a_l D^(m-l) v, D = -i d/dt
        A[(m - 1) * r:, k * r:(k + 1) * r] = (
            -((-1j) ** (k - m)) * a0inv @ poly.coeffs[m - k])
    return A


@dataclass
class EllipticityReport:
    """Outcome of :func:`check_elliptic`.

    ``failures`` lists ``(node, reason)`` pairs; ``margin`` is the smallest
    value of ``|Im xi_n|`` over all boundary roots (normalised by the root
    modulus) and ``interior_margin`` the smallest ``|det sigma(xi)|`` over
    sampled unit covectors.
    """

    passed: bool
    margin: float
    interior_margin: float
    worst_node: BoundaryNode = None
    failures: list = field(default_factory=list)
    n_nodes: int = 0

    def raise_for_failure(self):
        if not self.passed:
            node, reason = self.failures[0]
            raise EllipticityViolation(reason, node)

    def to_json(self):
        return {
            "passed": self.passed,
            "margin": float(self.margin),
            "interior_margin": float(self.interior_margin),
            "worst_node": self.worst_node.to_json() if self.worst_node
            else None,
            "n_nodes": self.n_nodes,
            "failures": [{"node": n.to_json(), "reason": r}
                         for n, r in self.failures],
        }


def interior_symbol(spec, xi):
    """Principal symbol at an ambient covector ``xi = (xi_x, xi_y)``."""
    out = np.zeros((spec.rank_f, spec.rank_e), dtype=complex)
    for (a, b), C in spec.principal_part().items():
        out += xi[0] ** a * xi[1] ** b * C
    return out


def check_elliptic(spec, grid=None, tol=TAU_ELL, n_interior=64):
    """Test ellipticity at every node of ``grid``.

    Degenerate nodes are recorded in the report rather than raised; call
    :meth:`EllipticityReport.raise_for_failure` for the exception.
    """
    grid = grid or CosphereGrid(spec.domain)
    failures = []
    margin = np.inf
    worst = None
    if not spec.is_square:
        failures.append((grid.nodes[0], "operator is not square"))
        return EllipticityReport(False, 0.0, 0.0, grid.nodes[0], failures,
                                 len(grid.nodes))
    interior = np.inf
    if spec.domain == "disc":
        for phi in 2 * np.pi * np.arange(n_interior) / n_interior:
            d = abs(np.linalg.det(interior_symbol(
                spec, (np.cos(phi), np.sin(phi)))))
            interior = min(interior, d)
    else:
        interior = float(np.linalg.svd(spec.collar[0],
                                       compute_uv=False)[-1])
    for node in grid.nodes:
        try:
            poly = principal_symbol(spec, node)
            roots = poly.roots()
        except EllipticityViolation as exc:
            failures.append((node, str(exc)))
            margin, worst = 0.0, node
            continue
        rel = np.abs(roots.imag) / np.maximum(np.abs(roots), 1.0)
        k = int(np.argmin(rel))
        if rel[k] < margin:
            margin, worst = float(rel[k]), node
        if rel[k] <= tol:
            failures.append((node, f"real root xi_n = {roots[k].real:.6g} "
                                   f"at node {node.to_json()}"))
    passed = bool(not failures and interior > tol)
    if interior <= tol and not failures:
        failures.append((grid.nodes[0], "interior symbol is singular"))
    return EllipticityReport(passed, float(margin), float(interior), worst,
                             failures, len(grid.nodes))
