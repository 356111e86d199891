"""Boundary matrices for Green's formula, traces and trace norms.

Sign conventions: ``<u, v> = integral v^* u``; traces are
``gamma_k f = (d/dx_n)^k f`` with ``x_n`` the inward normal coordinate
(``-d/dr`` on the disc), collected in the ``D``-frame
``(gamma_0 f, D_n gamma_0 f, ...)``, i.e. ``gamma^D_k = (-i)^k gamma_k``.
The boundary matrix satisfies

    <f, D^+ g> - <D f, g> = <A gamma f, gamma g>_boundary

and is stored as ``A = -i M`` with ``M`` anti-triangular.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .errors import CollarUnavailable, EllipticityViolation, QuadratureError
from .polydisc import DiscPolynomial
from .quadrature import DiscQuadrature, gauss_legendre_interval
from .symbolcore import (anti_cauchy_riemann, bilaplacian, cauchy_riemann,
                         dbar_power, laplacian)

TAU_GREEN = 1e-8


# ---------------------------------------------------------------------------
# trigonometric data on the circle

class FourierSeries:
    """Finite Fourier series ``sum_n c_n e^{i n theta}`` (vector valued).

    ``coeffs[i]`` is the coefficient of frequency ``lo + i``.
    """

    def __init__(self, coeffs, lo):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None]
        self.coeffs = c
        self.lo = int(lo)

    @classmethod
    def from_dict(cls, d, rank=1):
        if not d:
            return cls(np.zeros((1, rank)), 0)
        lo, hi = min(d), max(d)
        c = np.zeros((hi - lo + 1, rank), dtype=complex)
        for n, v in d.items():
            c[n - lo] += v
        return cls(c, lo)

    @property
    def rank(self):
        return self.coeffs.shape[1]

    @property
    def freqs(self):
        return np.arange(self.lo, self.lo + self.coeffs.shape[0])

    def __add__(self, other):
        lo = min(self.lo, other.lo)
        hi = max(self.freqs[-1], other.freqs[-1])
        c = np.zeros((hi - lo + 1, self.rank), dtype=complex)
        c[self.lo - lo:self.lo - lo + len(self.coeffs)] += self.coeffs
        c[other.lo - lo:other.lo - lo + len(other.coeffs)] += other.coeffs
        return FourierSeries(c, lo)

    def scale(self, s):
        return FourierSeries(s * self.coeffs, self.lo)

    def samples(self, n):
        th = 2 * np.pi * np.arange(n) / n
        return np.exp(1j * np.outer(th, self.freqs)) @ self.coeffs

    def l2_inner(self, other):
        """``<self, other>`` in ``L2`` of the circle (``d theta``)."""
        s = 0j
        f = dict(zip(other.freqs, other.coeffs))
        for n, c in zip(self.freqs, self.coeffs):
            if n in f:
                s += np.vdot(f[n], c)
        return 2 * np.pi * s

    def sobolev_norm(self, s):
        w = (1.0 + self.freqs.astype(float) ** 2) ** s
        return float(np.sqrt(2 * np.pi * np.sum(
            w[:, None] * np.abs(self.coeffs) ** 2)))


class TangentialOperator:
    """``sum_p e^{i p theta} q_p(d/dtheta)`` acting on Fourier series.

    ``terms`` maps the shift ``p`` to ascending coefficients of ``q_p``.
    """

    def __init__(self, terms):
        self.terms = {}
        for p, q in terms.items():
            q = np.trim_zeros(np.asarray(q, dtype=complex), "b")
            if q.size:
                self.terms[int(p)] = q

    @classmethod
    def zero(cls):
        return cls({})

    @classmethod
    def constant(cls, c, shift=0):
        return cls({shift: [c]})

    @property
    def order(self):
        if not self.terms:
            return -1
        return max(q.size - 1 for q in self.terms.values())

    def is_zero(self, tol=0.0):
        return all(np.abs(q).max() <= tol for q in self.terms.values())

    def __add__(self, other):
        out = {p: q.copy() for p, q in self.terms.items()}
        for p, q in other.terms.items():
            if p in out:
                n = max(out[p].size, q.size)
                out[p] = np.pad(out[p], (0, n - out[p].size)) + \
                    np.pad(q, (0, n - q.size))
            else:
                out[p] = q.copy()
        return TangentialOperator(out)

    def __neg__(self):
        return TangentialOperator({p: -q for p, q in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __matmul__(self, other):
        # e^{ip} q1(d) e^{ip'} q2(d) = e^{i(p+p')} q1(d + i p') q2(d)
        out = TangentialOperator.zero()
        for p, q1 in self.terms.items():
            for pp, q2 in other.terms.items():
                shifted = Polynomial(q1)(Polynomial([1j * pp, 1.0]))
                prod = (shifted * Polynomial(q2)).coef
                out = out + TangentialOperator({p + pp: prod})
        return out

    def inverse(self):
        if len(self.terms) != 1:
            raise EllipticityViolation("leading entry is not a pure "
                                       "multiplication operator")
        (p, q), = self.terms.items()
        if q.size != 1 or q[0] == 0:
            raise EllipticityViolation("leading entry is not invertible")
        return TangentialOperator({-p: [1.0 / q[0]]})

    def apply(self, u):
        out = None
        for p, q in self.terms.items():
            mult = np.polynomial.polynomial.polyval(1j * u.freqs, q)
            piece = FourierSeries(mult[:, None] * u.coeffs, u.lo + p)
            out = piece if out is None else out + piece
        if out is None:
            return FourierSeries(np.zeros((1, u.rank)), 0)
        return out

    def to_json(self):
        return {str(p): [[float(v.real), float(v.imag)] for v in q]
                for p, q in sorted(self.terms.items())}


class EndpointOperator:
    """Pair of constant matrices, one per endpoint of ``(0, 1)``."""

    def __init__(self, mats):
        self.mats = np.asarray(mats, dtype=complex)
        if self.mats.ndim != 3 or self.mats.shape[0] != 2:
            raise ValueError("expected shape (2, r, r)")

    @classmethod
    def zero(cls, r):
        return cls(np.zeros((2, r, r)))

    @property
    def order(self):
        return -1 if self.is_zero() else 0

    def is_zero(self, tol=0.0):
        return bool(np.abs(self.mats).max() <= tol)

    def __add__(self, other):
        return EndpointOperator(self.mats + other.mats)

    def __neg__(self):
        return EndpointOperator(-self.mats)

    def __sub__(self, other):
        return EndpointOperator(self.mats - other.mats)

    def __matmul__(self, other):
        return EndpointOperator(self.mats @ other.mats)

    def inverse(self):
        try:
            return EndpointOperator(np.linalg.inv(self.mats))
        except np.linalg.LinAlgError as exc:
            raise EllipticityViolation("singular leading coefficient") \
                from exc

    def apply(self, u):
        return np.einsum("eij,ej->ei", self.mats, u)

    def to_json(self):
        return [[[[float(v.real), float(v.imag)] for v in row] for row in m]
                for m in self.mats]


@dataclass
class SeeleyMatrix:
    """Boundary matrix ``factor * entries``.

    For a freshly built matrix ``factor = -1j`` and ``entries`` is
    anti-triangular with the leading coefficient ``A_0`` on the skew
    diagonal.  Inverses are stored with ``factor = 1j``.
    """

    entries: list
    factor: complex
    domain: str
    order: int

    @property
    def m(self):
        return len(self.entries)

    def leading(self):
        return [self.entries[j][self.m - 1 - j] for j in range(self.m)]

    def is_anti_triangular(self, tol=0.0):
        m = self.m
        return all(self.entries[j][k].is_zero(tol)
                   for j in range(m) for k in range(m) if j + k > m - 1)

    def entry_orders(self):
        return [[e.order for e in row] for row in self.entries]

    def apply(self, tv):
        """Apply to a :class:`TraceVector` in the ``D``-frame."""
        m = self.m
        if self.domain == "disc":
            comps = []
            for j in range(m):
                acc = None
                for k in range(m):
                    piece = self.entries[j][k].apply(tv.components[k])
                    acc = piece if acc is None else acc + piece
                comps.append(acc.scale(self.factor))
            return TraceVector(comps, "disc", "D")
        vals = np.zeros_like(tv.values)
        for j in range(m):
            for k in range(m):
                vals[:, j] += self.entries[j][k].apply(tv.values[:, k])
        return TraceVector(None, "interval", "D", self.factor * vals)

    def compose(self, other):
        m = self.m
        ents = []
        for j in range(m):
            row = []
            for k in range(m):
                acc = self.entries[j][0] @ other.entries[0][k]
                for l in range(1, m):
                    acc = acc + self.entries[j][l] @ other.entries[l][k]
                row.append(acc)
            ents.append(row)
        return SeeleyMatrix(ents, self.factor * other.factor, self.domain,
                            self.order)

    def to_json(self):
        return {"factor": [float(np.real(self.factor)),
                           float(np.imag(self.factor))],
                "domain": self.domain,
                "entries": [[e.to_json() for e in row]
                            for row in self.entries]}


@dataclass
class TraceVector:
    """Boundary data ``(gamma_0 f, ..., gamma_{m-1} f)``.

    On the disc each component is a :class:`FourierSeries`; on the
    interval ``values[e, k]`` holds component ``k`` at endpoint ``e``.
    """

    components: list
    domain: str
    frame: str = "D"
    values: np.ndarray = None

    @property
    def m(self):
        if self.domain == "disc":
            return len(self.components)
        return self.values.shape[1]

    def pairing(self, other):
        """``<self, other>`` on the boundary (second argument conjugated)."""
        if self.domain == "disc":
            return sum(a.l2_inner(b) for a, b in
                       zip(self.components, other.components))
        return complex(np.vdot(other.values, self.values))

    def samples(self, n=64):
        return np.stack([c.samples(n) for c in self.components])

    def mixed_norm(self, s=-0.5):
        """Norm in ``sum_k H^{s - k}`` (disc only)."""
        tot = sum(c.sobolev_norm(s - k) ** 2
                  for k, c in enumerate(self.components))
        return float(np.sqrt(tot))


# ---------------------------------------------------------------------------
# Seeley matrices

def _T(terms):
    return TangentialOperator(terms)


def _disc_table():
    # entries M of A = -i M in the D-frame, per built-in operator
    z = TangentialOperator.zero()
    lap = [[z, _T({0: [1]})], [_T({0: [1]}), z]]
    one = _T({0: [1]})
    lap2_t = _T({0: [1, 0, -2]})
    bilap = [[z, lap2_t, _T({0: [1j]}), one],
             [lap2_t, z, one, z],
             [_T({0: [-1j]}), one, z, z],
             [one, z, z, z]]
    cr = [[_T({1: [-1j]})]]
    acr = [[_T({-1: [-1j]})]]
    dbar2 = [[_T({2: [2j, 2]}), _T({2: [-1]})],
             [_T({2: [-1]}), z]]
    return {
        laplacian().fingerprint(): lap,
        bilaplacian().fingerprint(): bilap,
        cauchy_riemann().fingerprint(): cr,
        anti_cauchy_riemann().fingerprint(): acr,
        dbar_power(2).fingerprint(): dbar2,
    }


_DISC_TABLE = None


def build_seeley_matrix(spec):
    """Boundary matrix of ``spec``.

    Interval operators use their collar constants; on the disc the
    matrices of the positive Laplacian, its square, ``d_x + i d_y``, its
    conjugate and its square are tabulated.

    Raises
    ------
    CollarUnavailable
        For any other disc operator.
    """
    global _DISC_TABLE
    m = spec.order
    if spec.domain == "interval":
        r = spec.rank_e
        ents = [[EndpointOperator.zero(r) for _ in range(m)]
                for _ in range(m)]
        for p in range(m):
            for q in range(m - p):
                k = p + q + 1
                a = spec.collar[m - k]
                ents[p][q] = EndpointOperator(np.stack(
                    [a, (-1.0) ** k * a]))
        return SeeleyMatrix(ents, -1j, "interval", m)
    if _DISC_TABLE is None:
        _DISC_TABLE = _disc_table()
    ents = _DISC_TABLE.get(spec.fingerprint())
    if ents is None:
        raise CollarUnavailable(
            f"no boundary matrix shipped for {spec.name or 'operator'}")
    return SeeleyMatrix([list(row) for row in ents], -1j, "disc", m)


def invert_seeley(A):
    """Inverse of an anti-triangular boundary matrix by back-substitution.

    Row ``j`` of ``M x = y`` involves only ``x_0 .. x_{m-1-j}``, so the
    unknowns are recovered from ``x_0`` upwards in ``m`` steps.
    """
    m = A.m
    M = A.entries
    lead = M[m - 1][0]
    inv0 = lead.inverse()
    for j in range(m):
        if not _same(M[j][m - 1 - j], lead):
            raise EllipticityViolation("skew diagonal is not constant")
    zero = _zero_like(lead)
    ident = _ident_like(lead)
    N = [[zero for _ in range(m)] for _ in range(m)]
    for step in range(m):
        j = m - 1 - step           # row used to determine x_step
        row = []
        for l in range(m):
            acc = ident if l == j else zero
            for k in range(step):
                acc = acc - M[j][k] @ N[k][l]
            row.append(inv0 @ acc)
        N[step] = row
    return SeeleyMatrix(N, 1.0 / A.factor, A.domain, A.order)


def _same(a, b):
    d = a - b
    return d.is_zero(1e-14)


def _zero_like(op):
    if isinstance(op, TangentialOperator):
        return TangentialOperator.zero()
    return EndpointOperator.zero(op.mats.shape[1])


def _ident_like(op):
    if isinstance(op, TangentialOperator):
        return TangentialOperator.constant(1.0)
    r = op.mats.shape[1]
    return EndpointOperator(np.stack([np.eye(r), np.eye(r)]))


# ---------------------------------------------------------------------------
# applying operators to test sections

def formal_adjoint(spec):
    """Formal adjoint of a constant-coefficient operator."""
    from .symbolcore import OperatorSpec
    if spec.domain == "disc":
        return OperatorSpec(spec.order, spec.rank_f, spec.rank_e, "disc",
                            {k: c.conj().T
                             for k, c in spec.coefficients.items()},
                            name=spec.name + "^+")
    return OperatorSpec(spec.order, spec.rank_f, spec.rank_e, "interval",
                        collar=tuple(c.conj().T for c in spec.collar),
                        name=spec.name + "^+")


def apply_operator(spec, f):
    """Exact ``D f`` for a disc polynomial or bump section ``f``.

    ``D_x = -i (d_z + d_zbar)`` and ``D_y = d_z - d_zbar``.
    """
    if spec.domain != "disc":
        raise ValueError("disc operator expected")
    out = None
    for (a, b), C in spec.coefficients.items():
        g = f
        for _ in range(a):
            g = (g.dz() + g.dzbar()).scale(-1j)
        for _ in range(b):
            g = g.dz() + g.dzbar().scale(-1.0)
        g = g.apply_matrix(C)
        out = g if out is None else out + g
    return out


def _interval_apply(spec, f):
    # f: (deg+1, r) ascending coefficients; D = sum A_j D_x^(m-j)
    m = spec.order
    f = np.asarray(f, dtype=complex)
    out = np.zeros_like(f, dtype=complex)
    for j, A in enumerate(spec.collar):
        k = m - j
        g = f
        for _ in range(k):
            g = -1j * np.polynomial.polynomial.polyder(g, axis=0) \
                if g.shape[0] > 1 else np.zeros_like(g)
        g = np.pad(g, ((0, f.shape[0] - g.shape[0]), (0, 0)))
        out += g @ A.T
    return out


def trace(spec, f):
    """Boundary traces of ``f`` in the ``D``-frame.

    ``f`` is a :class:`DiscPolynomial` (or bump section) on the disc, or an
    array of ascending polynomial coefficients of shape ``(deg+1, r)`` on
    the interval.
    """
    m = spec.order
    if spec.domain == "disc":
        comps = []
        for k in range(m):
            d = f.radial_trace(k)
            comps.append(FourierSeries.from_dict(d, f.rank)
                         .scale((-1j) ** k))
        return TraceVector(comps, "disc", "D")
    f = np.asarray(f, dtype=complex)
    if f.ndim == 1:
        f = f[:, None]
    vals = np.zeros((2, m, f.shape[1]), dtype=complex)
    g = f
    for k in range(m):
        v0 = g[0] if g.shape[0] else 0
        v1 = g.sum(axis=0)
        vals[0, k] = (-1j) ** k * v0
        vals[1, k] = (-1j) ** k * (-1) ** k * v1
        g = np.polynomial.polynomial.polyder(g, axis=0) \
            if g.shape[0] > 1 else np.zeros((1, f.shape[1]))
    return TraceVector(None, "interval", "D", vals)


@dataclass
class GreensCheck:
    residual: float
    relative: float
    lhs: complex
    boundary: complex
    level: int


def _volume_inner(f, g, quad):
    z, w = quad.points()
    return complex(np.sum(w[:, None] * np.conj(g.evaluate(z))
                          * f.evaluate(z)))


def verify_greens_formula(spec, f, g, quad=None, tol=1e-12):
    """Residual of ``<f, D^+ g> - <D f, g> = <A gamma f, gamma g>``.

    Volume integrals are evaluated with a rule exact for the polynomial
    degree and repeated on the doubled rule; if the two disagree by more
    than ``tol`` (relative) a :class:`QuadratureError` is raised.
    """
    A = build_seeley_matrix(spec)
    adj = formal_adjoint(spec)
    if spec.domain == "interval":
        return _verify_interval(spec, adj, A, f, g, tol)
    Df = apply_operator(spec, f)
    Dg = apply_operator(adj, g)
    deg = f.degree + g.degree
    if quad is None:
        quad = DiscQuadrature.for_degree(deg + 8)
        supports = [h.rho for h in (f, g) if hasattr(h, "rho")]
        if supports:
            quad = DiscQuadrature(128, deg + 32, min(supports))
    q1 = quad
    levels = []
    for level, q in enumerate((q1, q1.refined())):
        t1 = _volume_inner(f, Dg, q)
        t2 = _volume_inner(Df, g, q)
        levels.append((t1, t2))
    scale = max(abs(levels[1][0]), abs(levels[1][1]), 1e-300)
    diff = max(abs(levels[0][0] - levels[1][0]),
               abs(levels[0][1] - levels[1][1]))
    if diff > tol * max(scale, 1.0):
        raise QuadratureError(f"volume integrals unconverged ({diff:.3g})")
    lhs = levels[1][0] - levels[1][1]
    bnd = A.apply(trace(spec, f)).pairing(trace(spec, g))
    res = abs(lhs - bnd)
    return GreensCheck(float(res), float(res / max(scale, 1.0)), lhs, bnd, 1)


def _verify_interval(spec, adj, A, f, g, tol):
    f = np.atleast_2d(np.asarray(f, dtype=complex).T).T
    g = np.atleast_2d(np.asarray(g, dtype=complex).T).T
    Df = _interval_apply(spec, f)
    Dg = _interval_apply(adj, g)
    n = (f.shape[0] + g.shape[0]) // 2 + 2
    vals = []
    for nn in (n, 2 * n):
        x, w = gauss_legendre_interval(nn)
        pv = np.polynomial.polynomial.polyval
        F = pv(x, f).T
        G = pv(x, g).T
        t1 = np.sum(w[:, None] * np.conj(pv(x, Dg).T) * F)
        t2 = np.sum(w[:, None] * np.conj(G) * pv(x, Df).T)
        vals.append((t1, t2))
    scale = max(abs(vals[1][0]), abs(vals[1][1]), 1e-300)
    diff = max(abs(vals[0][0] - vals[1][0]), abs(vals[0][1] - vals[1][1]))
    if diff > tol * max(scale, 1.0):
        raise QuadratureError(f"volume integrals unconverged ({diff:.3g})")
    lhs = vals[1][0] - vals[1][1]
    bnd = A.apply(trace(spec, f)).pairing(trace(spec, g))
    res = abs(lhs - bnd)
    return GreensCheck(float(res), float(res / max(scale, 1.0)), lhs, bnd, 1)


# ---------------------------------------------------------------------------
# trace norms

def kernel_norm(spec, f):
    """Graph norm ``(|f|^2 + |D f|^2)^(1/2)``, computed from exact moments."""
    Df = apply_operator(spec, f)
    return float(np.sqrt(abs(f.inner_exact(f)) + abs(Df.inner_exact(Df))))


def trace_norm_ratio(spec, family, s=-0.5):
    """Ratios ``|gamma f|_{H^s mixed} / |f|_D`` over ``family``.

    Raises ``ValueError`` for the zero section.
    """
    out = []
    for f in family:
        if not f.terms:
            raise ValueError("zero section has no defined ratio")
        tv = trace(spec, f)
        out.append(tv.mixed_norm(s) / kernel_norm(spec, f))
    return np.array(out)
