"""Built-in operator/symbol/test-function collections."""

import numpy as np

from .bergman import random_loop
from .polydisc import DiscPolynomial, MatrixSymbol
from .symbolcore import bilaplacian, cauchy_riemann, dbar_power, laplacian


def core_operators():
    """Operators with closed-form kernels and shipped boundary matrices."""
    return [cauchy_riemann(), dbar_power(2), laplacian(), bilaplacian()]


def random_polynomial(rng, degree, rank=1):
    terms = {}
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            terms[(a, b)] = rng.normal(size=rank) + 1j * rng.normal(size=rank)
    return DiscPolynomial(terms, rank)


def greens_pairs(seed=0, count=6):
    """Test pairs ``(id, f, g)``: two hand-picked plus random ones."""
    rng = np.random.default_rng(seed)
    pairs = [("zzbar_1", DiscPolynomial({(1, 1): 1.0}),
              DiscPolynomial({(0, 0): 1.0})),
             ("z3_zbar", DiscPolynomial({(3, 0): 1.0}),
              DiscPolynomial({(0, 1): 1.0}))]
    while len(pairs) < count:
        k = len(pairs)
        pairs.append((f"random_{k}", random_polynomial(rng, 3 + k % 3),
                      random_polynomial(rng, 2 + k % 4)))
    return pairs


def cross_check_symbols(seed=0, n_random=3):
    """``z^0 .. z^3`` followed by ``n_random`` random loops."""
    rng = np.random.default_rng(seed)
    syms = [(f"z^{k}", MatrixSymbol.zpower(k)) for k in range(4)]
    syms += [(f"loop_{i}", random_loop(rng)) for i in range(n_random)]
    return syms
