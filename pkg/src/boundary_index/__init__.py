"""Numerical toolkit for elliptic boundary problems on the disc.

Submodules
----------
symbolcore
    operator descriptions, boundary symbols, ellipticity
calderon
    principal symbol of the Calderon projector (two routes)
greens
    boundary matrices, Green's formula checks and trace norms
bergman
    kernel bases, Toeplitz truncations and numerical indices
topoindex
    winding numbers, orientation calibration and cross-checks
transformlab
    finite-dimensional bounded-transform experiments
"""

from . import errors  # noqa: F401

__version__ = "0.1.0"
