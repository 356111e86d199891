"""Line-oriented input files for operators and symbols.

Each non-blank line is ``key = value`` with a JSON value; ``#`` starts a
comment.  Complex numbers are written as ``[re, im]`` (a bare number is
real); a matrix is a list of rows of such entries.

Operator file keys::

    builtin = "laplacian"          # or give the operator explicitly:
    domain = "disc"                # "disc" | "interval"
    order = 2
    rank = 1                       # or rank_e / rank_f
    coefficient[2,0] = 1           # C_ab for C_ab D_x^a D_y^b
    collar[0] = [[[1, 0]]]         # interval: A_0 .. A_m
    lower[0,0] = [0.1, 0]          # added to a builtin (order < m)
    name = "my operator"

Symbol file keys::

    size = 1
    term[3,0] = 1                  # coefficient of z^3 zbar^0
    zpower = 2                     # shortcut for z^2 (negative: zbar)
"""

import json
import re

import numpy as np

from .errors import SpecParseError
from .polydisc import MatrixSymbol
from .symbolcore import BUILTINS, OperatorSpec

_KEY = re.compile(r"^([A-Za-z_]+)(?:\[\s*(-?\d+)\s*(?:,\s*(-?\d+)\s*)?\])?$")


def _entry(v):
    if isinstance(v, bool):
        raise ValueError("boolean is not a number")
    if isinstance(v, (int, float)):
        return complex(v)
    if (isinstance(v, list) and len(v) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool)
                    for x in v)):
        return complex(v[0], v[1])
    raise ValueError(f"not a complex number: {v!r}")


def parse_complex_array(v):
    """Number, ``[re, im]`` pair or matrix of such entries."""
    try:
        return np.array(_entry(v))
    except ValueError:
        pass
    if not isinstance(v, list) or not v or \
            not all(isinstance(r, list) for r in v):
        raise ValueError("expected a number, [re, im] or a matrix")
    rows = [[_entry(e) for e in row] for row in v]
    if len({len(r) for r in rows}) != 1:
        raise ValueError("ragged matrix")
    return np.array(rows, dtype=complex)


def _lines(text):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecParseError("expected 'key = value'", no)
        key, val = (s.strip() for s in line.split("=", 1))
        m = _KEY.match(key)
        if not m:
            raise SpecParseError(f"malformed key {key!r}", no)
        try:
            value = json.loads(val)
        except ValueError as exc:
            raise SpecParseError(f"invalid JSON value: {exc.msg}", no) \
                from exc
        idx = tuple(int(g) for g in m.groups()[1:] if g is not None)
        yield no, m.group(1), idx, value


def parse_operator(text, path=None):
    """Parse an operator file into an :class:`OperatorSpec`."""
    scalars, coeffs, collar, lower = {}, {}, {}, {}
    lines = {}
    try:
        for no, key, idx, value in _lines(text):
            lines[key] = no
            if key in ("builtin", "domain", "name"):
                if idx or not isinstance(value, str):
                    raise SpecParseError(f"{key} must be a string", no)
                scalars[key] = value
            elif key in ("order", "rank", "rank_e", "rank_f"):
                if idx or not isinstance(value, int) or value < 1:
                    raise SpecParseError(f"{key} must be a positive integer",
                                         no)
                scalars[key] = value
            elif key in ("coefficient", "lower"):
                if len(idx) != 2 or min(idx) < 0:
                    raise SpecParseError(f"{key} needs an index [a,b]", no)
                target = coeffs if key == "coefficient" else lower
                if idx in target:
                    raise SpecParseError(f"duplicate {key}{list(idx)}", no)
                try:
                    target[idx] = (parse_complex_array(value), no)
                except ValueError as exc:
                    raise SpecParseError(str(exc), no) from exc
            elif key == "collar":
                if len(idx) != 1 or idx[0] < 0:
                    raise SpecParseError("collar needs an index [j]", no)
                try:
                    collar[idx[0]] = (parse_complex_array(value), no)
                except ValueError as exc:
                    raise SpecParseError(str(exc), no) from exc
            else:
                raise SpecParseError(f"unknown key {key!r}", no)
    except SpecParseError as exc:
        exc.path = path
        raise
    return _build_operator(scalars, coeffs, collar, lower, lines, path)


def _build_operator(scalars, coeffs, collar, lower, lines, path):
    def fail(msg, key=None, line=None):
        raise SpecParseError(msg, line or lines.get(key), path)

    if "builtin" in scalars:
        name = scalars["builtin"]
        if name not in BUILTINS:
            fail(f"unknown builtin {name!r}", "builtin")
        if coeffs or collar:
            fail("builtin cannot be combined with explicit coefficients",
                 "builtin")
        spec = BUILTINS[name]()
        if lower:
            try:
                spec = spec.with_lower_order(
                    {k: v for k, (v, _) in lower.items()})
            except ValueError as exc:
                fail(str(exc), "lower")
        if "name" in scalars:
            spec.name = scalars["name"]
        return spec
    domain = scalars.get("domain", "disc")
    if domain not in ("disc", "interval"):
        fail(f"unknown domain {domain!r}", "domain")
    if "order" not in scalars:
        fail("missing 'order'", line=1)
    order = scalars["order"]
    if lower:
        fail("'lower' is only allowed with a builtin", "lower")
    try:
        if domain == "disc":
            if collar:
                fail("collar keys need domain = \"interval\"", "collar")
            if not coeffs:
                fail("no coefficients given", "order")
            first = next(iter(coeffs.values()))[0]
            shape = first.shape if first.ndim == 2 else None
            r = scalars.get("rank", shape[0] if shape else 1)
            rf = scalars.get("rank_f", r)
            re_ = scalars.get("rank_e", shape[1] if shape else r)
            return OperatorSpec(order, re_, rf, "disc",
                                {k: v for k, (v, _) in coeffs.items()},
                                name=scalars.get("name", ""))
        if coeffs:
            fail("coefficient keys need domain = \"disc\"", "coefficient")
        if sorted(collar) != list(range(order + 1)):
            fail(f"collar needs entries 0..{order}", "collar")
        mats = [np.atleast_2d(collar[j][0]) for j in range(order + 1)]
        rf, re_ = mats[0].shape
        return OperatorSpec(order, re_, rf, "interval", collar=tuple(mats),
                            name=scalars.get("name", ""))
    except ValueError as exc:
        fail(str(exc), "order")


def parse_symbol(text, path=None):
    """Parse a symbol file into a :class:`MatrixSymbol`."""
    size, terms, zpow = None, {}, None
    lines = {}
    try:
        for no, key, idx, value in _lines(text):
            lines[key] = no
            if key == "size":
                if idx or not isinstance(value, int) or value < 1:
                    raise SpecParseError("size must be a positive integer",
                                         no)
                size = value
            elif key == "zpower":
                if idx or not isinstance(value, int):
                    raise SpecParseError("zpower must be an integer", no)
                zpow = value
            elif key == "term":
                if len(idx) != 2 or min(idx) < 0:
                    raise SpecParseError("term needs an index [a,b]", no)
                if idx in terms:
                    raise SpecParseError(f"duplicate term{list(idx)}", no)
                try:
                    terms[idx] = parse_complex_array(value)
                except ValueError as exc:
                    raise SpecParseError(str(exc), no) from exc
            else:
                raise SpecParseError(f"unknown key {key!r}", no)
    except SpecParseError as exc:
        exc.path = path
        raise
    if zpow is not None:
        if terms:
            raise SpecParseError("zpower cannot be combined with terms",
                                 lines["zpower"], path)
        return MatrixSymbol.zpower(zpow, size or 1)
    if not terms:
        raise SpecParseError("symbol has no terms", 1, path)
    n = size or 1
    conv = {}
    for k, v in terms.items():
        conv[k] = v * np.eye(n) if v.ndim == 0 else v
    try:
        return MatrixSymbol(conv, size)
    except ValueError as exc:
        raise SpecParseError(str(exc), lines.get("term"), path) from exc


def read_operator(path):
    with open(path, encoding="utf-8") as fh:
        return parse_operator(fh.read(), path)


def read_symbol(path):
    with open(path, encoding="utf-8") as fh:
        return parse_symbol(fh.read(), path)
