"""Winding numbers and the boundary index formula on the circle.

The cosphere bundle of the unit circle is two circles (``xi' = +1`` and
``xi' = -1``).  On each of them ``E_+`` is a trivial bundle of constant
rank and the pairing with a loop ``alpha`` reduces to
``rank(E_+) * winding(det alpha)``.  The orientation sign attached to each
component is not derived; it is pinned once against two reference
Toeplitz problems and stored in a small JSON file.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .bergman import DEFAULT_SCHEDULE, ToeplitzProblem, numerical_index
from .calderon import e_plus_rank
from .errors import (CalibrationFailure, CalibrationRequired, IndexUnstable,
                     NotInvertibleOnBoundary, UnderSampled)
from .polydisc import MatrixSymbol
from .symbolcore import anti_cauchy_riemann, cauchy_riemann

TAU_INV = 1e-6
CALIBRATION_VERSION = 1
ROUNDING_DEFECT = 0.01


@dataclass
class BoundaryLoopSymbol:
    """Samples ``alpha(e^{i theta_k})`` on a uniform grid of the circle."""

    thetas: np.ndarray
    values: np.ndarray
    tau_inv: float = TAU_INV

    @classmethod
    def from_symbol(cls, symbol, n_samples=256, tau_inv=TAU_INV):
        th, vals = symbol.boundary_values(n_samples)
        return cls(th, vals, tau_inv)

    @property
    def n_samples(self):
        return self.thetas.size

    @property
    def dets(self):
        return np.linalg.det(self.values)

    @property
    def min_abs_det(self):
        return float(np.abs(self.dets).min())


def winding_number(loop):
    """Winding number of ``det alpha`` around the origin.

    Raises
    ------
    NotInvertibleOnBoundary
        If ``|det alpha|`` drops below ``tau_inv``.
    UnderSampled
        If the argument of ``det alpha`` jumps by ``pi/2`` or more between
        consecutive samples.
    """
    d = loop.dets
    if np.abs(d).min() < loop.tau_inv:
        raise NotInvertibleOnBoundary(
            f"min |det alpha| = {np.abs(d).min():.3g}")
    steps = np.angle(np.roll(d, -1) / d)
    if np.abs(steps).max() >= np.pi / 2:
        raise UnderSampled(
            f"argument jump {np.abs(steps).max():.3f} with "
            f"{d.size} samples")
    total = steps.sum() / (2 * np.pi)
    w = int(np.round(total))
    if abs(total - w) > ROUNDING_DEFECT:
        raise UnderSampled(f"winding not close to an integer ({total})")
    return w


def symbol_winding(symbol, n_samples=256, max_samples=1 << 16):
    """Winding of ``det alpha`` with automatic sample doubling."""
    n = n_samples
    while True:
        try:
            return winding_number(
                BoundaryLoopSymbol.from_symbol(symbol, n)), n
        except UnderSampled:
            n *= 2
            if n > max_samples:
                raise


# ---------------------------------------------------------------------------
# calibration store

@dataclass
class CalibrationStore:
    """Orientation signs for the two cosphere components.

    ``signs`` maps ``"+"``/``"-"`` to ``+1``/``-1``.  ``references`` records
    the numerical indices the signs were fitted to.
    """

    signs: dict
    references: list = field(default_factory=list)
    version: int = CALIBRATION_VERSION
    schedule: tuple = DEFAULT_SCHEDULE

    def to_json(self):
        return {"version": self.version,
                "signs": {k: int(v) for k, v in sorted(self.signs.items())},
                "references": self.references,
                "schedule": list(self.schedule)}

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    def save(self, path):
        text = self.dumps()
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)

    @classmethod
    def from_json(cls, data):
        if data.get("version") != CALIBRATION_VERSION:
            raise CalibrationFailure(
                f"unsupported calibration version {data.get('version')}")
        signs = data.get("signs", {})
        if set(signs) != {"+", "-"} or any(v not in (1, -1)
                                           for v in signs.values()):
            raise CalibrationFailure("malformed sign table")
        return cls(dict(signs), list(data.get("references", [])),
                   data["version"], tuple(data.get("schedule",
                                                   DEFAULT_SCHEDULE)))

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            raise CalibrationFailure(f"cannot read {path}: {exc}") from exc
        return cls.from_json(data)


_REFERENCES = (
    ("cauchy_riemann", cauchy_riemann, "+"),
    ("anti_cauchy_riemann", anti_cauchy_riemann, "-"),
)


def _reference_symbol():
    return MatrixSymbol.zpower(1)


def calibrate_orientation(path=None, schedule=DEFAULT_SCHEDULE):
    """Fit the component signs to reference Toeplitz indices.

    ``d_x + i d_y`` has ``E_+`` only over ``xi' = +1`` and fixes the sign of
    that component from ``ind T_z``; its conjugate ``d_x - i d_y`` fixes the
    other one.  If ``path`` is given the store is written there.
    """
    alpha = _reference_symbol()
    w, _ = symbol_winding(alpha)
    signs, refs = {}, []
    for name, factory, comp in _REFERENCES:
        spec = factory()
        try:
            est = numerical_index(ToeplitzProblem(spec, alpha,
                                                  tuple(schedule)))
        except IndexUnstable as exc:
            raise CalibrationFailure(f"reference {name} unstable") from exc
        ranks = {c: e_plus_rank(spec, 1 if c == "+" else -1)
                 for c in "+-"}
        other = "-" if comp == "+" else "+"
        if ranks[other] != 0 or ranks[comp] == 0:
            raise CalibrationFailure(f"reference {name} does not isolate "
                                     f"component {comp}")
        val = est.index / (ranks[comp] * w)
        if val not in (1, -1):
            raise CalibrationFailure(
                f"reference {name} gives non-unit sign {val}")
        signs[comp] = int(val)
        refs.append({"operator": name, "symbol": "z", "index": est.index,
                     "component": comp, "rank": ranks[comp], "winding": w})
    store = CalibrationStore(signs, refs, CALIBRATION_VERSION,
                             tuple(schedule))
    if path is not None:
        store.save(path)
    return store


def verify_calibration(store):
    """Recompute the references from stored signs; raise on mismatch."""
    factories = {name: f for name, f, _ in _REFERENCES}
    if not store.references:
        raise CalibrationFailure("store lists no reference problems")
    for ref in store.references:
        spec = factories[ref["operator"]]()
        rep = topological_index(spec, _reference_symbol(), store,
                                verify=False)
        if rep.index != ref["index"]:
            raise CalibrationFailure(
                f"store does not reproduce {ref['operator']}: "
                f"{rep.index} != {ref['index']}")
    return True


@dataclass
class TopologicalIndexReport:
    windings: dict
    ranks: dict
    signs: dict
    index: int
    samples: int
    provenance: str = ""

    def recompute(self):
        return sum(self.signs[c] * self.ranks[c] * self.windings[c]
                   for c in ("+", "-"))

    def to_json(self):
        return {"windings": self.windings, "ranks": self.ranks,
                "signs": self.signs, "index": self.index,
                "samples": self.samples, "provenance": self.provenance}


def topological_index(spec, symbol, store=None, verify=True):
    """``sum_c s_c * rank(E_+ over c) * winding(det alpha)``.

    Raises
    ------
    CalibrationRequired
        When ``store`` is ``None``.
    """
    if store is None:
        raise CalibrationRequired("orientation signs are not calibrated")
    if spec.domain != "disc":
        raise ValueError("the boundary formula is implemented on the disc")
    if verify:
        verify_calibration(store)
    w, n = symbol_winding(symbol)
    ranks = {"+": e_plus_rank(spec, 1), "-": e_plus_rank(spec, -1)}
    windings = {"+": w, "-": w}
    signs = {k: int(v) for k, v in store.signs.items()}
    rep = TopologicalIndexReport(windings, ranks, signs, 0, n,
                                 f"calibration v{store.version}")
    rep.index = int(rep.recompute())
    return rep


@dataclass
class Verdict:
    equal: bool
    numerical: int
    topological: int
    estimate: object
    report: object

    def to_json(self):
        return {"verdict": "equal" if self.equal else "unequal",
                "numerical": self.numerical,
                "topological": self.topological,
                "numerical_detail": self.estimate.to_json(),
                "topological_detail": self.report.to_json()}


def cross_check(spec, symbol, store, schedule=DEFAULT_SCHEDULE):
    """Compare the Toeplitz index with the boundary formula."""
    verify_calibration(store)
    est = numerical_index(ToeplitzProblem(spec, symbol, tuple(schedule)))
    rep = topological_index(spec, symbol, store, verify=False)
    return Verdict(est.index == rep.index, est.index, rep.index, est, rep)
