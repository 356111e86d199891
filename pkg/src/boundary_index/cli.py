"""Command line front end.

Exit status: 0 when every contract of the run holds, 1 on a contract
failure, 2 on malformed input files, 3 on internal errors.
"""

import argparse
import csv
import datetime
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import BoundaryIndexError, SpecParseError

OUT_ENV = "BOUNDARY_INDEX_OUT"

DEFAULT_TOLS = {
    "tau_ell": 1e-8, "tau_idem": 1e-8, "tau_agree": 1e-8,
    "tau_cluster": 1e-6, "tau_ker": 1e-9, "tau_sv": 1e-6,
    "tau_inv": 1e-6, "tau_green": 1e-8,
}


class ContractFailure(Exception):
    """A run finished but one of its checked invariants failed."""


@dataclass
class RunConfig:
    command: str
    spec: str = None
    symbol: str = None
    pairs: str = None
    out: str = "."
    tols: dict = field(default_factory=lambda: dict(DEFAULT_TOLS))
    schedule: tuple = (40, 60, 80)
    grid: int = 64
    seed: int = 0
    plots: bool = False
    calibration: str = None
    mode: str = "both"
    workers: int = 1

    def __post_init__(self):
        for k, v in self.tols.items():
            if not v > 0:
                raise ValueError(f"tolerance {k} must be positive")
        if any(n <= 0 for n in self.schedule) or len(self.schedule) < 3:
            raise ValueError("schedule needs at least three positive sizes")
        if self.grid <= 0 or self.workers <= 0:
            raise ValueError("grid and workers must be positive")


# ---------------------------------------------------------------------------
# output helpers

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    return x


def dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def dump_csv(rows, header, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def _cm(m):
    return [[[float(v.real), float(v.imag)] for v in row]
            for row in np.atleast_2d(m)]


def _load_spec(cfg, required=True):
    from .specfile import read_operator
    if cfg.spec is None:
        if required:
            raise SpecParseError("--spec is required")
        return None
    try:
        return read_operator(cfg.spec)
    except OSError as exc:
        raise SpecParseError(f"cannot read {cfg.spec}: {exc}") from exc


def _load_symbol(cfg):
    from .specfile import read_symbol
    if cfg.symbol is None:
        raise SpecParseError("--symbol is required")
    try:
        return read_symbol(cfg.symbol)
    except OSError as exc:
        raise SpecParseError(f"cannot read {cfg.symbol}: {exc}") from exc


def _base(cfg, keys):
    return {"seed": cfg.seed,
            "tolerances": {k: cfg.tols[k] for k in keys}}


# ---------------------------------------------------------------------------
# subcommands

def cmd_ellipticity(cfg):
    from .symbolcore import CosphereGrid, check_elliptic
    spec = _load_spec(cfg)
    rep = check_elliptic(spec, CosphereGrid(spec.domain, cfg.grid),
                         cfg.tols["tau_ell"])
    out = _base(cfg, ["tau_ell"])
    out.update({"operator": spec.to_json(), "report": rep.to_json()})
    dump_json(out, os.path.join(cfg.out, "ellipticity.json"))
    if not rep.passed:
        raise ContractFailure("ellipticity: " + rep.failures[0][1])
    return out


def cmd_calderon_symbol(cfg):
    from .calderon import (e_plus_projector, hormander_symbol,
                           idempotency_defect)
    from .symbolcore import CosphereGrid
    spec = _load_spec(cfg)
    grid = CosphereGrid(spec.domain, cfg.grid)
    nodes, rows = [], []
    worst_dis = worst_def = 0.0
    for node in grid.nodes:
        P1 = e_plus_projector(spec, node, tol=cfg.tols["tau_ell"])
        P2 = hormander_symbol(spec, node, tol_cluster=cfg.tols["tau_cluster"])
        dis = float(np.linalg.norm(P1 - P2, 2))
        dfc = max(idempotency_defect(P1), idempotency_defect(P2))
        worst_dis, worst_def = max(worst_dis, dis), max(worst_def, dfc)
        rank = int(round(np.trace(P1).real))
        nodes.append({"node": node.to_json(), "frame": "D_t",
                      "riesz": _cm(P1), "hormander": _cm(P2),
                      "disagreement": dis, "idempotency_defect": dfc,
                      "rank": rank})
        rows.append([node.point, node.xi, rank, dis, dfc])
    ok = worst_dis <= cfg.tols["tau_agree"] and \
        worst_def <= cfg.tols["tau_idem"]
    out = _base(cfg, ["tau_agree", "tau_idem", "tau_ell", "tau_cluster"])
    out.update({"operator": spec.to_json(), "nodes": nodes,
                "max_disagreement": worst_dis,
                "max_idempotency_defect": worst_def, "passed": ok})
    dump_json(out, os.path.join(cfg.out, "calderon_symbol.json"))
    dump_csv(rows, ["point", "xi", "rank", "disagreement",
                    "idempotency_defect"],
             os.path.join(cfg.out, "calderon_symbol.csv"))
    if cfg.plots:
        from .plots import plot_symbol_field
        plot_symbol_field(nodes, os.path.join(cfg.out, "symbol_field.svg"))
    if not ok:
        raise ContractFailure(
            f"calderon-symbol: disagreement {worst_dis:.3g}, "
            f"idempotency defect {worst_def:.3g}")
    return out


def _read_pairs(path):
    from .polydisc import DiscPolynomial
    from .specfile import parse_complex_array
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SpecParseError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise SpecParseError(f"invalid JSON: {exc.msg}", exc.lineno,
                             path) from exc
    pairs = []
    try:
        for item in data:
            polys = []
            for key in ("f", "g"):
                terms = {}
                for a, b, c in item[key]:
                    terms[(int(a), int(b))] = parse_complex_array(c)
                polys.append(DiscPolynomial(terms))
            pairs.append((str(item["id"]), *polys))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecParseError(f"malformed test pair: {exc}", None,
                             path) from exc
    return pairs


def cmd_greens_check(cfg):
    from .greens import verify_greens_formula
    from .suites import greens_pairs
    spec = _load_spec(cfg)
    pairs = _read_pairs(cfg.pairs) if cfg.pairs else greens_pairs(cfg.seed)
    rows, results = [], []
    worst = 0.0
    for pid, f, g in pairs:
        chk = verify_greens_formula(spec, f, g)
        worst = max(worst, chk.residual)
        rows.append([pid, chk.residual, chk.relative, chk.level])
        results.append({"id": pid, "residual": chk.residual,
                        "relative": chk.relative, "level": chk.level,
                        "volume_terms": chk.lhs, "boundary_term":
                        chk.boundary})
    dump_csv(rows, ["pair_id", "residual", "relative", "quadrature_level"],
             os.path.join(cfg.out, "greens_check.csv"))
    ok = worst <= cfg.tols["tau_green"]
    out = _base(cfg, ["tau_green"])
    out.update({"operator": spec.to_json(), "pairs": results,
                "max_residual": worst, "passed": ok})
    dump_json(out, os.path.join(cfg.out, "greens_check.json"))
    if not ok:
        raise ContractFailure(f"greens-check: residual {worst:.3g}")
    return out


def _calibration(cfg):
    from .topoindex import CalibrationStore, calibrate_orientation
    path = cfg.calibration or os.path.join(cfg.out, "calibration.json")
    if os.path.exists(path):
        return CalibrationStore.load(path)
    return calibrate_orientation(path)


def cmd_index(cfg):
    from .bergman import ToeplitzProblem, numerical_index
    from .topoindex import topological_index
    spec = _load_spec(cfg)
    sym = _load_symbol(cfg)
    out = _base(cfg, ["tau_sv", "tau_ker", "tau_inv"])
    out.update({"operator": spec.to_json(), "symbol": sym.to_json(),
                "mode": cfg.mode, "schedule": list(cfg.schedule)})
    ok = True
    if cfg.mode in ("numerical", "both"):
        prob = ToeplitzProblem(spec, sym, tuple(cfg.schedule),
                               tau_sv=cfg.tols["tau_sv"],
                               tau_inv=cfg.tols["tau_inv"])
        est = numerical_index(prob, raise_on_unstable=False)
        out["numerical"] = est.to_json()
        ok &= est.stabilized
        rows = []
        for r in est.table:
            for i, (a, b) in enumerate(zip(r["sv_alpha"],
                                           r["sv_alpha_adjoint"])):
                rows.append([r["target"], i, a, b])
        dump_csv(rows, ["target", "k", "sv_alpha", "sv_alpha_adjoint"],
                 os.path.join(cfg.out, "index_singular_values.csv"))
        if cfg.plots:
            from .plots import plot_singular_values
            plot_singular_values(est.table, os.path.join(
                cfg.out, "singular_values.svg"))
    if cfg.mode in ("topological", "both"):
        rep = topological_index(spec, sym, _calibration(cfg))
        out["topological"] = rep.to_json()
    if cfg.mode == "both":
        eq = out["numerical"]["index"] == out["topological"]["index"]
        out["verdict"] = "equal" if eq else "unequal"
        ok &= eq
    dump_json(out, os.path.join(cfg.out, "index.json"))
    if not ok:
        raise ContractFailure("index: estimate unstable or verdict "
                              "unequal")
    return out


def cmd_transform_lab(cfg):
    from . import transformlab as tl
    rng = np.random.default_rng(cfg.seed)
    bj = []
    for _ in range(20):
        T = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
        T *= 5.0 / np.linalg.norm(T, 2)
        F = tl.bounded_transform(T)
        bj.append(float(np.linalg.norm(tl.baaj_julg_quadrature(T, 200) - F,
                                       2) / np.linalg.norm(F, 2)))
    T = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    _, polar = tl.polar_isometry_limit(T, [1e-1, 1e-2, 1e-3, 1e-4])
    ident = {}
    for _ in range(50):
        op = tl.FiniteOperator.random(rng, int(rng.integers(6, 16)))
        res = tl.verify_resolvent_identities(op, 1 + 5 * rng.random())
        for k, v in res.items():
            ident[k] = max(ident.get(k, 0.0), v)
    probes = {}
    for model in ("first", "second"):
        rows = tl.compactness_decay_probe(model)
        probes[model] = rows
        dump_csv([[r["size"], k, a, b] for r in rows for k, (a, b) in
                  enumerate(zip(r["sv_j_F_minus_Fstar"],
                                r["sv_F_a_commutator"]))],
                 ["size", "k", "sv_j_F_minus_Fstar", "sv_F_a_commutator"],
                 os.path.join(cfg.out, f"decay_{model}.csv"))
    checks = {
        "baaj_julg": max(bj) <= 1e-6,
        "polar_limit": all(r["error"] <= r["bound"] for r in polar),
        "resolvent_identities": all(
            ident[k] <= 1e-10 for k in ("commutator_inverse",
                                        "bounded_transform_commutator",
                                        "almost_selfadjoint")),
    }
    out = {"seed": cfg.seed,
           "tolerances": {"baaj_julg": 1e-6, "resolvent_identities": 1e-10},
           "baaj_julg_relative_errors": bj, "polar_limit": polar,
           "resolvent_identities": ident, "decay_probes": probes,
           "checks": checks, "passed": all(checks.values())}
    dump_json(out, os.path.join(cfg.out, "transform_lab.json"))
    if not out["passed"]:
        raise ContractFailure("transform-lab: " + ", ".join(
            k for k, v in checks.items() if not v))
    return out


def _cross_one(args):
    from .topoindex import cross_check
    spec, label, sym, store, schedule = args
    v = cross_check(spec, sym, store, schedule)
    return {"operator": spec.name, "symbol": label,
            "numerical": v.numerical, "topological": v.topological,
            "verdict": "equal" if v.equal else "unequal",
            "gap_ratio": v.estimate.to_json()["gap_ratio"]}


def cmd_cross_check_suite(cfg):
    from .suites import core_operators, cross_check_symbols
    from .topoindex import verify_calibration
    store = _calibration(cfg)
    verify_calibration(store)
    jobs = [(spec, label, sym, store, tuple(cfg.schedule))
            for spec in core_operators()
            for label, sym in cross_check_symbols(cfg.seed)]
    if cfg.workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(cfg.workers) as ex:
            results = list(ex.map(_cross_one, jobs))
    else:
        results = [_cross_one(j) for j in jobs]
    ok = all(r["verdict"] == "equal" for r in results)
    out = _base(cfg, ["tau_sv", "tau_inv"])
    out.update({"calibration": store.to_json(), "results": results,
                "schedule": list(cfg.schedule), "passed": ok})
    dump_json(out, os.path.join(cfg.out, "cross_check_suite.json"))
    if not ok:
        raise ContractFailure("cross-check-suite: unequal verdicts")
    return out


COMMANDS = {
    "ellipticity": cmd_ellipticity,
    "calderon-symbol": cmd_calderon_symbol,
    "greens-check": cmd_greens_check,
    "index": cmd_index,
    "transform-lab": cmd_transform_lab,
    "cross-check-suite": cmd_cross_check_suite,
}


# ---------------------------------------------------------------------------
# argument parsing

def _schedule(text):
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected N1,N2,N3") from exc
    return vals


def _tol(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected KEY=VAL")
    k, v = text.split("=", 1)
    if k not in DEFAULT_TOLS:
        raise argparse.ArgumentTypeError(f"unknown tolerance {k}")
    try:
        return k, float(v)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad value {v!r}") from exc


def build_parser():
    p = argparse.ArgumentParser(prog="boundary-index",
                                description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--spec")
        s.add_argument("--symbol")
        s.add_argument("--pairs", help="JSON list of Green test pairs")
        s.add_argument("--out", default=None)
        s.add_argument("--tol", action="append", type=_tol, default=[])
        s.add_argument("--schedule", type=_schedule, default=(40, 60, 80))
        s.add_argument("--grid", type=int, default=64)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--plots", action="store_true")
        s.add_argument("--calibration")
        s.add_argument("--workers", type=int, default=1)
        if name == "index":
            s.add_argument("--mode", default="both",
                           choices=["numerical", "topological", "both"])
    return p


def config_from_args(ns):
    tols = dict(DEFAULT_TOLS)
    tols.update(dict(ns.tol))
    out = ns.out or os.environ.get(OUT_ENV) or "."
    return RunConfig(ns.command, ns.spec, ns.symbol, ns.pairs, out, tols,
                     tuple(ns.schedule), ns.grid, ns.seed, ns.plots,
                     ns.calibration, getattr(ns, "mode", "both"),
                     ns.workers)


def run(cfg):
    """Execute ``cfg``; return the process exit status."""
    os.makedirs(cfg.out, exist_ok=True)
    meta = {"command": cfg.command, "version": __version__,
            "seed": cfg.seed,
            "started": datetime.datetime.now(datetime.timezone.utc)
            .isoformat()}
    status = 0
    try:
        COMMANDS[cfg.command](cfg)
    except SpecParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        status = 2
    except (ContractFailure, BoundaryIndexError) as exc:
        print(f"contract failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        status = 1
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        status = 3
    meta["exit_status"] = status
    meta["finished"] = datetime.datetime.now(datetime.timezone.utc) \
        .isoformat()
    with open(os.path.join(cfg.out, "metadata.json"), "w",
              encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return status


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ValueError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
