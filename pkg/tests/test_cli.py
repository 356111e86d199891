import json

import numpy as np
import pytest

from boundary_index import cli
from boundary_index.errors import SpecParseError
from boundary_index.specfile import parse_operator, parse_symbol
from boundary_index.symbolcore import cauchy_riemann


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_operator_file_explicit_matches_builtin():
    spec = parse_operator("# CR\norder = 1\ncoefficient[1,0] = [0, 1]\n"
                          "coefficient[0,1] = -1\n")
    assert spec.fingerprint() == cauchy_riemann().fingerprint()


def test_operator_file_interval_and_matrices():
    spec = parse_operator('domain = "interval"\norder = 1\n'
                          'collar[0] = [[1, [0, 1]], [0, 1]]\n'
                          'collar[1] = [[0, 0], [0, 0]]\n')
    assert spec.rank_e == 2 and spec.collar[0][0, 1] == 1j


@pytest.mark.parametrize("text,line", [
    ("order = 1\ncoefficient[1,0] = [0,1\n", 2),
    ("order = 1\nfoo = 3\n", 2),
    ("builtin = \"nope\"\n", 1),
    ("order = 0\n", 1),
    ("order = 1\n\ncoefficient[1,0] = 1\ncoefficient[1,0] = 2\n", 4),
    ("just text\n", 1),
])
def test_operator_file_errors_carry_line_numbers(text, line):
    with pytest.raises(SpecParseError) as info:
        parse_operator(text)
    assert info.value.line == line


def test_symbol_file():
    sym = parse_symbol("term[2,0] = 1\nterm[0,0] = [0.5, 0]\n")
    assert sym.degree == 2 and sym.terms[(0, 0)][0, 0] == 0.5
    sym = parse_symbol("size = 2\nzpower = -1\n")
    assert sym.size == 2 and (0, 1) in sym.terms
    with pytest.raises(SpecParseError):
        parse_symbol("zpower = 1\nterm[0,0] = 1\n")


def test_index_both_on_cr_z2(tmp_path):
    spec = _write(tmp_path, "cr.spec", 'builtin = "cauchy_riemann"\n')
    sym = _write(tmp_path, "z2.sym", "zpower = 2\n")
    out = tmp_path / "out"
    rc = cli.main(["index", "--mode", "both", "--spec", spec, "--symbol",
                   sym, "--out", str(out)])
    assert rc == 0
    data = json.loads((out / "index.json").read_text())
    assert data["numerical"]["index"] == -2
    assert data["topological"]["index"] == -2
    assert data["verdict"] == "equal"
    assert data["seed"] == 0 and "tau_sv" in data["tolerances"]
    assert (out / "index_singular_values.csv").exists()


def test_ellipticity_failure_names_real_root(tmp_path):
    spec = _write(tmp_path, "w.spec", 'builtin = "wave"\n')
    rc = cli.main(["ellipticity", "--spec", spec, "--out", str(tmp_path)])
    assert rc == 1
    rep = json.loads((tmp_path / "ellipticity.json").read_text())
    assert any("real root" in f["reason"] for f in rep["report"]["failures"])


def test_calderon_symbol_laplacian(tmp_path):
    spec = _write(tmp_path, "l.spec", 'builtin = "laplacian"\n')
    rc = cli.main(["calderon-symbol", "--spec", spec, "--out",
                   str(tmp_path)])
    assert rc == 0
    rep = json.loads((tmp_path / "calderon_symbol.json").read_text())
    assert len(rep["nodes"]) == 128
    assert rep["max_disagreement"] <= 1e-8
    first = np.array(rep["nodes"][0]["riesz"])
    np.testing.assert_allclose(first[0, 1], [0, -0.5], atol=1e-12)


def test_parse_error_exit_code(tmp_path):
    spec = _write(tmp_path, "bad.spec", "order = 1\ncoefficient[1] = 1\n")
    rc = cli.main(["ellipticity", "--spec", spec, "--out", str(tmp_path)])
    assert rc == 2


def test_missing_input_is_parse_error(tmp_path):
    assert cli.main(["index", "--out", str(tmp_path)]) == 2


def test_greens_check_with_pair_file(tmp_path):
    spec = _write(tmp_path, "l.spec", 'builtin = "laplacian"\n')
    pairs = _write(tmp_path, "p.json", json.dumps(
        [{"id": "p1", "f": [[1, 1, 1]], "g": [[0, 0, [1, 0]]]}]))
    rc = cli.main(["greens-check", "--spec", spec, "--pairs", pairs,
                   "--out", str(tmp_path)])
    assert rc == 0
    csv = (tmp_path / "greens_check.csv").read_text().splitlines()
    assert csv[0] == "pair_id,residual,relative,quadrature_level"
    assert csv[1].startswith("p1,")


def test_out_dir_from_environment(tmp_path, monkeypatch):
    spec = _write(tmp_path, "l.spec", 'builtin = "laplacian"\n')
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["ellipticity", "--spec", spec]) == 0
    assert (tmp_path / "envout" / "ellipticity.json").exists()


def test_tolerance_override_is_recorded(tmp_path):
    spec = _write(tmp_path, "l.spec", 'builtin = "laplacian"\n')
    cli.main(["greens-check", "--spec", spec, "--out", str(tmp_path),
              "--tol", "tau_green=1e-9"])
    rep = json.loads((tmp_path / "greens_check.json").read_text())
    assert rep["tolerances"]["tau_green"] == 1e-9


def test_bad_tolerance_rejected():
    with pytest.raises(SystemExit):
        cli.main(["greens-check", "--tol", "tau_green"])
    assert cli.main(["greens-check", "--tol", "tau_green=-1"]) == 2


def test_plots_are_deterministic(tmp_path):
    pytest.importorskip("matplotlib")
    spec = _write(tmp_path, "l.spec", 'builtin = "laplacian"\n')
    for d in ("a", "b"):
        cli.main(["calderon-symbol", "--spec", spec, "--out",
                  str(tmp_path / d), "--plots", "--grid", "8"])
    assert (tmp_path / "a" / "symbol_field.svg").read_bytes() == \
        (tmp_path / "b" / "symbol_field.svg").read_bytes()
