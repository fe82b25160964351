import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from singred import cli
from singred.errors import InputError
from singred.lie import so3_u1
from singred.serialize import algebra_from_document, algebra_to_document, dumps, format_float, loads


def run_main(args, tmp_path):
    return cli.main(args + ["--out", str(tmp_path), "--quiet"])


def test_catalog_command(tmp_path):
    assert run_main(["catalog"], tmp_path) == 0
    rec = json.loads((tmp_path / "catalog.json").read_text())
    assert rec["passed"] and rec["command"] == "catalog"
    assert (tmp_path / "catalog.meta.json").exists()


def test_strata_from_entry(tmp_path):
    assert run_main(["strata", "--entry", "so3_z2"], tmp_path) == 0
    rec = json.loads((tmp_path / "strata.json").read_text())
    orders = sorted(c["component_order"] for c in rec["result"]["classes"])
    assert orders == [1, 2]


def test_failed_check_exits_2(tmp_path):
    assert run_main(["jacobi", "--entry", "negative_control"], tmp_path) == 2


def test_bad_input_exits_1(tmp_path, capsys):
    assert run_main(["no-such-command"], tmp_path) == 1
    assert run_main(["strata", "--entry", "missing"], tmp_path) == 1
    assert run_main(["strata"], tmp_path) == 1
    assert "error" in capsys.readouterr().err


def test_bad_config_exits_1(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2]")
    assert run_main(["strata", "--config", str(cfg)], tmp_path) == 1


def test_tolerance_override(tmp_path):
    assert run_main(["algebra-check", "--tol", "rep=1e-30"], tmp_path) in (0, 2)
    rec = json.loads((tmp_path / "algebra-check.json").read_text())
    assert rec["tolerances"]["rep"] == 1e-30
    assert run_main(["algebra-check", "--tol", "rep"], tmp_path) == 1


def test_holonomy_unit_square(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"chart": "abelian_plane",
                               "loops": [{"kind": "square", "corner": [0, 0], "side": 1}]}))
    status = run_main(["holonomy", "--config", str(cfg)], tmp_path)
    rec = json.loads((tmp_path / "holonomy.json").read_text())
    assert status == 0
    assert rec["result"]["loops"][0]["logarithm"][0] == pytest.approx(-1.0, abs=1e-10)


def test_malformed_loop_exits_1(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"chart": "abelian_plane", "loops": [{"kind": "circle"}]}))
    assert run_main(["holonomy", "--config", str(cfg)], tmp_path) == 1


def test_custom_algebra_document(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"algebras": [algebra_to_document(so3_u1())]}))
    assert run_main(["algebra-check", "--config", str(cfg)], tmp_path) == 0


@pytest.mark.parametrize("command,entry", [("strata", "su2_u1"), ("lp-flow", "so3_so2"),
                                           ("ambrose-singer", "free_hopf"),
                                           ("gauge-bracket", "free_hopf")])
def test_records_are_byte_identical(command, entry, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main([command, "--entry", entry, "--seed", "7", "--out", str(out), "--quiet"]) == 0
    name = f"{command}.json"
    assert (a / name).read_bytes() == (b / name).read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "singred", "catalog", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "catalog: ok" in proc.stdout


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(x):
    assert float(format_float(x)) == x


def test_non_finite_floats():
    assert loads(dumps([math.nan]))[0] == "nan"
    assert loads(dumps({"v": -math.inf}))["v"] == "-inf"


def test_dumps_sorts_keys():
    assert dumps({"b": 1, "a": 2}) == dumps({"a": 2, "b": 1})


def test_numpy_values_serialise():
    doc = loads(dumps({"m": np.eye(2), "k": np.int64(3), "f": np.float64(0.1), "t": np.bool_(True)}))
    assert doc == {"f": 0.1, "k": 3, "m": [[1.0, 0.0], [0.0, 1.0]], "t": True}


def test_algebra_document_round_trip():
    a = algebra_from_document(loads(dumps(algebra_to_document(so3_u1()))))
    assert np.array_equal(a.structure_constants, so3_u1().structure_constants)


def test_algebra_document_validation():
    doc = algebra_to_document(so3_u1())
    doc["c"] = doc["c"][:2]
    with pytest.raises(InputError):
        algebra_from_document(doc)
