import io
import json

import numpy as np
import pytest

from mlweights.cli import UsageError, parse_weight_spec, run_cli
from mlweights.grid import DyadicGrid


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


class TestWeightSpecs:
    def test_power(self):
        w = parse_weight_spec("power:a=1/2", DyadicGrid(1, 3))
        assert w.power == 0.5

    def test_decimal_power_exact(self):
        assert parse_weight_spec("power:a=0.25", DyadicGrid(1, 3)).power == 0.25

    def test_grid_csv(self, tmp_path):
        g = DyadicGrid(1, 3)
        path = tmp_path / "w.csv"
        np.savetxt(path, np.linspace(1, 2, 8), delimiter=",")
        w = parse_weight_spec(f"grid:{path}", g)
        np.testing.assert_allclose(w.values, np.linspace(1, 2, 8))

    @pytest.mark.parametrize("spec", ["gen:cr:eta=0.5:seed=1", "gen:logu:osc=1.5:seed=2", "gen:expbmo:lambda=-0.4:seed=3"])
    def test_generators_deterministic(self, spec):
        g = DyadicGrid(1, 5)
        a, b = parse_weight_spec(spec, g), parse_weight_spec(spec, g)
        np.testing.assert_array_equal(a.values, b.values)

    @pytest.mark.parametrize("spec", ["power:b=1", "power:a=1e-3", "gen:cr:eta=0.5", "gen:bogus:x=1", "uniform", "grid:"])
    def test_malformed(self, spec):
        with pytest.raises((UsageError, ValueError)):
            parse_weight_spec(spec, DyadicGrid(1, 3))


class TestCommands:
    def test_constants_finite(self):
        code, out, _ = run("constants", "--weights", "power:a=0.5,power:a=0", "--p", "1,1", "--r", "1,1,1")
        assert code == 0
        d = json.loads(out)
        assert d["finite"] and d["constant"] == pytest.approx(16 / 9)

    def test_constants_infinite_exit_3(self):
        code, out, _ = run("constants", "--weights", "power:a=1,power:a=1", "--p", "1,1", "--r", "1,1,1", "--depth", "6")
        assert code == 3 and json.loads(out)["constant"] == "inf"

    def test_constants_wrong_count(self):
        code, _, err = run("constants", "--weights", "power:a=0", "--p", "1,1", "--r", "1,1,1")
        assert code == 2 and "2 specs" in err

    def test_exponents_path(self):
        code, out, _ = run("exponents", "path", "--p", "3,3", "--q", "2,4", "--r", "1,1,1")
        steps = json.loads(out)["steps"]
        assert code == 0 and len(steps) == 2
        assert steps[-1]["to"] == ["2", "4"]

    def test_exponents_derive_csv(self):
        code, out, _ = run("exponents", "derive", "--p", "3,3", "--r", "1,1,1", "--out", "csv")
        rows = dict(line.split(",", 1) for line in out.strip().splitlines()[1:])
        assert code == 0 and rows["rbar"] == "1/3" and rows["rho"] == "3/4"

    def test_exponents_interval_and_admissible(self):
        _, out, _ = run("exponents", "interval", "--q", "4,4", "--r", "2,2,2")
        assert json.loads(out)["lower"] == "-1" and json.loads(out)["upper"] == "0"
        _, out, _ = run("exponents", "admissible", "--r", "3/2,3/2,3/2")
        assert json.loads(out)["admissible"] is False

    def test_exponent_precondition_exit_2(self):
        code, _, err = run("exponents", "derive", "--p", "1,1", "--r", "2,2,2")
        assert code == 2 and err.startswith("error:")

    def test_verify_sparse_bound(self):
        code, out, _ = run("verify", "sparse-bound", "--r", "1,1,1", "--zeta", "0.5", "--depth", "5", "--samples", "3")
        d = json.loads(out)
        assert code == 0 and d["pass"] and d["summary"]["constant"] == "27/4"

    def test_verify_csv(self):
        code, out, _ = run("verify", "exponents", "--samples", "3", "--out", "csv")
        assert code == 0 and out.splitlines()[0] == "anchor,description,lhs,rhs,margin,pass"

    @pytest.mark.parametrize("argv", [
        ("verify", "lemma-main", "--bogus"),
        ("verify", "nothing"),
        ("verify", "lemma-main", "--depth", "0"),
        ("verify", "lemma-main", "--policy", "hex"),
        ("exponents", "derive", "--p", "3,3", "--r", "1,1,x"),
        ("frobnicate",),
        (),
    ])
    def test_usage_errors_exit_2(self, argv):
        assert run(*argv)[0] == 2

    def test_sparse_build_eval(self, tmp_path):
        fam = tmp_path / "S.json"
        assert run("sparse", "build", "--depth", "5", "--zeta", "1/3", "--seed", "1", "--output", str(fam))[0] == 0
        code, out, _ = run("sparse", "eval", "--depth", "5", "--family", str(fam), "--r", "2,2,2")
        d = json.loads(out)
        assert code == 0 and d["pass"] and d["zeta"] == "1/3"

    def test_sparse_cz_build(self):
        code, out, _ = run("sparse", "build", "--depth", "5", "--method", "cz", "--policy", "dyadic")
        assert code == 0 and json.loads(out)[0]["level"] == 0

    def test_report_compare(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            assert run("verify", "lemma-two", "--depth", "5", "--samples", "2", "--output", str(path))[0] == 0
        code, out, _ = run("report", str(a), str(b), "--compare")
        assert code == 0 and json.loads(out)["identical"]
        code, out, _ = run("report", str(a))
        assert code == 0 and json.loads(out)["suite"] == "lemma-two"

    def test_report_detects_failure(self, tmp_path):
        path = tmp_path / "r.json"
        run("verify", "exponents", "--samples", "2", "--output", str(path))
        d = json.loads(path.read_text())
        d["checks"][0].update(lhs="1", rhs="2", relation="=", margin="-1", **{"pass": False})
        d["pass"] = False
        path.write_text(json.dumps(d))
        assert run("report", str(path))[0] == 1
