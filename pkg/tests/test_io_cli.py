import json
import math

import numpy as np
import pytest

from pnf import cli, fixtures
from pnf.algebra import PolyMap, max_rel_diff
from pnf.io import (dumps, fmt_float, load_results, load_system, polymap_record, system_from_json,
                    system_to_json, write_json)
from pnf.spectrum import eigen_decompose
from pnf.system import SystemSpec

TWO_PI = 2 * math.pi


def resonant_system() -> SystemSpec:
    """Neutral frequency 1 driving frequency 2: the square of the first hits the second."""
    L0 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    L1 = np.array([[0.0, 2.0], [-2.0, 0.0]])
    V = PolyMap(4, 4, TWO_PI, {(2, 0, 0, 0): np.array([[0.0, 0.0, 1.0, 0.0]])}, True)
    return SystemSpec(TWO_PI, L0, L1, V, c=1.0, rho=1.0, eig0=eigen_decompose(L0), name="resonant")


class TestSerialization:
    @pytest.mark.parametrize("name", sorted(fixtures.BUILDERS))
    def test_system_round_trip(self, name):
        s = fixtures.BUILDERS[name]()
        back = system_from_json(json.loads(dumps(system_to_json(s))))
        assert max_rel_diff(back.V, s.V) == 0
        assert np.array_equal(back.L0, s.L0) and np.array_equal(back.L1, s.L1)
        assert (back.c, back.rho, back.ell, back.period) == (s.c, s.rho, s.ell, s.period)

    def test_bundled_files_match_builders(self):
        for name, build in fixtures.BUILDERS.items():
            assert max_rel_diff(fixtures.bundled(name).V, build().V) == 0

    def test_float_format_round_trips(self):
        for x in (0.1, 1 / 3, math.pi, 1e-300, 2.0 ** 0.5):
            assert float(fmt_float(x)) == x

    def test_missing_field(self):
        data = system_to_json(fixtures.uncouple_basic())
        del data["rho"]
        with pytest.raises(ValueError):
            system_from_json(data)

    def test_missing_eigen_decomposition(self):
        data = system_to_json(fixtures.uncouple_basic())
        del data["L0"]["eigvecs"]
        with pytest.raises(ValueError):
            system_from_json(data)

    def test_wrong_shape(self):
        data = system_to_json(fixtures.uncouple_basic())
        data["m1"] = 2
        with pytest.raises(ValueError):
            system_from_json(data)

    def test_empty_nonlinearity(self):
        data = system_to_json(fixtures.uncouple_basic())
        data["V"] = []
        s = system_from_json(data)
        assert s.V.is_zero()

    def test_results_bit_exact(self, tmp_path):
        assert cli.run(["uncouple", "uncouple_basic", "--p", "4", "--out", str(tmp_path)]) == 0
        text = (tmp_path / "results.json").read_text()
        maps = load_results(tmp_path / "results.json")
        again = tmp_path / "again.json"
        write_json(again, {"maps": {k: polymap_record(v) for k, v in maps.items()}})
        assert again.read_text() == text


class TestCli:
    @pytest.mark.parametrize("cmd", ["check", "constants", "uncouple", "sweep", "verify"])
    def test_graph_commands(self, cmd, tmp_path):
        assert cli.run([cmd, "uncouple_basic", "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["command"] == cmd

    @pytest.mark.parametrize("cmd", ["check", "constants", "normalize", "verify"])
    def test_normal_form_commands(self, cmd, tmp_path):
        assert cli.run([cmd, "hopf", "--p", "3", "--out", str(tmp_path)]) == 0

    def test_uncouple_reports_phi2(self, tmp_path):
        cli.run(["uncouple", "uncouple_basic", "--delta", "0.05", "--out", str(tmp_path)])
        report = json.loads((tmp_path / "report.json").read_text())
        modes = {m["k"]: complex(float(m["re"]), float(m["im"]))
                 for m in report["phi_2"][0]["modes"]}
        assert modes[1] == pytest.approx(0.25 - 0.25j) and modes[-1] == pytest.approx(0.25 + 0.25j)

    def test_sweep_csv(self, tmp_path):
        assert cli.run(["sweep", "uncouple_basic", "--delta-list", "0.1,0.05",
                        "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0] == ",".join(cli.SWEEP_COLUMNS) and len(lines) == 3

    def test_file_input(self, tmp_path):
        path = tmp_path / "sys.json"
        write_json(path, system_to_json(fixtures.hopf()))
        assert cli.run(["check", str(path), "--out", str(tmp_path)]) == 0
        assert load_system(path).name == "hopf"

    def test_bad_input(self, tmp_path, capsys):
        assert cli.run(["check", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 1
        bad = tmp_path / "bad.json"
        bad.write_text("{\"T\": 1}")
        assert cli.run(["check", str(bad), "--out", str(tmp_path)]) == 1

    def test_bad_flag(self):
        with pytest.raises(SystemExit) as e:
            cli.run(["check", "hopf", "--delta", "-1"])
        assert e.value.code == 1

    def test_hypothesis_violation(self, tmp_path):
        path = tmp_path / "res.json"
        write_json(path, system_to_json(resonant_system()))
        assert cli.run(["uncouple", str(path), "--out", str(tmp_path)]) == 2
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["status"] == "hypothesis violation" and report["offending"]

    def test_tolerance_failure(self, tmp_path):
        # declaring every divisor resonant pushes non-resonant terms into N
        assert cli.run(["verify", "hopf", "--tol-res", "10", "--out", str(tmp_path)]) == 3
        report = json.loads((tmp_path / "report.json").read_text())
        assert "criteria" in report["failures"]

    def test_threads_env(self, tmp_path, monkeypatch):
        outs = []
        for n in ("1", "3"):
            monkeypatch.setenv("NF_THREADS", n)
            d = tmp_path / n
            assert cli.run(["sweep", "hopf", "--delta-list", "0.2,0.1,0.05", "--out", str(d)]) == 0
            outs.append((d / "sweep.csv").read_bytes())
        assert outs[0] == outs[1]
