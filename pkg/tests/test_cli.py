import json

import numpy as np
import pytest

from gwdiffract.cli import ScenarioError, load_scenario, main, scenario_hash
from gwdiffract.grid import read_snapshot


def write(tmp_path, payload, name="scenario.json"):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return path


def run(tmp_path, command, payload, out="out"):
    cfg = write(tmp_path, payload)
    return main([command, "--config", str(cfg), "--out", str(tmp_path / out)])


def stderr_json(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


class TestScenarioValidation:
    def test_empty_file_missing_command(self, tmp_path, capsys):
        assert main(["run", "--config", str(write(tmp_path, ""))]) == 1
        assert stderr_json(capsys)["message"] == "missing command"

    @pytest.mark.parametrize("raw,match", [
        ({"command": "solve-hs", "colour": 1}, "colour"),
        ({"command": "solve-hs", "grid": {"n_theta": 2}}, "n_theta"),
        ({"command": "solve-hs", "grid": {"theta": [1, 0]}}, "interval"),
        ({"command": "solve-hs", "ricci": {}}, "not accepted"),
        ({"command": "solve-hs", "profile": {"name": "pulse"}}, "expected one of"),
        ({"command": "solve-hs", "profile": {"name": "hs-exact", "params": {"c1": 1}}}, "unknown parameters"),
        ({"command": "classify"}, "system"),
        ({"command": "converge"}, "study"),
        ({"command": "teleport"}, "unknown command"),
    ])
    def test_rejections(self, raw, match):
        with pytest.raises(ScenarioError, match=match):
            load_scenario(raw)

    def test_command_mismatch(self):
        with pytest.raises(ScenarioError, match="does not match"):
            load_scenario({"command": "solve-hs"}, "classify")

    def test_hash_is_canonical(self):
        a = load_scenario({"command": "solve-hs", "seed": 3})
        b = load_scenario({"seed": 3}, "solve-hs")
        assert scenario_hash(a) == scenario_hash(b)

    def test_invalid_json(self, tmp_path, capsys):
        assert main(["run", "--config", str(write(tmp_path, "{nope"))]) == 1
        assert stderr_json(capsys)["error"] == "config"


class TestSolvers:
    def test_zero_einstein_data(self, tmp_path):
        scen = {"grid": {"eta": [-1, 1], "n_theta": 9, "n_eta": 5, "n_v": 9}}
        assert run(tmp_path, "solve-einstein", scen) == 0
        out = tmp_path / "out"
        for name in "UVMY":
            assert not read_snapshot(out / "fields" / f"{name}.csv").values.any()
        report = json.loads((out / "report.json").read_text())
        assert report["result"]["constraint"]["max_abs"] == 0.0
        manifest = json.loads((out / "manifest.json").read_text())
        assert {"scenario_sha256", "grid", "tolerances", "seed", "files"} <= set(manifest)
        assert "fields/U.csv" in manifest["files"]

    def test_snapshots_are_deterministic(self, tmp_path):
        scen = {"command": "solve-einstein", "profile": {"name": "pulse", "params": {"amplitude": 0.05}},
                "grid": {"eta": [-2, 2], "n_theta": 33, "n_eta": 9, "n_v": 33}, "seed": 7}
        assert run(tmp_path, "run", scen, "a") == 0
        assert run(tmp_path, "run", scen, "b") == 0
        for name in "UVMY":
            a = (tmp_path / "a" / "fields" / f"{name}.csv").read_bytes()
            b = (tmp_path / "b" / "fields" / f"{name}.csv").read_bytes()
            assert a == b

    def test_hs_exact_profile(self, tmp_path):
        assert run(tmp_path, "solve-hs", {"grid": {"n_theta": 33, "n_v": 33}}) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["result"]["max_error"] < 1e-3

    def test_colliding_exact_profile(self, tmp_path):
        assert run(tmp_path, "solve-colliding", {"grid": {"n_theta": 17, "n_v": 17}}) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["result"]["max_error"] < 1e-4

    def test_breaking_wave_exits_two(self, tmp_path, capsys):
        scen = {"profile": {"name": "hs-periodic-sine", "params": {"amplitude": 0.5}},
                "grid": {"n_theta": 129, "n_v": 401}, "options": {"gradient_cap": 50}}
        assert run(tmp_path, "solve-hs", scen) == 2
        diag = stderr_json(capsys)
        assert diag["error"] == "BlowupError"
        assert diag["report"]["cell"]["theta"] == pytest.approx(0.5)
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["status"] == "solver-failure"


class TestVerification:
    def test_classify_verdict(self, tmp_path):
        scen = {"system": {"name": "scalar-wave", "params": {"c": [1.0, 1.0], "d": 2}},
                "samples": {"n_random_g0": 3, "g0_range": [0.1, 0.4], "n_random_directions": 3,
                            "expect": "genuinely nonlinear candidate"}}
        assert run(tmp_path, "classify", scen) == 0

    def test_classify_wrong_expectation_exits_three(self, tmp_path, capsys):
        scen = {"system": {"name": "constant-coefficient"}, "samples": {"expect": "genuinely nonlinear candidate"}}
        assert run(tmp_path, "classify", scen) == 3
        assert stderr_json(capsys)["error"] == "verification"

    def test_classify_bad_system_params(self, tmp_path):
        assert run(tmp_path, "classify", {"system": {"name": "scalar-wave", "params": {"k": 1}}}) == 1

    def test_verify_ricci(self, tmp_path):
        assert run(tmp_path, "verify-ricci", {"ricci": {"n_points": 4, "match_points": 4}}) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["result"]["failures"] == []

    def test_verify_action(self, tmp_path):
        scen = {"grid": {"eta": [-4, 4], "n_theta": 17, "n_eta": 17, "n_v": 41}, "action": {"n_probes": 2}}
        assert run(tmp_path, "verify-action", scen) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert set(report["result"]["residuals_by_direction"]) == {"U", "V", "M", "Y", "T"}

    def test_converge_writes_observed_order(self, tmp_path):
        scen = {"study": {"target": "hs-exact", "ladder": [17, 33, 65]}}
        assert run(tmp_path, "converge", scen) == 0
        conv = json.loads((tmp_path / "out" / "convergence.json").read_text())
        assert conv["observed_order"] == pytest.approx(2.0, abs=0.1)

    def test_converge_out_of_range_exits_three(self, tmp_path):
        scen = {"study": {"target": "hs-exact", "ladder": [17, 33, 65], "min_order": 3.0, "max_order": 4.0}}
        assert run(tmp_path, "converge", scen) == 3

    def test_threads_and_seed_flags(self, tmp_path):
        cfg = write(tmp_path, {"system": {"name": "decoupled-waves"}})
        assert main(["classify", "--config", str(cfg), "--out", str(tmp_path / "o"),
                     "--threads", "1", "--seed", "5"]) == 0
        manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert manifest["seed"] == 5 and manifest["threads"] == 1
        assert np.isfinite(json.loads((tmp_path / "o" / "report.json").read_text())["elapsed_seconds"])
