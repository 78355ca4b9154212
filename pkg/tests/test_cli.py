import copy
import csv
import json
import math

import numpy as np
import pytest

import lyocert.cli as cli


def run(argv, capsys=None):
    code = cli.main(argv)
    return code


def run_json(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = cli.main(argv + ["--out", str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


@pytest.fixture
def reference_cfg():
    return cli.load_config(None)


@pytest.fixture
def cfg_path(tmp_path, reference_cfg):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(reference_cfg))
    return str(path)


@pytest.fixture
def chain_cfg_path(tmp_path, reference_cfg):
    cfg = copy.deepcopy(reference_cfg)
    cfg.pop("weights", None)
    cfg["transition"] = [[0.7, 0.3], [0.4, 0.6]]
    path = tmp_path / "chain.json"
    path.write_text(json.dumps(cfg))
    return str(path)


class TestConfigLoading:
    def test_default_is_packaged_reference(self, reference_cfg):
        assert reference_cfg["dimension"] == 2
        assert reference_cfg["theta"] == 0.5
        assert len(reference_cfg["matrices"]) == 2

    def test_missing_file_is_config_error(self):
        with pytest.raises(cli.ConfigError):
            cli.load_config("/nonexistent/config.json")

    def test_schema_violation_reports_json_path(self, tmp_path,
                                                reference_cfg):
        bad = copy.deepcopy(reference_cfg)
        bad["theta"] = "half"
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        with pytest.raises(cli.ConfigError) as exc:
            cli.load_config(str(path))
        assert "theta" in str(exc.value)

    def test_unknown_key_rejected(self, tmp_path, reference_cfg):
        bad = copy.deepcopy(reference_cfg)
        bad["surprise"] = 1
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        with pytest.raises(cli.ConfigError):
            cli.load_config(str(path))

    def test_matrix_shape_validated(self, tmp_path, reference_cfg):
        bad = copy.deepcopy(reference_cfg)
        bad["matrices"] = [[[1.0, 0.0]], [[1.0, 0.0]]]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        with pytest.raises(cli.ConfigError):
            cli.load_config(str(path))


class TestExitCodes:
    def test_example_ok(self, tmp_path):
        code, report = run_json(["example"], tmp_path)
        assert code == cli.EXIT_OK
        assert report is not None

    def test_missing_config_exits_1(self, capsys):
        assert run(["certify", "--config", "/no/such.json"]) == cli.EXIT_CONFIG

    def test_bad_theta_override_exits_1(self, cfg_path):
        assert run(["certify", "--config", cfg_path,
                    "--theta", "1.5"]) == cli.EXIT_CONFIG

    def test_bad_seed_override_exits_1(self, cfg_path):
        assert run(["estimate", "--config", cfg_path,
                    "--seed", "-1"]) == cli.EXIT_CONFIG

    def test_bad_grid_override_exits_1(self, cfg_path):
        assert run(["extend", "--config", cfg_path,
                    "--grid-m", "4"]) == cli.EXIT_CONFIG


class TestCertifyCommand:
    def test_reference_values(self, tmp_path):
        code, report = run_json(["certify"], tmp_path)
        assert code == cli.EXIT_OK
        ladder = report["ladder"]
        assert ladder["n0"]["value"] == 11
        assert ladder["NTheta"]["value"] == 1056
        r_star = report["rStar"]["value"]
        assert r_star == pytest.approx(1.6458e-5, rel=1e-3)

    def test_every_numeric_leaf_has_formula_id(self, tmp_path):
        _, report = run_json(["certify"], tmp_path)

        def walk(node, path=""):
            if isinstance(node, dict):
                if "value" in node:
                    assert "formulaId" in node, f"leaf without formulaId: {path}"
                    if (isinstance(node["value"], float)
                            and node["value"] > 0.0
                            and math.isfinite(node["value"])):
                        assert "logValue" in node, f"no logValue at {path}"
                else:
                    for k, v in node.items():
                        walk(v, f"{path}.{k}")
            elif isinstance(node, list):
                for i, v in enumerate(node):
                    walk(v, f"{path}[{i}]")

        walk(report)

    def test_reports_byte_identical(self, tmp_path):
        _, a = run_json(["certify", "--seed", "7"], tmp_path, "a.json")
        _, b = run_json(["certify", "--seed", "7"], tmp_path, "b.json")
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_round_trip_serialization(self, tmp_path):
        _, report = run_json(["certify"], tmp_path)
        again = json.loads(json.dumps(report, sort_keys=True))
        assert again == report


class TestOtherCommands:
    def test_estimate(self, tmp_path):
        code, report = run_json(["estimate"], tmp_path)
        assert code == cli.EXIT_OK
        assert "spectrum" in report and "topExponent" in report

    def test_extend_at_complex_weights(self, tmp_path):
        z = json.dumps([[0.5001, 1e-5], [0.4999, -1e-5]])
        code, report = run_json(["extend", "--z", z], tmp_path)
        assert code == cli.EXIT_OK

    def test_extend_rejects_non_summing_z(self, tmp_path):
        z = json.dumps([[0.7, 0.0], [0.5, 0.0]])
        code, _ = run_json(["extend", "--z", z], tmp_path)
        assert code == cli.EXIT_CONFIG

    def test_taylor(self, tmp_path):
        code, report = run_json(["taylor", "--grid-m", "100"], tmp_path)
        assert code == cli.EXIT_OK

    def test_chain(self, tmp_path, chain_cfg_path):
        code, report = run_json(["chain", "--config", chain_cfg_path],
                                tmp_path)
        assert code == cli.EXIT_OK

    def test_grassmann(self, tmp_path):
        code, report = run_json(["grassmann"], tmp_path)
        assert code == cli.EXIT_OK

    def test_scan_boundary_csv(self, tmp_path):
        out_csv = tmp_path / "scan.csv"
        code = cli.main(["scan-boundary", "--grid-m", "150",
                         "--out", str(tmp_path / "scan.json"),
                         "--csv", str(out_csv)])
        assert code == cli.EXIT_OK
        rows = list(csv.reader(out_csv.read_text().splitlines()))
        assert rows[0] == ["t", "p_min", "gap", "r_star", "lower_bound"]
        assert len(rows) > 1

    def test_verify_fast(self, tmp_path):
        code, report = run_json(["verify", "--fast"], tmp_path)
        assert code == cli.EXIT_OK
        assert report["passed"] is True


class TestSerialization:
    def test_inf_rendered_as_string(self):
        text = cli.serialize_report({"x": math.inf})
        parsed = json.loads(text)
        assert parsed["x"] == "inf"

    def test_numpy_scalars_handled(self):
        text = cli.serialize_report({"a": np.float64(1.5),
                                     "b": np.int64(3),
                                     "c": np.array([1.0, 2.0])})
        parsed = json.loads(text)
        assert parsed["a"] == 1.5 and parsed["b"] == 3
        assert parsed["c"] == [1.0, 2.0]

    def test_complex_rendered_as_re_im(self):
        parsed = json.loads(cli.serialize_report({"z": 1.0 + 2.0j}))
        assert parsed["z"] == {"re": 1.0, "im": 2.0}

    def test_keys_sorted(self):
        text = cli.serialize_report({"b": 1, "a": 2})
        assert text.index('"a"') < text.index('"b"')
