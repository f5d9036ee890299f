import json

import numpy as np
import pytest

from cryophase.cli import main
from cryophase.configfile import load_config, parse_config_dict
from cryophase.grid import Field, Grid
from cryophase.io import read_snapshot, write_snapshot
from cryophase.scenarios import scenario_path


def base_doc(**overrides):
    doc = {
        "grid": {"dim": 1, "lengths": [1.0], "nodes": [17]},
        "model": {"p": 1.5},
        "time": {"dt": 0.005, "t_end": 0.05},
        "initial": {"theta0": "theta_c", "beta0": "0.5"},
        "source": {"r": "zero"},
        "output": {"dir": "out", "cadence": 0.05},
    }
    for key, val in overrides.items():
        doc.setdefault(key, {}).update(val) if isinstance(val, dict) \
            else doc.__setitem__(key, val)
    return doc


def write_doc(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


class TestConfigParsing:
    def test_valid_roundtrip(self, tmp_path):
        cfg = load_config(write_doc(tmp_path, base_doc()))
        assert cfg.grid.nodes == (17,)
        assert cfg.params.p == 1.5
        assert cfg.output_dir == "out"

    def test_unknown_key_rejected(self, tmp_path):
        doc = base_doc()
        doc["grid"]["spacing"] = 0.1
        with pytest.raises(Exception, match="unknown key"):
            load_config(write_doc(tmp_path, doc))

    def test_unknown_section_rejected(self, tmp_path):
        doc = base_doc()
        doc["extras"] = {}
        with pytest.raises(Exception, match="unknown key"):
            load_config(write_doc(tmp_path, doc))

    def test_json_error_carries_location(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"grid": [,]}')
        with pytest.raises(Exception, match=r"broken\.json:1:"):
            load_config(path)

    def test_p_range_message(self, tmp_path):
        doc = base_doc(model={"p": 2.5})
        with pytest.raises(Exception, match="1 < p < 2"):
            load_config(write_doc(tmp_path, doc))

    def test_p_exactly_two_rejected_in_configs(self, tmp_path):
        doc = base_doc(model={"p": 2.0})
        with pytest.raises(Exception, match="1 < p < 2"):
            load_config(write_doc(tmp_path, doc))

    def test_initial_from_csv(self, tmp_path):
        grid = Grid(1, (1.0,), (17,))
        x = grid.meshgrid()[0]
        theta = Field(grid, 2.0 + 0.1 * np.sin(2 * np.pi * x))
        beta = Field(grid, np.clip(0.5 + 0.3 * np.cos(np.pi * x), 0, 1))
        write_snapshot(tmp_path / "state.csv", theta, beta,
                       Field.constant(grid, 0.0))
        doc = base_doc(initial={"theta0": "state.csv", "beta0": "state.csv"})
        cfg = load_config(write_doc(tmp_path, doc))
        theta0, beta0 = cfg.initial_fields()
        assert np.array_equal(theta0.values, theta.values)
        assert np.array_equal(beta0.values, beta.values)

    def test_missing_csv(self, tmp_path):
        doc = base_doc(initial={"theta0": "absent.csv", "beta0": "0.5"})
        with pytest.raises(Exception, match="does not exist"):
            load_config(write_doc(tmp_path, doc))


class TestSnapshotRoundTrip:
    @pytest.mark.parametrize("dim", [1, 2])
    def test_bitwise(self, tmp_path, rng, dim):
        grid = Grid(1, (1.0,), (13,)) if dim == 1 \
            else Grid(2, (1.0, 0.5), (5, 7))
        theta = Field(grid, 2.0 + rng.normal(size=grid.shape))
        beta = Field(grid, rng.uniform(size=grid.shape))
        xi = Field(grid, rng.normal(size=grid.shape) * 1e-3)
        path = tmp_path / "snap.csv"
        write_snapshot(path, theta, beta, xi)
        t2, b2, x2 = read_snapshot(path, grid)
        assert np.array_equal(t2.values, theta.values)
        assert np.array_equal(b2.values, beta.values)
        assert np.array_equal(x2.values, xi.values)
        assert path.read_bytes().count(b"\r") == 0   # LF endings only

    def test_row_count(self, tmp_path):
        grid = Grid(1, (1.0,), (13,))
        f = Field.constant(grid, 1.0)
        path = tmp_path / "snap.csv"
        write_snapshot(path, f, f, f)
        lines = path.read_text().splitlines()
        assert len(lines) == grid.num_nodes + 1


class TestSimulateCommand:
    def test_steady_scenario_exit_zero(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["simulate", str(scenario_path("steady_state")),
                     "--output-dir", str(out), "--quiet"])
        assert code == 0
        diag = (out / "diagnostics.csv").read_text().splitlines()
        header = diag[0].split(",")
        col = header.index("conservation_residual")
        values = [abs(float(line.split(",")[col])) for line in diag[1:]]
        assert max(values) <= 1e-10
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["config"]["time"]["t_end"] == 1.0
        snapshots = sorted(out.glob("snapshot_*.csv"))
        assert len(snapshots) == 11

    def test_validation_exit_codes(self, tmp_path, capsys):
        bad_p = write_doc(tmp_path, base_doc(model={"p": 2.5}), "p.json")
        assert main(["simulate", str(bad_p)]) == 2
        assert "1 < p < 2" in capsys.readouterr().err

        doc = base_doc()
        doc["time"] = {"dt": 0.5, "t_end": 0.05}   # dt = 10 * t_end
        bad_dt = write_doc(tmp_path, doc, "dt.json")
        assert main(["simulate", str(bad_dt)]) == 2

    def test_nonconvergence_exit_code(self, tmp_path, capsys):
        doc = base_doc(
            initial={"theta0": "theta_c - 0.3 + 0.6*step(x - 0.5)",
                     "beta0": "1"},
            coupling={"mode": "iterated", "max_outer": 1, "outer_tol": 1e-16},
        )
        path = write_doc(tmp_path, doc, "stuck.json")
        assert main(["simulate", str(path), "--output-dir",
                     str(tmp_path / "o")]) == 3

    def test_seed_check_passes(self, tmp_path):
        path = write_doc(tmp_path, base_doc())
        code = main(["simulate", str(path), "--output-dir",
                     str(tmp_path / "o"), "--seed-check", "--quiet"])
        assert code == 0

    def test_env_var_output_dir(self, tmp_path, monkeypatch):
        target = tmp_path / "from_env"
        monkeypatch.setenv("CRYOPHASE_OUTPUT_DIR", str(target))
        path = write_doc(tmp_path, base_doc())
        assert main(["simulate", str(path), "--quiet"]) == 0
        assert (target / "diagnostics.csv").exists()

    def test_two_dimensional_config(self, tmp_path):
        doc = base_doc(
            grid={"dim": 2, "lengths": [1.0, 1.0], "nodes": [7, 9]},
            initial={"theta0": "theta_c + 0.2*cos(pi*x)*cos(pi*y)",
                     "beta0": "0.5"},
        )
        path = write_doc(tmp_path, doc)
        out = tmp_path / "o2d"
        assert main(["simulate", str(path), "--output-dir", str(out),
                     "--quiet"]) == 0
        snap = (out / "snapshot_0000.csv").read_text().splitlines()
        assert snap[0] == "x,y,theta,beta,xi"
        assert len(snap) == 7 * 9 + 1

    def test_manifest_reproduces_diagnostics(self, tmp_path):
        doc = base_doc(
            initial={"theta0": "theta_c - 0.3 + 0.6*step(x - 0.5)",
                     "beta0": "1"})
        path = write_doc(tmp_path, doc)
        out1 = tmp_path / "a"
        assert main(["simulate", str(path), "--output-dir", str(out1),
                     "--quiet"]) == 0
        manifest = json.loads((out1 / "run_manifest.json").read_text())
        cfg = parse_config_dict(manifest["config"], base_dir=tmp_path)
        from cryophase.io import write_diagnostics
        from cryophase.simulator import run

        rerun = run(cfg)
        write_diagnostics(tmp_path / "re.csv", rerun.ledger)
        assert (tmp_path / "re.csv").read_bytes() == \
            (out1 / "diagnostics.csv").read_bytes()


class TestStudyCommands:
    def test_sweep_zero_gaps_on_steady(self, tmp_path):
        path = write_doc(tmp_path, base_doc())
        out = tmp_path / "sweep"
        code = main(["sweep-eps", str(path), "--eps", "1e-1,1e-2",
                     "--output-dir", str(out), "--quiet"])
        assert code == 0
        rows = (out / "sweep_report.csv").read_text().splitlines()
        assert rows[0] == "epsilon,theta_gap,beta_gap"
        for line in rows[1:]:
            _, tgap, bgap = line.split(",")
            assert float(tgap) == 0.0 and float(bgap) == 0.0

    def test_sweep_malformed_eps(self, tmp_path, capsys):
        path = write_doc(tmp_path, base_doc())
        assert main(["sweep-eps", str(path), "--eps", "abc"]) == 2

    def test_sweep_rejects_zero_eps(self, tmp_path):
        path = write_doc(tmp_path, base_doc())
        assert main(["sweep-eps", str(path), "--eps", "0"]) == 2

    def test_mms_level_validation(self, capsys):
        assert main(["mms", "--levels", "1"]) == 2

    def test_mms_zero_preset(self, capsys):
        assert main(["mms", "--solution", "zero", "--levels", "3"]) == 0
        out = capsys.readouterr().out
        assert "exact" in out

    def test_convergence_command(self, tmp_path):
        doc = base_doc(
            grid={"dim": 1, "lengths": [1.0], "nodes": [9]},
            initial={"theta0": "theta_c - 0.3 + 0.6*step(x - 0.5)",
                     "beta0": "1"},
            time={"dt": 0.01, "t_end": 0.05},
            output={"dir": "out", "cadence": 0.05},
        )
        path = write_doc(tmp_path, doc)
        out = tmp_path / "conv"
        code = main(["convergence", str(path), "--levels", "3",
                     "--output-dir", str(out), "--quiet"])
        assert code == 0
        report = (out / "convergence_report.csv").read_text().splitlines()
        assert report[0].startswith("level,nodes,dt,theta_diff")
        assert len(report) == 3   # header + two coarse levels

    def test_convergence_level_validation(self, tmp_path, capsys):
        path = write_doc(tmp_path, base_doc())
        assert main(["convergence", str(path), "--levels", "2"]) == 2
