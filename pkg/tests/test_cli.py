import json

from mboflow.cli import main, read_csv


def _run(tmp_path, monkeypatch, argv):
    monkeypatch.setenv("MBOFLOW_OUTPUT_ROOT", str(tmp_path))
    return main(argv)


def _floats(rows, header, col):
    idx = header.index(col)
    return [float(r[idx]) for r in rows]


class TestRunCommand:
    def test_stripe_has_zero_dissipation(self, tmp_path, monkeypatch):
        code = _run(tmp_path, monkeypatch, [
            "run", "--shape", "stripe", "--d", "2", "--n", "64", "--h", "4e-3",
            "--T", "0.02", "--out", "stripe_run",
        ])
        assert code == 0
        header, rows = read_csv(tmp_path / "stripe_run" / "run_ledger.csv")
        assert header[:6] == ["step", "time", "energy", "metric_increment", "dissipation", "volume"]
        assert all(v == 0.0 for v in _floats(rows, header, "dissipation"))

    def test_disc_ledger_and_snapshots(self, tmp_path, monkeypatch):
        code = _run(tmp_path, monkeypatch, [
            "run", "--shape", "disc", "--R0", "0.3", "--n", "128", "--h", "2e-3",
            "--T", "0.01", "--out", "disc_run", "--snapshot-stride", "2",
        ])
        assert code == 0
        out = tmp_path / "disc_run"
        header, rows = read_csv(out / "run_ledger.csv")
        refs = _floats(rows, header, "radius_ref")
        ests = _floats(rows, header, "radius_est")
        assert refs[0] == 0.3
        assert abs(ests[-1] - refs[-1]) / refs[-1] < 0.05
        assert (out / "snapshot_00000.f64").exists()
        assert (out / "snapshot_00004.f64.json").exists()
        meta = json.loads((out / "run_meta.json").read_text())
        assert meta["pinning_ratio"] > 4.0

    def test_csv_round_trip_bit_exact(self, tmp_path, monkeypatch):
        _run(tmp_path, monkeypatch, [
            "run", "--shape", "disc", "--n", "64", "--h", "4e-3", "--T", "0.01",
            "--out", "rt",
        ])
        path = tmp_path / "rt" / "run_ledger.csv"
        header, rows = read_csv(path)
        for row in rows:
            for cell in row:
                value = float(cell)
                assert "%.17g" % value == cell or str(int(float(cell))) == cell

    def test_outputs_deterministic(self, tmp_path, monkeypatch):
        args = ["run", "--shape", "random", "--seed", "3", "--n", "64", "--h", "4e-3",
                "--T", "0.008"]
        _run(tmp_path, monkeypatch, args + ["--out", "a"])
        _run(tmp_path, monkeypatch, args + ["--out", "b"])
        a = (tmp_path / "a" / "run_ledger.csv").read_bytes()
        b = (tmp_path / "b" / "run_ledger.csv").read_bytes()
        assert a == b


class TestConfigHandling:
    def test_config_file_with_cli_override(self, tmp_path, monkeypatch):
        cfg = {"shape": "stripe", "n": 64, "h": 4e-3, "T": 0.008, "d": 2, "out": "cfg_run"}
        cfg_path = tmp_path / "conf.json"
        cfg_path.write_text(json.dumps(cfg))
        code = _run(tmp_path, monkeypatch, [
            "run", "--config", str(cfg_path), "--out", "cfg_override",
        ])
        assert code == 0
        assert (tmp_path / "cfg_override" / "run_ledger.csv").exists()

    def test_unknown_config_key(self, tmp_path, monkeypatch):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"bogus": 1}))
        assert _run(tmp_path, monkeypatch, ["run", "--config", str(cfg_path)]) == 1

    def test_validation_error_exit_code(self, tmp_path, monkeypatch):
        assert _run(tmp_path, monkeypatch, ["run", "--n", "100"]) == 1

    def test_config_hash_embedded(self, tmp_path, monkeypatch):
        _run(tmp_path, monkeypatch, [
            "run", "--shape", "stripe", "--n", "64", "--h", "4e-3", "--T", "0.008",
            "--out", "hashed",
        ])
        first = (tmp_path / "hashed" / "run_ledger.csv").read_text().splitlines()[0]
        assert first.startswith("# config_hash=")
        assert len(first.split("=")[1]) == 16


class TestDiagnosticsCommands:
    def test_identities(self, tmp_path, monkeypatch):
        code = _run(tmp_path, monkeypatch, ["identities", "--out", "ids"])
        assert code == 0
        payload = json.loads((tmp_path / "ids" / "identities.json").read_text())
        assert payload["max_abs_residual"] < 1e-6

    def test_interp_on_stripe(self, tmp_path, monkeypatch):
        code = _run(tmp_path, monkeypatch, [
            "interp", "--shape", "stripe", "--n", "64", "--h", "4e-3", "--T", "0.012",
            "--out", "interp_stripe", "--r-nodes", "8",
        ])
        assert code == 0
        header, rows = read_csv(tmp_path / "interp_stripe" / "interp_nodes.csv")
        assert header == ["step", "r", "e", "dist", "slope_upper", "slope_lower", "iters", "residual"]
        assert all(v == 0.0 for v in _floats(rows, header, "dist"))
        report = json.loads((tmp_path / "interp_stripe" / "interp_report.json").read_text())
        assert abs(report["descent_slack"]) < 1e-9

    def test_interp_on_disc(self, tmp_path, monkeypatch):
        code = _run(tmp_path, monkeypatch, [
            "interp", "--shape", "disc", "--R0", "0.3", "--n", "128", "--h", "1e-3",
            "--T", "0.01", "--out", "interp_disc", "--r-nodes", "8",
        ])
        assert code == 0

    def test_slope_on_disc(self, tmp_path, monkeypatch):
        code = _run(tmp_path, monkeypatch, [
            "slope", "--shape", "disc", "--R0", "0.3", "--n", "128", "--h", "1e-3",
            "--T", "0.01", "--out", "slope_disc", "--r-nodes", "8", "--K", "2",
        ])
        assert code == 0
        header, rows = read_csv(tmp_path / "slope_disc" / "slope_nodes.csv")
        uppers = _floats(rows, header, "slope_upper")
        lowers = _floats(rows, header, "slope_lower")
        assert all(lo <= up + 1e-8 for lo, up in zip(lowers, uppers))

    def test_measures_on_disc(self, tmp_path, monkeypatch):
        code = _run(tmp_path, monkeypatch, [
            "measures", "--shape", "disc", "--R0", "0.3", "--n", "64", "--h", "4e-3",
            "--T", "0.04", "--out", "meas",
        ])
        assert code == 0
        header, rows = read_csv(tmp_path / "meas" / "measures.csv")
        quantities = [r[header.index("quantity")] for r in rows]
        assert "pair_sum_vs_2E" in quantities
        assert "perimeter" in quantities

    def test_converge_monotone(self, tmp_path, monkeypatch):
        code = _run(tmp_path, monkeypatch, [
            "converge", "--shape", "disc", "--R0", "0.3", "--T", "0.04",
            "--h-list", "4e-3,2e-3", "--n-list", "256,512", "--out", "conv",
        ])
        assert code == 0
        header, rows = read_csv(tmp_path / "conv" / "converge.csv")
        assert header == ["h", "n", "final_radius", "ref_radius", "rel_err", "pinning_ratio"]

    def test_converge_flags_nonmonotone(self, tmp_path, monkeypatch):
        # fixed n = 512 at h = 1e-3 sits at the pinning edge and breaks the trend
        code = _run(tmp_path, monkeypatch, [
            "converge", "--shape", "disc", "--R0", "0.3", "--T", "0.04",
            "--h-list", "4e-3,2e-3,1e-3", "--n-list", "512,512,512", "--out", "convbad",
        ])
        assert code == 2
        failure = json.loads((tmp_path / "convbad" / "failure.json").read_text())
        assert failure["check"] == "converge_monotonicity"
