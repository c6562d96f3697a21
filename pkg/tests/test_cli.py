import json

import pytest

from thermoprobe import cli


def run(tmp_path, argv, name="out.csv"):
    """Invoke the CLI writing to a temp file; return (exit code, text)."""
    out = tmp_path / name
    code = cli.main(argv + ["--out", str(out)])
    return code, out.read_text() if out.exists() else ""


def parse_csv(text):
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    return header, [dict(zip(header, line.split(","))) for line in lines[1:]]


class TestEquilibriumScan:
    def test_default_has_six_series(self, tmp_path):
        code, text = run(tmp_path, ["equilibrium-scan", "--points", "40"])
        assert code == 0
        header, rows = parse_csv(text)
        assert header == ["N", "T", "qfi", "qfi_normalized"]
        series = {r["N"] for r in rows}
        assert series == {"2", "4", "6", "8", "10", "ho"}
        assert len(rows) == 6 * 40

    def test_single_probe_two_series(self, tmp_path):
        code, text = run(tmp_path, ["equilibrium-scan", "--n", "2", "--points", "10"])
        assert code == 0
        _, rows = parse_csv(text)
        assert {r["N"] for r in rows} == {"2", "ho"}

    def test_no_harmonic(self, tmp_path):
        code, text = run(tmp_path, ["equilibrium-scan", "--n", "2,4", "--points", "10", "--no-harmonic"])
        assert code == 0
        _, rows = parse_csv(text)
        assert {r["N"] for r in rows} == {"2", "4"}

    def test_empty_n_list_exits_two(self, tmp_path):
        code, _ = run(tmp_path, ["equilibrium-scan", "--n", ""])
        assert code == 2

    def test_bad_grid_exits_two(self, tmp_path):
        code, _ = run(tmp_path, ["equilibrium-scan", "--x-min", "5", "--x-max", "1"])
        assert code == 2

    def test_csv_round_trips_full_precision(self, tmp_path):
        code, text = run(tmp_path, ["equilibrium-scan", "--n", "3", "--points", "17"])
        assert code == 0
        code2, jtext = run(tmp_path, ["equilibrium-scan", "--n", "3", "--points", "17",
                                      "--format", "json"], name="out.json")
        assert code2 == 0
        _, csv_rows = parse_csv(text)
        json_rows = json.loads(jtext)
        for crow, jrow in zip(csv_rows, json_rows):
            for key in ("T", "qfi", "qfi_normalized"):
                assert float(crow[key]) == jrow[key]  # bit-exact after re-parse

    def test_deterministic_across_thread_counts(self, tmp_path, monkeypatch):
        monkeypatch.setenv("THERMOPROBE_THREADS", "1")
        _, a = run(tmp_path, ["equilibrium-scan", "--points", "25"], name="a.csv")
        monkeypatch.setenv("THERMOPROBE_THREADS", "4")
        _, b = run(tmp_path, ["equilibrium-scan", "--points", "25"], name="b.csv")
        assert a == b


class TestOptimalGap:
    def test_default_nine_rows_ascending(self, tmp_path):
        code, text = run(tmp_path, ["optimal-gap"])
        assert code == 0
        _, rows = parse_csv(text)
        assert len(rows) == 9
        xs = [float(r["x_star"]) for r in rows]
        assert all(a < b for a, b in zip(xs, xs[1:]))
        assert xs[0] == pytest.approx(2.3994, abs=5e-4)

    def test_degeneracy_sweep(self, tmp_path):
        code, text = run(tmp_path, ["optimal-gap", "--n", "4", "--n0", "1,2,3"])
        assert code == 0
        _, rows = parse_csv(text)
        peaks = {int(r["n0"]): float(r["qfi_peak"]) for r in rows}
        assert peaks[1] > peaks[2] > peaks[3]
        assert rows[0]["variance_excess_vs_lower_n0"] == ""
        assert float(rows[1]["variance_excess_vs_lower_n0"]) > 0.0

    def test_invalid_degeneracy_exits_two(self, tmp_path):
        code, _ = run(tmp_path, ["optimal-gap", "--n", "2", "--n0", "2"])
        assert code == 2

    def test_range_syntax(self, tmp_path):
        code, text = run(tmp_path, ["optimal-gap", "--n", "2..4"])
        assert code == 0
        _, rows = parse_csv(text)
        assert [r["N"] for r in rows] == ["2", "3", "4"]


class TestHessianCheck:
    def test_default_range(self, tmp_path):
        code, text = run(tmp_path, ["hessian-check"])
        assert code == 0
        _, rows = parse_csv(text)
        assert [int(r["N"]) for r in rows] == list(range(2, 21))
        assert all(r["certifies_maximum"] == "true" for r in rows)
        assert all(float(r["eigenvalue_error"]) <= 1e-8 for r in rows)
        assert rows[0]["lambda_shift"] == ""  # no shift sector at N = 2

    def test_invalid_range_exits_two(self, tmp_path):
        code, _ = run(tmp_path, ["hessian-check", "--n-min", "5", "--n-max", "3"])
        assert code == 2


class TestTransientScan:
    def test_default_five_series(self, tmp_path):
        code, text = run(tmp_path, ["transient-scan", "--points", "15"])
        assert code == 0
        _, rows = parse_csv(text)
        series = {(r["prep"], r["N"]) for r in rows}
        assert series == {("ground", "2"), ("ground", "4"), ("ground", "10"),
                          ("thermal-0.8", "2"), ("thermal-0.9", "2")}
        assert len(rows) == 5 * 15
        assert all(float(r["fisher_rate"]) > 0 for r in rows)

    def test_optional_series(self, tmp_path):
        code, text = run(tmp_path, ["transient-scan", "--points", "8",
                                    "--include-plus", "--include-harmonic"])
        assert code == 0
        _, rows = parse_csv(text)
        assert len({(r["prep"], r["N"]) for r in rows}) == 7

    def test_zero_coupling_exits_two(self, tmp_path):
        code, _ = run(tmp_path, ["transient-scan", "--gamma", "0"])
        assert code == 2

    def test_config_file_and_flag_precedence(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"points": 5, "n": "2", "t_prep": "0.8"}))
        code, text = run(tmp_path, ["transient-scan", "--config", str(cfg)], name="a.csv")
        assert code == 0
        _, rows = parse_csv(text)
        assert len(rows) == 2 * 5  # ground N=2 plus thermal-0.8
        # a flag overrides the config file
        code, text = run(tmp_path, ["transient-scan", "--config", str(cfg), "--points", "3"], name="b.csv")
        assert code == 0
        _, rows = parse_csv(text)
        assert len(rows) == 2 * 3

    def test_unknown_config_key_exits_two(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"walrus": 1}))
        code, _ = run(tmp_path, ["transient-scan", "--config", str(cfg)])
        assert code == 2

    def test_missing_config_file_exits_two(self, tmp_path):
        code, _ = run(tmp_path, ["transient-scan", "--config", str(tmp_path / "nope.json")])
        assert code == 2


class TestLimits:
    def test_default_rows(self, tmp_path):
        code, text = run(tmp_path, ["limits"])
        assert code == 0
        _, rows = parse_csv(text)
        assert [r["N"] for r in rows] == ["2", "4", "10"]
        xts = {r["x_tilde"] for r in rows}
        assert len(xts) == 1  # identical column
        assert float(next(iter(xts))) == pytest.approx(4.885, abs=5e-3)
        rates = [float(r["rate"]) for r in rows]
        assert rates[1] / rates[0] == pytest.approx(3.0, rel=1e-12)
        assert rates[2] / rates[0] == pytest.approx(9.0, rel=1e-12)

    def test_single_dimension(self, tmp_path):
        code, text = run(tmp_path, ["limits", "--n", "7"])
        assert code == 0
        _, rows = parse_csv(text)
        assert len(rows) == 1


class TestExitCodes:
    def test_numerical_failure_maps_to_three(self, tmp_path, monkeypatch):
        from thermoprobe.numerics import NoConvergence

        def explode(params):
            raise NoConvergence("synthetic")

        monkeypatch.setitem(cli._RUNNERS, "limits", explode)
        code = cli.main(["limits", "--out", str(tmp_path / "x.csv")])
        assert code == 3

    def test_stdout_default(self, capsys):
        code = cli.main(["limits", "--n", "2"])
        assert code == 0
        captured = capsys.readouterr()
        assert captured.out.startswith("N,x_tilde,rate")


class TestRendering:
    def test_none_becomes_empty_cell(self):
        text = cli.render_rows([{"a": 1, "b": None}], "csv")
        assert text == "a,b\n1,\n"

    def test_float_shortest_round_trip(self):
        value = 0.1 + 0.2
        text = cli.render_rows([{"v": value}], "csv")
        assert float(text.splitlines()[1]) == value


class TestConsoleScript:
    def test_installed_entry_point(self, tmp_path):
        import subprocess
        import sys

        out = tmp_path / "limits.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "thermoprobe.cli", "limits", "--n", "2", "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert out.read_text().startswith("N,x_tilde,rate")
