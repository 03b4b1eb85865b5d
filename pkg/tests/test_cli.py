import json
import subprocess
import sys

import numpy as np
import pytest

import relaysec.cli as cli
from relaysec.channel import ChannelStatistics, load_channel, sample_channel, save_channel
from relaysec.df import df_secrecy_rate, df_total_power
from relaysec.errors import SolverError
from relaysec.experiments import CSV_COLUMNS, spec_to_dict, SweepSpec, Scenario


def parse(out):
    fields = {}
    for line in out.splitlines():
        key, _, val = line.partition(": ")
        fields[key] = val
    return fields


def weights(fields):
    return np.array([complex(v) for k, v in fields.items() if k.startswith("w[")])


@pytest.fixture
def fixture_file(tmp_path):
    ch = sample_channel(4, ChannelStatistics(1.0, 3.0, 1.0), seed=21)
    path = tmp_path / "fx.json"
    save_channel(ch, path)
    return ch, str(path)


class TestSingleDesigns:
    def test_df_total(self, fixture_file, capsys, tmp_path):
        ch, path = fixture_file
        out_csv = tmp_path / "r.csv"
        code = cli.main(["df-total", "--channel", path, "--pt", "10", "--n0", "1", "--out", str(out_csv)])
        assert code == 0
        f = parse(capsys.readouterr().out)
        expect = df_total_power(ch.h, ch.z, 1.0, 10.0).second_hop_rate_bits
        assert float(f["rate_bits"]) == pytest.approx(expect, rel=1e-11)
        w = weights(f)
        assert w.size == 4
        assert df_secrecy_rate(w, ch.h, ch.z, 1.0) == pytest.approx(expect, rel=1e-9)
        assert "note" not in f
        lines = out_csv.read_text().splitlines()
        assert lines[1] == ",".join(CSV_COLUMNS)
        assert lines[2].startswith("df-total,NA,4,10,10,NA,total,")

    def test_df_individual_methods(self, fixture_file, capsys):
        _, path = fixture_file
        got = {}
        for method in ("sdr", "socp", "suboptimal"):
            assert cli.main(["df-individual", "--channel", path, "--pt", "4", "--method", method]) == 0
            f = parse(capsys.readouterr().out)
            got[method] = float(f["rate_bits"])
            evaluated = float(f["evaluated_rate_bits"])
            assert abs(evaluated - got[method]) <= 1e-6 * max(1, got[method]) or "note" in f
        assert got["suboptimal"] <= got["sdr"] + 1e-6
        assert got["sdr"] == pytest.approx(got["socp"], rel=1e-3)

    def test_per_relay_list(self, fixture_file, capsys):
        _, path = fixture_file
        assert cli.main(["df-individual", "--channel", path, "--p", "1,1,1,1"]) == 0
        a = parse(capsys.readouterr().out)["rate_bits"]
        assert cli.main(["df-individual", "--channel", path, "--p", "1"]) == 0
        assert parse(capsys.readouterr().out)["rate_bits"] == a

    def test_seeded_channel(self, capsys):
        assert cli.main(["df-total", "--seed", "3", "--stats", "1,3,1", "--m", "3", "--pt", "2"]) == 0
        ch = sample_channel(3, ChannelStatistics(1, 3, 1), seed=3)
        rate = float(parse(capsys.readouterr().out)["rate_bits"])
        assert rate == pytest.approx(df_total_power(ch.h, ch.z, 1.0, 2.0).second_hop_rate_bits, rel=1e-11)

    def test_af_achievable_only(self, fixture_file, capsys, monkeypatch):
        def forbidden(*a, **kw):
            raise AssertionError("the 2-D search must not run")

        monkeypatch.setattr(cli, "af_optimize", forbidden)
        _, path = fixture_file
        assert cli.main(["af", "--channel", path, "--ps", "10", "--pt", "5", "--achievable-only"]) == 0
        f = parse(capsys.readouterr().out)
        assert f["method"] == "AfAchievable"
        assert float(f["rate_bits"]) == pytest.approx(float(f["evaluated_rate_bits"]), abs=1e-9)

    def test_af_search(self, capsys):
        args = ["af", "--seed", "5", "--stats", "3,2,2", "--m", "2", "--ps", "10", "--pt", "5", "--N", "20"]
        assert cli.main(args + ["--constraint", "individual"]) == 0
        f = parse(capsys.readouterr().out)
        assert f["method"] == "AfOptimize" and f["status"] in ("Optimal", "Feasible")

    def test_robust(self, fixture_file, capsys):
        _, path = fixture_file
        base = ["robust", "--channel", path, "--pt", "10"]
        assert cli.main(base + ["--mode", "worstcase", "--eps-h", "0.05", "--eps-z", "0.05"]) == 0
        wc = parse(capsys.readouterr().out)
        assert float(wc["constraint_slack"]) >= -1e-8
        args = ["--mode", "statistical", "--var-h", "0.01", "--var-z", "0.02", "--epsilon", "0.9", "--trials", "10000"]
        assert cli.main(base + args) == 0
        st = parse(capsys.readouterr().out)
        assert float(st["empirical_nonoutage"]) >= 0.9 - 3 * np.sqrt(0.09 / 10000)
        # the nominal channel supports at least the robust guarantee
        assert float(st["evaluated_rate_bits"]) >= float(st["rate_bits"]) - 1e-6

    def test_gen_channel(self, tmp_path, capsys):
        out = tmp_path / "g.json"
        assert cli.main(["gen-channel", "--seed", "7", "--m", "3", "--stats", "1,2,3", "--out", str(out)]) == 0
        assert load_channel(out) == sample_channel(3, ChannelStatistics(1, 2, 3), seed=7)
        assert cli.main(["gen-channel", "--m", "2"]) == 0
        assert json.loads(capsys.readouterr().out)["M"] == 2


class TestSweepCommand:
    def test_spec_file(self, tmp_path, capsys):
        spec = SweepSpec(Scenario.DF_VS_PT, (0.0, 10.0), ("total", "suboptimal"), seed=2, M=3)
        (tmp_path / "s.json").write_text(json.dumps(spec_to_dict(spec)))
        out = tmp_path / "o.csv"
        assert cli.main(["sweep", "--spec", str(tmp_path / "s.json"), "--out", str(out), "--reproducible"]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + 2 * 2

    def test_stdout(self, tmp_path, capsys):
        spec = SweepSpec(Scenario.DF_VS_PT, (0.0,), ("total",), seed=2, M=3)
        (tmp_path / "s.json").write_text(json.dumps(spec_to_dict(spec)))
        assert cli.main(["sweep", "--spec", str(tmp_path / "s.json"), "--reproducible"]) == 0
        assert capsys.readouterr().out.startswith("scenario,seed,M,")

    def test_needs_exactly_one_source(self, capsys):
        assert cli.main(["sweep"]) == 1
        assert cli.main(["sweep", "--spec", "a.json", "--preset", "fig2"]) == 1


class TestExitCodes:
    @pytest.mark.parametrize(
        "argv",
        [
            ["df-total", "--pt", "1", "--bogus"],
            ["df-total", "--p"],
            ["nonsense"],
            [],
            ["df-total"],
            ["df-total", "--pt", "-1"],
            ["df-individual", "--pt", "1", "--p", "1,2"],
            ["df-individual", "--pt", "1", "--method", "magic"],
            ["af", "--pt", "1"],
            ["robust", "--mode", "statistical", "--pt", "1", "--epsilon", "0.4"],
            ["robust", "--mode", "statistical", "--pt", "1"],
            ["df-total", "--pt", "1", "--stats", "1,2"],
            ["df-total", "--pt", "1", "--channel", "does-not-exist.json"],
            ["sweep", "--preset", "fig9"],
        ],
    )
    def test_usage_and_validation(self, argv, capsys):
        assert cli.main(argv) == 1
        assert capsys.readouterr().err

    def test_channel_and_seed_conflict(self, fixture_file, capsys):
        _, path = fixture_file
        assert cli.main(["df-total", "--channel", path, "--seed", "1", "--pt", "1"]) == 1

    def test_malformed_channel(self, tmp_path, capsys):
        (tmp_path / "c.json").write_text('{"M": 1}')
        assert cli.main(["df-total", "--channel", str(tmp_path / "c.json"), "--pt", "1"]) == 1
        assert "g" in capsys.readouterr().err

    def test_solver_failure(self, monkeypatch, capsys):
        def boom(*a, **kw):
            raise SolverError("synthetic failure")

        monkeypatch.setattr(cli, "df_individual_sdr", boom)
        assert cli.main(["df-individual", "--pt", "1"]) == 2
        assert "synthetic failure" in capsys.readouterr().err

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "relaysec", "df-total", "--pt", "1", "--m", "2"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "rate_bits:" in proc.stdout
        proc = subprocess.run([sys.executable, "-m", "relaysec", "--nope"], capture_output=True, text=True)
        assert proc.returncode == 1
        assert "usage" in proc.stderr
