import json
import math

import pytest

from mzi_lab.cli import build_parser, figure_presets, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


def parse_csv(text):
    lines = text.strip().split("\n")
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


class TestPoint:
    def test_lossless_tmsv_qfi(self, capsys):
        code, out = run_cli(
            capsys,
            "point", "--scheme", "qfi", "--resource", "tmsv",
            "--nbar", "10", "--loss", "symmetric", "--rate", "0",
        )
        assert code == 0
        rows = parse_csv(out)
        assert len(rows) == 1
        assert float(rows[0]["delta2phi"]) == pytest.approx(1.0 / 240.0, rel=1e-9)
        assert rows[0]["beats_snl"] == "true"

    def test_tmsv_qfi_busy_rate_beats_snl(self, capsys):
        code, out = run_cli(
            capsys,
            "point", "--scheme", "qfi", "--resource", "tmsv",
            "--nbar", "10", "--loss", "symmetric", "--rate", "0.2",
        )
        rows = parse_csv(out)
        assert float(rows[0]["delta2phi"]) < 0.05

    def test_parity_csv_moderate_loss_loses(self, capsys):
        code, out = run_cli(
            capsys,
            "point", "--scheme", "parity", "--resource", "csv",
            "--nbar", "10", "--loss", "symmetric", "--rate", "0.15",
        )
        assert code == 0
        rows = parse_csv(out)
        assert rows[0]["beats_snl"] == "false"

    def test_jsonl_matches_csv_values(self, capsys):
        args = [
            "point", "--scheme", "qfi", "--resource", "csv",
            "--nbar", "10", "--loss", "one-arm", "--rate", "0.1",
        ]
        _, out_csv = run_cli(capsys, *args)
        _, out_json = run_cli(capsys, *args, "--format", "jsonl")
        row_csv = parse_csv(out_csv)[0]
        row_json = json.loads(out_json)
        assert float(row_csv["delta2phi"]) == row_json["delta2phi"]
        assert float(row_csv["mu"]) == row_json["mu"]

    def test_fixed_mu_flag(self, capsys):
        _, out = run_cli(
            capsys,
            "point", "--scheme", "single-hd", "--resource", "csv",
            "--nbar", "4", "--loss", "symmetric", "--rate", "0.1", "--fixed-mu",
        )
        row = parse_csv(out)[0]
        # mu pinned at the lossless optimum rather than re-optimized
        lossless = run_cli(
            capsys,
            "point", "--scheme", "single-hd", "--resource", "csv",
            "--nbar", "4", "--loss", "symmetric", "--rate", "0",
        )[1]
        assert row["mu"] == parse_csv(lossless)[0]["mu"]


class TestSweep:
    def test_variable_sweep_shape_and_determinism(self, capsys):
        args = [
            "sweep", "--variable", "nbar", "--lo", "1", "--hi", "50", "--points", "50",
            "--rate", "0.2", "--scheme", "qfi", "--resource", "tmsv",
        ]
        code, out1 = run_cli(capsys, *args)
        assert code == 0
        rows = parse_csv(out1)
        assert len(rows) == 50
        assert {row["scheme"] for row in rows} == {"qfi"}
        _, out2 = run_cli(capsys, *args)
        assert out1 == out2

    def test_figure_preset_2a(self, capsys):
        code, out = run_cli(capsys, "sweep", "--figure", "2a")
        assert code == 0
        rows = parse_csv(out)
        # 21 loss-rate points, three resources
        assert len(rows) == 21 * 3
        assert {row["resource"] for row in rows} == {"csv", "tmsv", "coherent"}
        tmsv0 = next(r for r in rows if r["resource"] == "tmsv" and float(r["value"]) == 0.0)
        assert float(tmsv0["delta2phi"]) == pytest.approx(1.0 / 240.0, rel=1e-8)

    def test_sweep_requires_mode(self, capsys):
        code, _ = run_cli(capsys, "sweep")
        assert code == 2

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "rows.csv"
        args = [
            "sweep", "--variable", "loss-rate", "--lo", "0", "--hi", "0.4", "--points", "3",
            "--scheme", "qfi", "--resource", "tmsv", "--out", str(target),
        ]
        code, out = run_cli(capsys, *args)
        assert code == 0
        assert out == ""
        content = target.read_bytes()
        assert content.endswith(b"\n")
        assert b"\r" not in content
        assert len(parse_csv(content.decode())) == 3

    def test_thread_env_does_not_change_output(self, capsys, monkeypatch):
        args = [
            "sweep", "--variable", "loss-rate", "--lo", "0", "--hi", "0.5", "--points", "12",
            "--scheme", "qfi", "--resource", "csv", "--loss", "one-arm",
        ]
        monkeypatch.setenv("MZI_LAB_THREADS", "1")
        _, serial = run_cli(capsys, *args)
        monkeypatch.setenv("MZI_LAB_THREADS", "3")
        _, parallel = run_cli(capsys, *args)
        assert serial == parallel


class TestThreshold:
    def test_qfi_tmsv_symmetric(self, capsys):
        code, out = run_cli(
            capsys,
            "threshold", "--scheme", "qfi", "--resource", "tmsv", "--nbar", "10",
            "--loss", "symmetric",
        )
        assert code == 0
        row = parse_csv(out)[0]
        assert row["status"] == "crossed"
        assert float(row["loss_rate"]) == pytest.approx(1.0 - (10.0 + math.sqrt(188.0)) / 44.0, abs=2e-3)

    def test_no_crossing_reported(self, capsys):
        code, out = run_cli(
            capsys,
            "threshold", "--scheme", "single-hd", "--resource", "coherent", "--nbar", "10",
            "--loss", "symmetric",
        )
        assert code == 0
        row = parse_csv(out)[0]
        assert row["status"] == "no-crossing"
        assert row["loss_rate"] == "nan"


class TestParsing:
    def test_bad_flag_exits_2(self):
        with pytest.raises(SystemExit) as excinfo:
            build_parser().parse_args(["point", "--scheme", "sorcery"])
        assert excinfo.value.code == 2

    def test_missing_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as excinfo:
            build_parser().parse_args([])
        assert excinfo.value.code == 2

    def test_figure_presets_cover_documented_panels(self):
        presets = figure_presets()
        expected = {"2a", "2b", "2c", "2d", "2e", "2f", "a1", "a2"}
        for fig in ("3", "4", "5", "6"):
            expected |= {fig + panel for panel in "abcd"}
        assert set(presets) == expected
