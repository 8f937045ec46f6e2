import json
import os

import pytest

from mimodist import cli
from mimodist.lp import LpNumericalError

DATA = os.path.join(os.path.dirname(__file__), "data")

SMALL = {
    "channel": {"tx_antennas": 2, "rx_antennas": 2, "block_length": 5, "snr_db": 10.0},
    "source": {"norm_order": 2.0, "source_dim": 10.0},
    "arq": {
        "arrival_prob": 0.5,
        "deadline": 2,
        "max_window": 2,
        "allowed_r": [1.0, 2.0],
    },
    "mdp": {"deadline_list": [2, 3]},
    "simulate": {"horizon_blocks": 40000, "warmup_blocks": 500},
}

VIDEO = {
    "video": {
        "pe_table": os.path.join(DATA, "pe_table.csv"),
        "rd_table": os.path.join(DATA, "rd_table.csv"),
        "rates": {"1": 1.0, "2": 2.0, "4": 4.0, "8": 8.0},
        "snr_db_list": [0.0, 10.0, 20.0],
    }
}


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run_cli(tmp_path, command, payload, seed=0, outdir="out"):
    out = tmp_path / outdir
    code = cli.main(
        [command, "--config", write_config(tmp_path, payload), "--out", str(out),
         "--seed", str(seed)]
    )
    return code, out


def test_tradeoff_outputs_vertices(tmp_path):
    payload = {"channel": {"tx_antennas": 4, "rx_antennas": 4, "block_length": 7}}
    code, out = run_cli(tmp_path, "tradeoff", payload)
    assert code == 0
    lines = (out / "tradeoff.csv").read_text().splitlines()
    assert lines[0].startswith("# config: ")
    assert lines[1] == "r,d,is_vertex"
    assert "2.0,4.0,1" in lines  # the (2, 4) vertex of the 4x4 curve


def test_tradeoff_empty_sweep_is_header_only(tmp_path):
    payload = {
        "channel": {"tx_antennas": 2, "rx_antennas": 2, "block_length": 3},
        "tradeoff": {"r_points": 0},
    }
    code, out = run_cli(tmp_path, "tradeoff", payload)
    assert code == 0
    lines = (out / "tradeoff.csv").read_text().splitlines()
    assert len(lines) == 2  # config comment + header, no rows


def test_exponent_summary_matches_library(tmp_path):
    from mimodist import ChannelConfig, SourceConfig, build_curve, solve_high_snr

    code, out = run_cli(tmp_path, "exponent", SMALL)
    assert code == 0
    _, header, rows = cli.read_table(out / "exponent_summary.csv")
    assert header == ["r_star", "d_star", "distortion_exponent", "segment_index"]
    chan = ChannelConfig(**SMALL["channel"])
    src = SourceConfig(**SMALL["source"])
    expected = solve_high_snr(build_curve(chan), src, chan)
    assert float(rows[0][0]) == expected.r_star


def test_finite_snr_argmin(tmp_path):
    payload = dict(SMALL)
    payload["finite_snr"] = {"snr_db_list": [10.0, 20.0], "r_points": 101}
    code, out = run_cli(tmp_path, "finite-snr", payload)
    assert code == 0
    _, _, rows = cli.read_table(out / "finite_snr_argmin.csv")
    assert len(rows) == 2
    _, _, sweep = cli.read_table(out / "finite_snr_sweep.csv")
    assert len(sweep) == 2 * 101


def test_video_command(tmp_path):
    code, out = run_cli(tmp_path, "video", VIDEO)
    assert code == 0
    _, header, rows = cli.read_table(out / "video.csv")
    assert header == ["snr_db", "nu", "de", "dc", "total", "is_opt"]
    # one optimum flagged per swept SNR
    for snr in ("0.0", "10.0", "20.0"):
        flags = [r[5] for r in rows if r[0] == snr]
        assert flags.count("1") == 1


def test_mdp_command_produces_per_deadline_files(tmp_path):
    code, out = run_cli(tmp_path, "mdp", SMALL)
    assert code == 0
    for k in (2, 3):
        assert (out / f"policy_k{k}.csv").exists()
        assert (out / f"value_k{k}.txt").exists()
    _, _, rows = cli.read_table(out / "mdp_objectives.csv")
    assert [r[0] for r in rows] == ["2", "3", "mean"]
    mean = (float(rows[0][1]) + float(rows[1][1])) / 2.0
    assert float(rows[2][1]) == pytest.approx(mean, rel=1e-12)


def test_compare_command(tmp_path):
    code, out = run_cli(tmp_path, "compare", SMALL)
    assert code == 0
    _, header, rows = cli.read_table(out / "compare.csv")
    assert header == ["r", "L", "fixed_value", "adaptive_value", "ratio", "ratio_db"]
    for row in rows:
        assert float(row[4]) >= 1.0 - 1e-9  # adaptive dominates every fixed
        assert float(row[5]) == pytest.approx(
            10.0 * __import__("math").log10(float(row[4])), abs=1e-9
        )


def test_simulate_command(tmp_path, capsys):
    code, out = run_cli(tmp_path, "simulate", SMALL, seed=11)
    assert code == 0
    _, _, rows = cli.read_table(out / "simulate.csv")
    assert rows[0][-1] == "PASS"
    assert "simulation report" in capsys.readouterr().out


def test_outputs_are_deterministic(tmp_path):
    _, out1 = run_cli(tmp_path, "tradeoff", SMALL, outdir="a")
    _, out2 = run_cli(tmp_path, "tradeoff", SMALL, outdir="b")
    assert (out1 / "tradeoff.csv").read_bytes() == (out2 / "tradeoff.csv").read_bytes()


def test_round_trip_is_byte_identical(tmp_path):
    _, out = run_cli(tmp_path, "finite-snr", SMALL)
    path = out / "finite_snr_argmin.csv"
    cfg, header, rows = cli.read_table(path)
    rewritten = out / "rewritten.csv"
    cli.write_table(rewritten, cfg, header, rows)
    assert rewritten.read_bytes() == path.read_bytes()


def test_unknown_section_rejected(tmp_path):
    code, _ = run_cli(tmp_path, "tradeoff", {"chanel": {}})
    assert code == cli.EXIT_VALIDATION


def test_unknown_key_rejected(tmp_path):
    code, _ = run_cli(tmp_path, "tradeoff", {"channel": {"tx_antenas": 4}})
    assert code == cli.EXIT_VALIDATION


def test_invalid_value_rejected(tmp_path):
    code, _ = run_cli(tmp_path, "tradeoff", {"channel": {"tx_antennas": 0}})
    assert code == cli.EXIT_VALIDATION


def test_video_requires_tables(tmp_path):
    code, _ = run_cli(tmp_path, "video", {"video": {"snr_db_list": [10.0]}})
    assert code == cli.EXIT_VALIDATION


def test_missing_config_file(tmp_path):
    code = cli.main(
        ["tradeoff", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]
    )
    assert code == cli.EXIT_VALIDATION


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def boom(problem, *a, **k):
        raise LpNumericalError("synthetic breakdown")

    monkeypatch.setattr(cli, "solve", boom)
    code, _ = run_cli(tmp_path, "compare", SMALL)
    assert code == cli.EXIT_NUMERICAL
