"""In-process tests of the command-line interface (exit codes, files, config layering)."""

import numpy as np
import pytest

from milacsim.cli import build_parser, main


def _sweep_args(out, extra=()):
    return [
        "sweep-snr",
        "--streams", "2",
        "--antennas", "4",
        "--trials", "2",
        "--seed", "3",
        "--snr-min", "-5",
        "--snr-max", "5",
        "--snr-step", "5",
        "--workers", "1",
        "--out", str(out),
        *extra,
    ]


# ---------------------------------------------------------------------------
# exit codes and argument validation


def test_help_exits_zero_and_documents_flags(capsys):
    assert main(["--help"]) == 0
    out = capsys.readouterr().out
    assert "sweep-snr" in out
    assert "verify" in out
    assert main(["sweep-snr", "--help"]) == 0
    out = capsys.readouterr().out
    assert "--snr-min" in out
    assert "dB" in out
    assert "--z0" in out
    assert "ohms" in out


def test_no_command_exits_one(capsys):
    assert main([]) == 1
    assert "command is required" in capsys.readouterr().err


def test_missing_required_flag_exits_one(capsys):
    assert main(["sweep-snr", "--streams", "2", "--antennas", "4"]) == 1
    err = capsys.readouterr().err
    assert "missing required flag --out" in err


def test_unknown_flag_exits_one(capsys):
    assert main(["sweep-snr", "--bogus", "1"]) == 1
    assert "error" in capsys.readouterr().err


def test_streams_exceeding_antennas_exits_one(tmp_path, capsys):
    code = main(_sweep_args(tmp_path / "r.csv", extra=["--streams", "9"]))
    assert code == 1
    err = capsys.readouterr().err
    assert "--streams" in err and "--antennas" in err


def test_bad_snr_grid_exits_one(tmp_path, capsys):
    assert main(_sweep_args(tmp_path / "r.csv", extra=["--snr-step", "0"])) == 1
    assert main(_sweep_args(tmp_path / "r.csv", extra=["--snr-min", "9", "--snr-max", "1"])) == 1
    capsys.readouterr()


def test_parser_program_name():
    assert build_parser().prog == "milacsim"


# ---------------------------------------------------------------------------
# sweep-snr end to end


def test_sweep_snr_writes_csv_and_manifest(tmp_path, capsys):
    out = tmp_path / "rates.csv"
    assert main(_sweep_args(out)) == 0
    stdout = capsys.readouterr().out
    assert "wrote" in stdout
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 4  # header + SNR points -5, 0, 5
    manifest = (tmp_path / "rates.csv.manifest.txt").read_text()
    assert "master_seed = 3" in manifest
    assert "n_trials = 2" in manifest
    # Every data row keeps the analog/digital/capacity agreement tight.
    for line in lines[1:]:
        toks = [float(t) for t in line.split(",")[:5]]
        assert toks[4] <= 1e-9


def test_sweep_snr_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(_sweep_args(a)) == 0
    assert main(_sweep_args(b)) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_sweep_snr_parallel_matches_serial(tmp_path, capsys):
    serial, parallel = tmp_path / "s.csv", tmp_path / "p.csv"
    assert main(_sweep_args(serial)) == 0
    args = _sweep_args(parallel)
    args[args.index("--workers") + 1] = "2"
    assert main(args) == 0
    capsys.readouterr()
    assert serial.read_bytes() == parallel.read_bytes()


def test_sweep_antennas_end_to_end(tmp_path, capsys):
    out = tmp_path / "ant.csv"
    code = main(
        [
            "sweep-antennas",
            "--streams", "2",
            "--antenna-points", "2,4",
            "--trials", "2",
            "--snr-db", "0",
            "--workers", "1",
            "--out", str(out),
        ]
    )
    assert code == 0
    capsys.readouterr()
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 3
    assert [float(line.split(",")[0]) for line in lines[1:]] == [2.0, 4.0]


# ---------------------------------------------------------------------------
# config files


def test_config_file_supplies_flags(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# sweep settings\n"
        "trials = 2\n"
        "seed = 3\n"
        "snr-min = -5\n"
        "snr-max = 5\n"
        "snr-step = 5  # dB\n"
        "workers = 1\n"
    )
    from_cfg = tmp_path / "cfg.csv"
    explicit = tmp_path / "explicit.csv"
    code = main(
        ["sweep-snr", "--streams", "2", "--antennas", "4",
         "--out", str(from_cfg), "--config", str(cfg)]
    )
    assert code == 0
    assert main(_sweep_args(explicit)) == 0
    capsys.readouterr()
    assert from_cfg.read_bytes() == explicit.read_bytes()


def test_explicit_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("trials = 2\nseed = 3\nsnr-min = 0\nsnr-max = 0\nsnr-step = 1\nworkers = 1\n")
    out = tmp_path / "o.csv"
    code = main(
        ["sweep-snr", "--streams", "2", "--antennas", "4",
         "--out", str(out), "--config", str(cfg), "--trials", "1"]
    )
    assert code == 0
    capsys.readouterr()
    manifest = (tmp_path / "o.csv.manifest.txt").read_text()
    assert "n_trials = 1" in manifest  # flag wins over the config value 2


def test_unknown_config_key_exits_one(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus_key = 5\n")
    code = main(
        ["sweep-snr", "--streams", "2", "--antennas", "4",
         "--out", str(tmp_path / "x.csv"), "--config", str(cfg)]
    )
    assert code == 1
    assert "bogus_key" in capsys.readouterr().err


def test_malformed_config_line_exits_one(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("this line has no equals sign\n")
    code = main(
        ["sweep-snr", "--streams", "2", "--antennas", "4",
         "--out", str(tmp_path / "x.csv"), "--config", str(cfg)]
    )
    assert code == 1
    capsys.readouterr()


def test_unparsable_config_value_exits_one(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("trials = lots\n")
    code = main(
        ["sweep-snr", "--streams", "2", "--antennas", "4",
         "--out", str(tmp_path / "x.csv"), "--config", str(cfg)]
    )
    assert code == 1
    capsys.readouterr()


def test_missing_config_file_exits_one(tmp_path, capsys):
    code = main(
        ["sweep-snr", "--streams", "2", "--antennas", "4",
         "--out", str(tmp_path / "x.csv"), "--config", str(tmp_path / "nope.cfg")]
    )
    assert code == 1
    capsys.readouterr()


# ---------------------------------------------------------------------------
# verify


def test_verify_exits_zero_when_all_pass(capsys):
    assert main(["verify", "--seed", "1", "--cases", "3"]) == 0
    out = capsys.readouterr().out
    assert "all checks passed" in out
    assert "PASS" in out
    assert "FAIL" not in out


# ---------------------------------------------------------------------------
# design-dump


def test_design_dump_writes_all_files(tmp_path, capsys):
    out_dir = tmp_path / "design"
    code = main(
        ["design-dump", "--streams", "2", "--tx-antennas", "4", "--rx-antennas", "4",
         "--seed", "5", "--out-dir", str(out_dir)]
    )
    assert code == 0
    capsys.readouterr()
    expected = {
        "susceptance_tx.csv",
        "susceptance_rx.csv",
        "scattering_tx.csv",
        "scattering_rx.csv",
        "precoder_block.csv",
        "combiner_block.csv",
        "allocation.csv",
        "summary.txt",
    }
    assert expected.issubset({p.name for p in out_dir.iterdir()})

    alloc_lines = (out_dir / "allocation.csv").read_text().strip().split("\n")
    assert alloc_lines[0] == "stream,power_fraction"
    fractions = [float(line.split(",")[1]) for line in alloc_lines[1:]]
    assert len(fractions) == 2
    assert abs(sum(fractions) - 1.0) <= 1e-12

    summary = (out_dir / "summary.txt").read_text()
    assert "water_level" in summary
    assert "milac_rate_bits" in summary

    # Susceptance dump is real valued: every imaginary column is exactly zero.
    first_row = (out_dir / "susceptance_tx.csv").read_text().split("\n")[0]
    values = [float(t) for t in first_row.split(",")]
    assert len(values) == 2 * 6  # (antennas + streams) entries, re/im pairs
    assert all(v == 0.0 for v in values[1::2])


def test_design_dump_rejects_too_many_streams(tmp_path, capsys):
    code = main(
        ["design-dump", "--streams", "5", "--tx-antennas", "4", "--rx-antennas", "4",
         "--out-dir", str(tmp_path / "d")]
    )
    assert code == 1
    capsys.readouterr()
