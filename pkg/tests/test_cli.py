import csv
import io
import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from perco import cli, verify
from perco.arms import SigmaClass
from perco.cli import (
    CSV_HEADER,
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY,
    ConfigError,
    ExperimentConfig,
    fit_json,
    main,
    parse_config,
    plot_dat,
    results_csv,
    serialize_config,
)
from perco.estimate import EstimateRecord
from perco.arms import ArmQuery
from perco.sample import SeedSpec

SMALL = """\
[experiment]
query = mono
j = 2
n = 4
N = 8, 12, 16

[sampling]
samples = 300
seed = 11
"""


def test_defaults():
    cfg = parse_config("[experiment]\nquery = one_black\n")
    assert cfg.query is SigmaClass.ONE_BLACK
    assert (cfg.j, cfg.n, cfg.Ns, cfg.samples, cfg.seed, cfg.workers) == (
        1, 4, (32, 64, 128, 256), 100_000, 0, 1)
    assert cfg.p is None and cfg.out_dir is None


def test_default_inner_radius_follows_j():
    assert parse_config("[experiment]\nquery = mono\nj = 19\n").n == 4
    assert parse_config("[experiment]\nquery = mono\nj = 40\n").n >= 4


@pytest.mark.parametrize("text,line", [
    ("[experiment]\nquery = mono\n\n[sampling]\nsamples = 0\n", 5),
    ("[experiment]\nquery = mono\nN = 64, 32\n", 3),
    ("[experiment]\nquery = mono\nj = two\n", 3),
    ("[experiment]\nquery = tricolour\n", 2),
    ("[experiment]\nquery = mono\ncolour = red\n", 3),
    ("[experiment]\nquery = mono\n[extra]\nx = 1\n", 3),
    ("[experiment]\nquery = mono\n\n[sampling]\np = 1.5\n", 5),
])
def test_config_errors_carry_line(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line
    assert str(exc.value).startswith(f"line {line}:")


def test_missing_query():
    with pytest.raises(ConfigError, match="query"):
        parse_config("[sampling]\nsamples = 5\n")


def test_round_trip():
    cfg = ExperimentConfig(SigmaClass.POLY_ONE_WHITE, 3, 5, (16, 40), 77, 9, 2, "out", 0.25)
    assert parse_config(serialize_config(cfg)) == cfg
    cfg2 = parse_config(SMALL)
    assert parse_config(serialize_config(cfg2)) == cfg2


def _records():
    q = lambda N: ArmQuery(2, SigmaClass.MONO, 4, N)
    return [EstimateRecord.from_counts(q(N), 1000, h, SeedSpec(3, i << 32))
            for i, (N, h) in enumerate(((32, 500), (64, 400), (128, 320), (256, 0)))]


def test_csv_layout():
    rows = list(csv.reader(io.StringIO(results_csv(_records()))))
    assert rows[0] == CSV_HEADER
    assert rows[1] == ["mono", "2", "4", "32", "1000", "500", "0.5", repr(math.sqrt(0.25 / 1000)), "3", "0"]
    assert rows[2][-1] == str(1 << 32)


def test_fit_json_and_plot():
    out = json.loads(fit_json(_records()))
    assert out["excluded_N"] == [256]
    assert out["ci_low"] <= out["alpha_hat"] <= out["ci_high"]
    assert len(out["points"]) == 4
    lines = plot_dat(_records()).splitlines()
    assert lines[0].startswith("#") and len(lines) == 5
    x, y, s = map(float, lines[1].split())
    assert (x, y) == (math.log(32), math.log(0.5))
    assert math.isnan(float(lines[4].split()[1]))
    short = json.loads(fit_json(_records()[:2]))
    assert short["alpha_hat"] is None and "error" in short


def test_experiment_is_deterministic(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL)
    outs = []
    for k in range(2):
        d = tmp_path / f"o{k}"
        assert main(["--config", str(cfg), "--out", str(d)]) == EXIT_OK
        outs.append((d / "results.csv").read_text())
        assert (d / "fit.json").exists() and (d / "plot.dat").exists()
    assert outs[0] == outs[1]
    d = tmp_path / "w"
    assert main(["--config", str(cfg), "--out", str(d), "--workers", "2"]) == EXIT_OK
    assert (d / "results.csv").read_text() == outs[0]
    d = tmp_path / "s"
    assert main(["--config", str(cfg), "--out", str(d), "--seed", "12"]) == EXIT_OK
    assert (d / "results.csv").read_text() != outs[0]


def test_seed_environment(tmp_path, monkeypatch):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL)
    monkeypatch.setenv("PERCO_SEED", "12")
    assert main(["--config", str(cfg), "--out", str(tmp_path / "e")]) == EXIT_OK
    monkeypatch.delenv("PERCO_SEED")
    assert main(["--config", str(cfg), "--out", str(tmp_path / "f"), "--seed", "12"]) == EXIT_OK
    assert (tmp_path / "e/results.csv").read_text() == (tmp_path / "f/results.csv").read_text()


def test_exit_codes(tmp_path, capsys):
    assert main([]) == EXIT_USAGE
    assert main(["--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == EXIT_IO
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nquery = mono\n\n[sampling]\nsamples = 0\n")
    assert main(["--config", str(bad), "--out", str(tmp_path)]) == EXIT_USAGE
    assert "line 5" in capsys.readouterr().err
    good = tmp_path / "c.ini"
    good.write_text(SMALL)
    assert main(["--config", str(good)]) == EXIT_USAGE
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["--config", str(good), "--out", str(blocker / "sub")]) == EXIT_IO
    with pytest.raises(SystemExit) as exc:
        main(["--verify", "medium"])
    assert exc.value.code == EXIT_USAGE


def test_verify_fast_passes_quickly(capsys):
    t0 = time.perf_counter()
    assert main(["--verify", "fast"]) == EXIT_OK
    assert time.perf_counter() - t0 < 120
    lines = capsys.readouterr().out.strip().splitlines()
    names = [ln.split("\t")[0] for ln in lines]
    assert {"menger_duality", "reimer", "bk_monotone", "harris", "reroute"} <= set(names)
    assert all(ln.split("\t")[2] == "0" for ln in lines)


def test_verify_negative_control(monkeypatch):
    from perco.arms import max_disjoint_arms
    from perco.sample import BLACK

    def broken(c):
        return max_disjoint_arms(c, BLACK) + 1

    report = cli.run_verification_suite("fast", flow=broken)
    assert not report.ok
    menger = next(r for r in report.results if r.name == "menger_duality")
    assert menger.violations > 0
    monkeypatch.setattr(cli, "run_verification_suite", lambda level, stream=None: report)
    assert main(["--verify", "fast"]) == EXIT_VERIFY


def test_full_level_covers_exhaustive_reimer():
    assert verify.LEVELS["full"]["reimer_exhaustive"]
    assert not verify.LEVELS["fast"]["reimer_exhaustive"]
    done, bad = verify._reimer(10, True, np.random.default_rng(0))
    # 256 x 256 ordered event pairs on three bits, then 10 random pairs per n
    assert (done, bad) == (256 * 256 + 30, 0)


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "perco.cli"], capture_output=True, text=True)
    assert r.returncode == EXIT_USAGE
