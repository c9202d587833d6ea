import csv
import json
from fractions import Fraction
from pathlib import Path

import pytest

from ampbound.cli import main


def run(tmp_path, *argv):
    return main(["--out", str(tmp_path), *argv])


def test_exponents_values(tmp_path, capsys):
    assert run(tmp_path, "exponents", "--kappa", "3/20") == 0
    out = capsys.readouterr().out
    assert "17/20" in out and "20/29" in out and "3/58" in out
    payload = json.loads((tmp_path / "exponents.json").read_text())
    assert payload["profile_max"] == "17/20"
    assert payload["hybrid_theta"] == "20/29"
    assert payload["hybrid_saving"] == "3/58"
    assert payload["volume_balance_t"] == "1/3"
    assert ["2", "-2"] not in payload["profile_argmax_points"]
    assert ["2", "-2"] not in payload["profile_argmax_plateaus"]
    assert [2, "-2"] in payload["profile_argmax_plateaus"]
    assert [4, "-1/5"] in payload["profile_argmax_points"]
    assert (tmp_path / "figure1.csv").exists()
    assert (tmp_path / "figure1.png").exists()


def test_exponents_kappa_zero(tmp_path, capsys):
    assert run(tmp_path, "exponents", "--kappa", "0") == 0
    assert "profile max at kappa=0: 1" in capsys.readouterr().out


def test_figure1_csv_is_piecewise_linear_data(tmp_path):
    run(tmp_path, "exponents")
    with (tmp_path / "figure1.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert {r["i"] for r in rows} == {"1", "2", "3", "4"}
    vals = [Fraction(r["value"]) for r in rows]
    assert max(vals) == Fraction(17, 20)


def test_count_command(tmp_path, capsys):
    assert run(tmp_path, "count", "--builtin", "lipschitz", "--ell", "3") == 0
    assert "count = 32" in capsys.readouterr().out
    payload = json.loads((tmp_path / "count.json").read_text())
    assert payload["count"] == 32
    assert "wall_ms" not in payload  # timing lives in the run log
    assert "wall_ms" in json.loads((tmp_path / "run_log.json").read_text())


def test_count_sqrt2_coords(tmp_path, capsys):
    assert run(tmp_path, "count", "--builtin", "binary-sqrt2", "--ell", "2,1") == 0
    assert "count =" in capsys.readouterr().out


def test_reduce_command(tmp_path):
    assert run(tmp_path, "reduce", "--builtin", "pell-binary") == 0
    payload = json.loads((tmp_path / "reduce.json").read_text())
    assert payload["reduced_gram"] == [[["2"], ["0"]], [["0"], ["2"]]]


def test_amplify_trivial_mode(tmp_path):
    assert run(
        tmp_path, "amplify", "--builtin", "lipschitz", "--L", "3", "--coeff-mode", "trivial"
    ) == 0
    payload = json.loads((tmp_path / "amplify.json").read_text())
    assert payload["S"]["1"] == 80.0  # r(3) + r(5)
    assert (tmp_path / "amplify.png").exists()
    assert (tmp_path / "amplify_terms.csv").exists()


def test_decay_scan_csv_columns(tmp_path):
    assert run(tmp_path, "decay-scan", "--max-m", "20", "--t-steps", "49") == 0
    with (tmp_path / "decay_scan.csv").open() as fh:
        header = next(csv.reader(fh))
    assert header == ["m", "l", "t", "coeff", "bound", "ratio"]
    assert (tmp_path / "decay_scan.png").exists()


def test_corpus_command(tmp_path, capsys):
    assert run(tmp_path, "corpus") == 0
    out = capsys.readouterr().out
    for name in ("lipschitz", "hurwitz", "eichler-2-3"):
        assert name in out


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("kappa = 1/10\n")
    out1 = tmp_path / "o1"
    assert main(["--config", str(cfg), "--out", str(out1), "exponents"]) == 0
    payload = json.loads((out1 / "exponents.json").read_text())
    assert payload["kappa"] == "1/10"
    # command line wins over the config file
    out2 = tmp_path / "o2"
    assert main(
        ["--config", str(cfg), "--out", str(out2), "exponents", "--kappa", "3/20"]
    ) == 0
    assert json.loads((out2 / "exponents.json").read_text())["kappa"] == "3/20"


def test_exit_code_config_error(tmp_path, capsys):
    assert run(tmp_path, "count", "--ell", "3") == 2  # no form given
    assert main(["--config", "/nonexistent.cfg", "--out", str(tmp_path), "corpus"]) == 2


def test_exit_code_invariant_violation(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"field": "Q", "rank": 2, "gram": [[2, 0], [0, -2]]}))
    assert run(tmp_path, "count", "--form-json", str(bad), "--ell", "1") == 1


def test_lemma_check_single_suite(tmp_path, capsys):
    assert run(tmp_path, "lemma-check", "--suite", "geometric") == 0
    assert "suite geometric: PASS" in capsys.readouterr().out
    payload = json.loads((tmp_path / "lemma_check.json").read_text())
    assert payload["geometric"]["ok"] is True


def test_byte_identical_reruns(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(["--out", str(out), "exponents", "--kappa", "3/20"]) == 0
    assert (out1 / "figure1.csv").read_bytes() == (out2 / "figure1.csv").read_bytes()
    assert (out1 / "exponents.json").read_bytes() == (out2 / "exponents.json").read_bytes()
