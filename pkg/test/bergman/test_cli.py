import csv
import functools
import json
import math

import numpy as np
import pytest

from bergman import VERSION
from bergman.main import EXIT_NOT_CONVERGED
from bergman.main import EXIT_OK
from bergman.main import EXIT_USAGE
from bergman.main import main
from bergman.numerics.quadrature import quad_semiinfinite_rows


def read_rows(path) -> list[dict[str, str]]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_kernel_n2(tmp_path) -> None:
    out = tmp_path / "kernel.csv"
    assert main(["kernel", "--weight", "gamma", "--n", "2", "--alphas", "0", "--b", "1", "--out", str(out)]) == EXIT_OK
    (row,) = read_rows(out)
    assert float(row["value"]) == pytest.approx(0.1591549, abs=1e-7)
    assert row["route"] == "radial"
    assert row["leading"] == ""
    assert row["d"] == "0" and row["y"] == "1" and row["b"] == "1"


def test_kernel_n4(tmp_path) -> None:
    out = tmp_path / "kernel.csv"
    assert main(["kernel", "--n", "4", "--alphas", "0", "--b", "1", "--out", str(out)]) == EXIT_OK
    (row,) = read_rows(out)
    assert float(row["value"]) == pytest.approx(0.0379954, abs=1e-7)


def test_kernel_row_order(tmp_path) -> None:
    out = tmp_path / "kernel.csv"
    argv = ["kernel", "--n", "3", "--alphas", "1,5", "--b", "1,2", "--d", "0,0.5", "--out", str(out)]
    assert main(argv) == EXIT_OK
    rows = read_rows(out)
    keys = [(float(r["alpha"]), float(r["b"]), float(r["d"])) for r in rows]
    assert keys == [(a, b, d) for a in (1.0, 5.0) for b in (1.0, 2.0) for d in (0.0, 0.5)]
    assert all(r["leading"] != "" for r in rows)


def test_kernel_closed_form_route(tmp_path) -> None:
    out = tmp_path / "kernel.csv"
    argv = ["kernel", "--n", "3", "--alphas", "2", "--d", "0.5", "--route", "closed-form", "--out", str(out)]
    assert main(argv) == EXIT_OK
    (row,) = read_rows(out)
    assert row["route"] == "closed-form"


def test_closed_form_needs_gamma(tmp_path, capsys) -> None:
    out = tmp_path / "kernel.csv"
    assert main(["kernel", "--weight", "expcap", "--route", "closed-form", "--out", str(out)]) == EXIT_USAGE
    assert "grid.route" in capsys.readouterr().err
    assert not out.exists()


def test_invalid_dimension(tmp_path, capsys) -> None:
    out = tmp_path / "kernel.csv"
    assert main(["kernel", "--n", "1", "--out", str(out)]) == EXIT_USAGE
    assert "grid.n" in capsys.readouterr().err
    assert not out.exists()


def test_asym_needs_sweep(tmp_path) -> None:
    out = tmp_path / "asym.csv"
    assert main(["asym", "--alphas", "50", "--out", str(out)]) == EXIT_USAGE
    assert not out.exists()


def test_asym_gamma(tmp_path) -> None:
    out = tmp_path / "asym.csv"
    assert main(["asym", "--n", "2", "--alphas", "20,40,80", "--b", "1", "--out", str(out)]) == EXIT_OK
    rows = read_rows(out)
    assert [r["alpha"] for r in rows] == ["20", "40", "80", "fit"]
    for row, alpha in zip(rows, (20.0, 40.0, 80.0)):
        assert float(row["ratio"]) == pytest.approx((alpha + 1) / alpha, rel=1e-9)
        assert float(row["leading"]) == pytest.approx(alpha / (2 * math.pi), rel=1e-12)
    fit = rows[-1]
    assert float(fit["exact"]) == pytest.approx(1 / (2 * math.pi), rel=1e-7)
    assert float(fit["leading"]) == pytest.approx(1 / (2 * math.pi), rel=1e-12)
    assert float(fit["ratio"]) == pytest.approx(-1.0, abs=1e-6)


def test_diag(tmp_path) -> None:
    out = tmp_path / "diag.csv"
    assert main(["diag", "--n", "2", "--alphas", "0,10", "--b", "1", "--out", str(out)]) == EXIT_OK
    rows = read_rows(out)
    assert rows[0]["leading"] == ""
    for row, alpha in zip(rows, (0.0, 10.0)):
        assert float(row["value"]) == pytest.approx((alpha + 1) / (2 * math.pi), rel=1e-9)
        assert float(row["holomorphic"]) == pytest.approx(float(row["value"]), rel=1e-9)
    assert float(rows[1]["leading"]) == pytest.approx(10 / (2 * math.pi), rel=1e-12)


def test_berezin_of_one(tmp_path) -> None:
    out = tmp_path / "berezin.csv"
    assert main(["berezin", "--symbol", "one", "--n", "3", "--alphas", "10,20", "--b", "1", "--out", str(out)]) == EXIT_OK
    rows = read_rows(out)
    assert len(rows) == 2
    for row in rows:
        assert float(row["B_value"]) == pytest.approx(1.0, abs=1e-8)
        assert float(row["g_b"]) == 1.0
        assert float(row["q1_pred"]) == 0.0


def test_berezin_unknown_symbol(tmp_path, capsys) -> None:
    out = tmp_path / "berezin.csv"
    assert main(["berezin", "--symbol", "sin", "--out", str(out)]) == EXIT_USAGE
    assert "grid.symbol" in capsys.readouterr().err
    assert not out.exists()


def test_output_is_deterministic(tmp_path) -> None:
    argv = ["kernel", "--weight", "logplus", "--n", "3", "--alphas", "0,4", "--b", "0.5,1", "--d", "0.3"]
    assert main([*argv, "--out", str(tmp_path / "one.csv")]) == EXIT_OK
    assert main([*argv, "--out", str(tmp_path / "two.csv")]) == EXIT_OK
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()


def test_json_format(capsys) -> None:
    assert main(["kernel", "--n", "2", "--alphas", "0", "--format", "json"]) == EXIT_OK
    (row,) = json.loads(capsys.readouterr().out)
    assert row["value"] == pytest.approx(1 / (2 * math.pi), rel=1e-9)
    assert row["leading"] is None
    assert row["route"] == "radial"


def test_option_precedence(tmp_path) -> None:
    config = tmp_path / "bergman.toml"
    config.write_text("[grid]\nn = 3\nalphas = [0]\nb = [2.0]\n")
    out = tmp_path / "diag.csv"

    assert main(["diag", "--config", str(config), "--out", str(out)]) == EXIT_OK
    (row,) = read_rows(out)
    assert (row["n"], row["b"]) == ("3", "2")

    assert main(["diag", "--config", str(config), "--set", "grid.n=4", "--out", str(out)]) == EXIT_OK
    (row,) = read_rows(out)
    assert row["n"] == "4"

    assert main(["diag", "--config", str(config), "--set", "grid.n=4", "--n", "2", "--out", str(out)]) == EXIT_OK
    (row,) = read_rows(out)
    assert row["n"] == "2"


def test_missing_config(tmp_path, capsys) -> None:
    assert main(["kernel", "--config", str(tmp_path / "missing.toml")]) == EXIT_USAGE
    assert "not found" in capsys.readouterr().err


def test_unknown_set_option(capsys) -> None:
    assert main(["kernel", "--set", "grid.m=3"]) == EXIT_USAGE
    assert "grid.m" in capsys.readouterr().err


def test_version(capsys) -> None:
    assert main(["--version"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == VERSION


def test_no_command(capsys) -> None:
    assert main([]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_kernel_log_value_column(tmp_path) -> None:
    out = tmp_path / "kernel.csv"
    assert main(["kernel", "--n", "2", "--alphas", "0", "--b", "1", "--out", str(out)]) == EXIT_OK
    (row,) = read_rows(out)
    assert float(row["log_value"]) == pytest.approx(-math.log(2 * math.pi), abs=1e-9)
    assert float(row["log_value"]) == pytest.approx(math.log(float(row["value"])), abs=1e-12)


def test_diag_log_value_past_overflow(tmp_path) -> None:
    out = tmp_path / "diag.csv"
    assert main(["diag", "--n", "2", "--alphas", "400", "--b", "0.01", "--out", str(out)]) == EXIT_OK
    (row,) = read_rows(out)
    assert math.isinf(float(row["value"]))
    log_value = float(row["log_value"])
    assert math.isfinite(log_value)
    assert log_value > 709.0


def test_separation_beyond_cap(tmp_path, capsys) -> None:
    out = tmp_path / "kernel.csv"
    assert main(["kernel", "--n", "3", "--alphas", "1", "--d", "50", "--b", "1", "--out", str(out)]) == EXIT_USAGE
    assert "grid.d" in capsys.readouterr().err
    assert not out.exists()


def test_separation_at_cap(tmp_path) -> None:
    out = tmp_path / "kernel.csv"
    assert main(["kernel", "--n", "3", "--alphas", "1", "--d", "20", "--b", "1", "--out", str(out)]) == EXIT_OK
    (row,) = read_rows(out)
    assert np.isfinite(float(row["log_value"]))


def test_unconverged_table_is_still_written(tmp_path, monkeypatch, capsys) -> None:
    monkeypatch.setattr("bergman.transform._registry", {})
    monkeypatch.setattr("bergman.transform.quad_semiinfinite_rows", functools.partial(quad_semiinfinite_rows, max_nodes=64))
    out = tmp_path / "diag.csv"
    assert main(["diag", "--weight", "expcap", "--n", "3", "--alphas", "3", "--b", "1", "--out", str(out)]) == EXIT_NOT_CONVERGED
    assert "tolerance" in capsys.readouterr().err
    (row,) = read_rows(out)
    assert math.isfinite(float(row["value"]))
