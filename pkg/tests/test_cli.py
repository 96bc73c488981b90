"""Command line surface: formatting, parsing, exit codes, stable outputs."""

import argparse
import csv
import json
import math

import pytest

from brfactor.cli import build_parser, main, parse_angle, round4, table1_rows

# coincident-region rows cancel structurally on some probes; benign here
pytestmark = pytest.mark.filterwarnings(
    "ignore::brfactor.closed_form.CancellationWarning"
)


@pytest.mark.parametrize(
    "x,expected",
    [
        (-1.6249999999999998, "-1.625e+0"),
        (-0.002850124999999999, "-2.850e-3"),
        (0.1953124999999998, "1.953e-1"),
        (0.0059012176780268094, "5.901e-3"),
        (1062.5, "1.062e+3"),  # ties round half to even
        (1063.5, "1.064e+3"),
        (-1062.5, "-1.062e+3"),
        (0.0, "0.000e+0"),
        (1.0, "1.000e+0"),
        (9.9996e4, "1.000e+5"),
        (1.23456e-7, "1.235e-7"),
    ],
)
def test_round4(x, expected):
    assert round4(x) == expected


@pytest.mark.parametrize(
    "text,expected",
    [
        ("pi/6", math.pi / 6),
        ("1/6pi", math.pi / 6),
        ("0.5pi", math.pi / 2),
        ("pi", math.pi),
        ("-pi/3", -math.pi / 3),
        ("1.5707", 1.5707),
        ("0", 0.0),
        (" pi / 6 ", math.pi / 6),
    ],
)
def test_parse_angle(text, expected):
    assert parse_angle(text) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("text", ["abc", "pi/0", "1/2tau", ""])
def test_parse_angle_rejects_garbage(text):
    with pytest.raises(argparse.ArgumentTypeError):
        parse_angle(text)


def test_table_rows_expand_reverse_pairs():
    rows = table1_rows()
    assert len(rows) == 16
    flags = [row.is_reverse_of_previous for row in rows]
    assert flags == [False, False, False, True] + [False, True] * 6


FACTOR_ARGS = [
    "factor", "--kind", "axx", "--r1", "1", "--r2", "1", "--r", "0",
    "--dt1", "1", "--dt2", "1", "--t", "0",
]


def test_factor_json_record(capsys):
    assert main(FACTOR_ARGS + ["--method", "closed"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["kind"] == "axx"
    assert record["method"] == "closed"
    assert record["value"] == pytest.approx(-1.625, rel=1e-12)
    assert record["converged"] is True
    assert record["inputs"]["r1"] == 1.0


def test_factor_methods_agree(capsys):
    values = {}
    for method in ("closed", "series", "series-general", "numeric"):
        assert main(FACTOR_ARGS + ["--method", method]) == 0
        values[method] = json.loads(capsys.readouterr().out)["value"]
    for method in ("series", "series-general", "numeric"):
        assert values[method] == pytest.approx(values["closed"], abs=5e-4)


def test_factor_angle_expressions(capsys):
    args = [
        "factor", "--kind", "axy", "--r1", "1", "--r2", "1", "--r", "1",
        "--theta", "pi/6", "--phi", "pi/3", "--dt1", "1", "--dt2", "1",
        "--t", "0.5",
    ]
    assert main(args) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["value"] == pytest.approx(0.06636208110132678, rel=1e-12)


def test_factor_rejects_bad_geometry(capsys):
    args = [a if a != "1" else a for a in FACTOR_ARGS]
    args[args.index("--r1") + 1] = "-1"
    assert main(args) == 2
    err = capsys.readouterr().err
    assert err != ""


def test_factor_missing_required_flag_exits_2():
    with pytest.raises(SystemExit) as exc_info:
        main(["factor", "--kind", "axx", "--r2", "1"])
    assert exc_info.value.code == 2


def test_factor_unknown_method_exits_2():
    with pytest.raises(SystemExit) as exc_info:
        main(FACTOR_ARGS + ["--method", "exact"])
    assert exc_info.value.code == 2


def test_factor_impossible_budget_exits_3(capsys):
    args = FACTOR_ARGS + [
        "--method", "numeric", "--abs-tol", "1e-30", "--rel-tol", "1e-30",
    ]
    assert main(args) == 3
    out = capsys.readouterr().out
    record = json.loads(out)
    assert record["converged"] is False
    assert record["value"] == pytest.approx(-1.625, abs=1e-3)


def test_series_depth_starves_and_exits_3(capsys):
    args = [
        "factor", "--kind", "bxy", "--r1", "1", "--r2", "1", "--r", "1",
        "--theta", "pi/6", "--phi", "pi/3", "--dt1", "1", "--dt2", "1",
        "--t", "0.5", "--method", "series", "--n-max", "25",
    ]
    assert main(args) == 3
    record = json.loads(capsys.readouterr().out)
    assert record["converged"] is False
    assert record["terms_used"] == 25


@pytest.mark.parametrize("method", ["closed", "series"])
def test_table1_passes(method, capsys):
    assert main(["table1", "--method", method]) == 0
    out = capsys.readouterr().out
    lines = [line for line in out.splitlines() if line.strip()]
    body = [line for line in lines if line.split()[0].isdigit()]
    assert len(body) == 16
    assert all("pass" in line for line in body)
    assert lines[-1].startswith("16/16 rows pass")


def test_table1_csv_is_deterministic(tmp_path, capsys):
    path_a = tmp_path / "a.csv"
    path_b = tmp_path / "b.csv"
    assert main(["table1", "--method", "closed", "--csv", str(path_a)]) == 0
    assert main(["table1", "--method", "closed", "--csv", str(path_b)]) == 0
    capsys.readouterr()
    assert path_a.read_bytes() == path_b.read_bytes()
    with open(path_a, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 16
    assert all(row["passed"] == "true" for row in rows)
    got = float(rows[0]["value"])
    assert got == pytest.approx(-1.625, rel=1e-12)


def test_sweep_grid_order_and_stability(tmp_path, capsys):
    out_a = tmp_path / "sweep_a.csv"
    out_b = tmp_path / "sweep_b.csv"
    args = [
        "sweep", "--kind", "axy", "--r1", "1.0", "--r2", "1.0", "--r", "1.0",
        "--theta", "pi/2", "--phi", "0:6.2831853:8", "--dt1", "1.0",
        "--dt2", "1.0", "--t", "0.5",
    ]
    assert main(args + ["--out", str(out_a)]) == 0
    assert main(args + ["--out", str(out_b)]) == 0
    capsys.readouterr()
    assert out_a.read_bytes() == out_b.read_bytes()
    with open(out_a, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 8
    phis = [float(row["phi"]) for row in rows]
    assert phis == sorted(phis)
    # A_xy follows sin(2 phi): zero at multiples of pi/2, sign flips between
    values = {phi: float(row["value"]) for phi, row in zip(phis, rows)}
    assert abs(values[0.0]) < 1e-12
    assert values[phis[1]] * values[phis[3]] < 0.0


def test_sweep_writes_to_stdout_by_default(capsys):
    args = [
        "sweep", "--kind", "axx", "--r1", "1.0", "--r2", "1.0",
        "--dt1", "1.0", "--dt2", "1.0",
    ]
    assert main(args) == 0
    out = capsys.readouterr().out
    rows = list(csv.DictReader(out.splitlines()))
    assert len(rows) == 1
    assert rows[0]["kind"] == "axx"
    assert float(rows[0]["value"]) == pytest.approx(-1.625, rel=1e-12)


def test_sweep_refuses_oversized_grids(capsys):
    args = [
        "sweep", "--kind", "axx", "--r1", "0.5:2.0:30", "--r2", "0.5:2.0:30",
        "--dt1", "1.0", "--dt2", "1.0", "--max-points", "100",
    ]
    assert main(args) == 2
    assert "100" in capsys.readouterr().err


def test_sweep_validates_grid_upfront(capsys):
    args = [
        "sweep", "--kind", "axx", "--r1", "0.0:1.0:3", "--r2", "1.0",
        "--dt1", "1.0", "--dt2", "1.0",
    ]
    assert main(args) == 2
    capsys.readouterr()


def test_validate_report_is_reproducible(capsys):
    assert main(["validate", "--samples", "2", "--seed", "7"]) == 0
    first = capsys.readouterr().out
    assert main(["validate", "--samples", "2", "--seed", "7"]) == 0
    second = capsys.readouterr().out
    assert first == second
    assert first.count("pass") >= 5
    assert "FAIL" not in first


def test_validate_zero_samples_is_a_vacuous_pass(capsys):
    assert main(["validate", "--samples", "0"]) == 0
    out = capsys.readouterr().out
    assert "pass" in out


def test_parser_program_metadata():
    parser = build_parser()
    assert parser.prog == "brfactor"
    with pytest.raises(SystemExit) as exc_info:
        parser.parse_args(["no-such-command"])
    assert exc_info.value.code == 2
