import csv
import io
import math

import pytest

from wrightkernel.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, GAP_HEADER, main


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


def test_eval_kernel_table(capsys):
    assert main(["eval-kernel", "--x-steps", "2", "--y-steps", "3"]) == EXIT_OK
    rows = read_csv(capsys.readouterr().out)
    assert rows[0] == ["x", "y", "K_series", "K_integral", "K_integrable", "max_pairwise_diff", "note"]
    assert len(rows) == 1 + 6
    for row in rows[1:]:
        assert float(row[5]) < 1e-10


def test_eval_kernel_diagonal_note(capsys):
    assert main(["eval-kernel", "--x-min", "1", "--x-max", "1", "--x-steps", "1",
                 "--y-min", "1", "--y-max", "1", "--y-steps", "1"]) == EXIT_OK
    row = read_csv(capsys.readouterr().out)[1]
    assert row[4] == "nan" and row[6].startswith("near-diagonal")


def test_eval_kernel_series_integral_mode_for_any_alpha(capsys):
    assert main(["eval-kernel", "--alpha", "0", "--m", "2", "--n", "3", "--mode", "series-integral",
                 "--x-steps", "1", "--y-steps", "1"]) == EXIT_OK
    assert "K_integrable" not in capsys.readouterr().out


def test_eval_kernel_empty_grid(capsys):
    assert main(["eval-kernel", "--x-steps", "0"]) == EXIT_OK
    assert len(read_csv(capsys.readouterr().out)) == 1


def test_gap_preset_to_file(tmp_path):
    out = tmp_path / "fig1.csv"
    assert main(["gap", "--preset", "fig1", "--s-max", "2", "--s-steps", "5", "--out", str(out)]) == EXIT_OK
    rows = read_csv(out.read_text())
    assert rows[0] == GAP_HEADER
    body = rows[1:]
    assert {r[0] for r in body} == {"theta=1", "theta=2"} and len(body) == 10
    for r in body:
        assert r[-1] == "ok"
        assert float(r[7]) < 1e-8
    # numbers carry 17 significant digits
    assert len(body[3][4].replace(".", "").lstrip("0")) >= 15


def test_gap_custom_curve(capsys):
    assert main(["gap", "--alpha", "0", "--m", "1", "--n", "1", "--s-max", "1", "--s-steps", "3"]) == EXIT_OK
    last = read_csv(capsys.readouterr().out)[-1]
    assert float(last[4]) == pytest.approx(math.exp(-1), rel=1e-12)


@pytest.mark.parametrize("argv", [
    ["eval-kernel", "--alpha", "0", "--m", "2", "--n", "3"],
    ["eval-kernel", "--m", "2", "--n", "2"],
    ["eval-kernel", "--x-min", "0"],
    ["gap", "--s-min", "2", "--s-max", "1"],
    ["verify", "--suite", "pde", "--alpha", "0", "--m", "2", "--n", "3"],
    ["verify", "--suite", "pde", "--endpoints", "0.5", "0.2"],
])
def test_invalid_configuration(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_verify_all_passes(capsys, tmp_path):
    out = tmp_path / "report.csv"
    assert main(["verify", "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "FAIL" not in text and "checks passed" in text
    rows = read_csv(out.read_text())
    assert rows[0] == ["suite", "check", "value", "tol", "status"]
    assert {r[0] for r in rows[1:]} == {"representation", "wright-ode", "boundary", "gap", "pde", "hamiltonian"}


def test_injected_fault_is_caught(capsys):
    assert main(["verify", "--suite", "representation", "--inject-fault", "b-sign"]) == EXIT_FAIL
    assert "failed suites: representation" in capsys.readouterr().out


def test_help_exits_cleanly():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
