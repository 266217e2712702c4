import pytest

from kernelpde.cli import main
from kernelpde.quasi_interp import read_field_csv
from kernelpde.study import ErrorTable

from reference_tables import TABLE_A, TABLE_B


def test_kernel_check_moments(capsys):
    assert main(["kernel", "--order", "4", "--smoothness", "4", "--dim", "1", "--check-moments"]) == 0
    out = capsys.readouterr().out
    rows = {int(l.split()[0]): l.split() for l in out.splitlines() if l[:1].isdigit()}
    assert float(rows[0][1]) == pytest.approx(0.5, abs=1e-12)
    assert abs(float(rows[1][1])) < 1e-10
    assert "moments ok" in out
    assert "125/36" in out


@pytest.mark.parametrize("spec", ["wendland:2:1", "composite:6:6:3"])
def test_kernel_spec(spec, capsys):
    assert main(["kernel", "--spec", spec, "--check-moments"]) == 0
    assert "moments ok" in capsys.readouterr().out


def test_kernel_unsupported(capsys):
    assert main(["kernel", "--order", "8"]) == 1
    assert "supported" in capsys.readouterr().err


def test_usage_errors(capsys):
    assert main(["bogus"]) == 1
    assert main(["run", "--nu-h", "-9"]) == 1
    assert main(["table", "--series", "C", "--nu-h-range", "-9..-9", "--nu-eps-range", "-6..-6"]) == 1
    assert main(["run", "--nu-h", "-9", "--nu-eps", "-6", "--frobnicate"]) == 1
    err = capsys.readouterr().err
    assert "usage" in err


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0


def test_run_reports_error(tmp_path, capsys):
    out = tmp_path / "final.csv"
    code = main(["run", "--problem", "burgers-a", "--nu-h", "-10", "--nu-eps", "-6",
                 "--out", str(out), "--snapshots", "0.25"])
    assert code == 0
    text = capsys.readouterr().out
    err = float(text.split("linf_error")[1].split()[0])
    assert 1e-4 < err < 1e-2
    f = read_field_csv(out)
    assert f.grid.h == 2.0**-10
    assert (tmp_path / "final_t0.25.csv").exists()


def test_run_invalid_config(capsys):
    assert main(["run", "--nu-h", "-6", "--nu-eps", "-6"]) == 1
    assert main(["run", "--problem", "transport:9", "--nu-h", "-8", "--nu-eps", "-5"]) == 1


def test_run_blow_up_exit_code(capsys):
    assert main(["run", "--nu-h", "-9", "--nu-eps", "-6", "--cfl", "8"]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_run_transport(capsys):
    assert main(["run", "--problem", "transport:1", "--nu-h", "-9", "--nu-eps", "-5", "--t-final", "0.1"]) == 0
    assert "linf_error" in capsys.readouterr().out


@pytest.mark.slow
def test_table_csv(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = main(["table", "--series", "A", "--nu-h-range", "-9..-13", "--nu-eps-range", "-6..-9",
                 "--min-gap", "3", "--out", str(out), "--text"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "nu_h,nu_eps,linf_error"
    t = ErrorTable.from_csv(out)
    assert set(t.cells) == {k for k in TABLE_A if k[0] >= -13 and k[1] >= -9}
    for k, v in t.cells.items():
        assert 1 / 3 <= v / TABLE_A[k] <= 3, k
    assert "nu_h \\ nu_eps" in capsys.readouterr().out


def test_table_stdout(capsys):
    assert main(["table", "--series", "B", "--nu-h-range", "-8..-9", "--nu-eps-range", "-7..-9"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "nu_h,nu_eps,linf_error"
    assert sorted(tuple(map(int, l.split(",")[:2])) for l in out[1:]) == [(-9, -8), (-9, -7), (-8, -7)]


def test_fit_roundtrip(tmp_path, capsys):
    path = tmp_path / "a.csv"
    ErrorTable(dict(TABLE_A)).to_csv(path)
    assert main(["fit", "--input", str(path)]) == 0
    out = capsys.readouterr().out
    vals = {l.split()[0]: float(l.split()[1]) for l in out.splitlines() if l.split()[0] in ("a", "b", "c")}
    assert 2.7 <= vals["a"] <= 3.7 and 3.3 <= vals["b"] <= 4.3 and 3.9 <= vals["c"] <= 4.9
    assert "warning" not in out


def test_fit_flags_series_b(tmp_path, capsys):
    path = tmp_path / "b.csv"
    ErrorTable(dict(TABLE_B)).to_csv(path)
    assert main(["fit", "--input", str(path)]) == 0
    out = capsys.readouterr().out
    assert "eps_exponent 1.3" in out
    assert "warning" in out


def test_fit_too_few_cells(tmp_path, capsys):
    path = tmp_path / "small.csv"
    path.write_text("nu_h,nu_eps,linf_error\n-9,-6,0.1\n-10,-6,0.01\n")
    assert main(["fit", "--input", str(path)]) == 2


def test_fit_bad_csv(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,2\n")
    assert main(["fit", "--input", str(path)]) == 1
