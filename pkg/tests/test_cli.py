import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from dqwalk.cli import build_run_config, loglog_slope, main
from dqwalk.errors import ConfigError
from dqwalk.report import SCHEMA

HOMOGENEOUS = """\
# homogeneous portfolio-style walk
n = 100
p0 = 0.1
sigma = 0.5
seed = 11
grid_size = 500
romberg_n1 = 100
romberg_n2 = 500
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def rows(path):
    lines = [l for l in open(path, encoding="utf-8") if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("".join(lines))))


def comments(path):
    return [l.rstrip("\n") for l in open(path, encoding="utf-8") if l.startswith("#")]


def test_compare_homogeneous(tmp_path):
    cfg = write(tmp_path, "h.cfg", HOMOGENEOUS)
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--config", cfg, "--out", str(out)]) == 0
    table = rows(out)
    assert len(table) == 51
    assert [float(r["K"]) for r in table] == list(range(51))
    errs = [c for c in table[0] if c.startswith("abs_err_")]
    assert set(errs) == {"abs_err_dq_N", "abs_err_dq_romberg", "abs_err_gaussian", "abs_err_poisson"}
    for r in table:
        for c in errs:
            v = float(r[c])
            assert np.isfinite(v) and v >= 0.0
    head = comments(out)
    assert head[0] == f"# schema: {SCHEMA}"
    assert "# config: p0 = 0.1" in head and "# config: grid_size = 500" in head
    script = (tmp_path / "cmp.gp").read_text()
    assert "'cmp.csv'" in script and "abs_err_dq_N" in script


def test_compare_is_byte_identical_on_rerun(tmp_path):
    cfg = write(tmp_path, "h.cfg", HOMOGENEOUS)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["compare", "--config", cfg, "--out", str(a)]) == 0
    assert main(["compare", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_compare_self_reference_carries_caveat(tmp_path):
    cfg = write(tmp_path, "r.cfg", "n = 40\np0 = 0.1\nalpha_law = uniform_real\nalpha_lo = 0.5\n"
                "alpha_hi = 2\nreference = self\nreference_size = 2000\nstrike_hi = 20\n")
    out = tmp_path / "self.csv"
    assert main(["compare", "--config", cfg, "--out", str(out)]) == 0
    head = comments(out)
    assert any(l.startswith("# caveat:") for l in head)
    assert any("poisson baseline omitted" in l for l in head)
    assert "abs_err_poisson" not in rows(out)[0]


def test_missing_oracle_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "x.cfg", "n = 40\np0 = 0.1\nalpha_law = uniform_real\nalpha_lo = 0.5\n"
                "alpha_hi = 2\nreference = lattice\n")
    assert main(["compare", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 4
    assert "reference = self" in capsys.readouterr().err
    assert not (tmp_path / "x.csv").exists()


def test_rate_study_normal_grids(tmp_path):
    cfg = write(tmp_path, "r.cfg", HOMOGENEOUS + "exact_support = false\n")
    out = tmp_path / "rate.csv"
    assert main(["rate-study", "--config", cfg, "--out", str(out), "--sizes", "100,200,400,800"]) == 0
    table = rows(out)
    assert [int(r["N"]) for r in table] == [100, 200, 400, 800]
    errs = [float(r["max_abs_err"]) for r in table]
    assert all(b <= 1.05 * a for a, b in zip(errs, errs[1:]))
    slope_line = [l for l in comments(out) if l.startswith("# slope:")]
    assert len(slope_line) == 1
    assert float(slope_line[0].split(":")[1]) == pytest.approx(loglog_slope([100, 200, 400, 800], errs))
    assert (tmp_path / "rate.gp").exists()


def test_rate_study_at_rounding_floor_skips_slope(tmp_path):
    cfg = write(tmp_path, "t.cfg", "n = 6\np0 = 0.3\nalpha_law = uniform_integers\nalpha_lo = 1\n"
                "alpha_hi = 3\nstrike_hi = 12\n")
    out = tmp_path / "t.csv"
    assert main(["rate-study", "--config", cfg, "--out", str(out), "--sizes", "64,128,256"]) == 0
    assert all(float(r["max_abs_err"]) <= 1e-12 for r in rows(out))
    assert any("slope: skipped" in l for l in comments(out))


def test_rate_study_needs_three_sizes(tmp_path):
    cfg = write(tmp_path, "h.cfg", HOMOGENEOUS)
    assert main(["rate-study", "--config", cfg, "--out", str(tmp_path / "r.csv"), "--sizes", "100,200"]) == 2


def test_sizes_can_come_from_config(tmp_path):
    cfg = write(tmp_path, "h.cfg", HOMOGENEOUS + "sizes = 50, 100, 200\nexact_support = false\n")
    out = tmp_path / "r.csv"
    assert main(["rate-study", "--config", cfg, "--out", str(out)]) == 0
    assert len(rows(out)) == 3


def test_price_command(tmp_path):
    cfg = write(tmp_path, "p.cfg", HOMOGENEOUS + "strike_lo = 5\nstrike_hi = 15\nstrike_step = 0.5\n")
    out = tmp_path / "p.csv"
    assert main(["price", "--config", cfg, "--out", str(out)]) == 0
    table = rows(out)
    assert len(table) == 21 and list(table[0]) == ["K", "dq_N", "dq_romberg"]


def test_seed_override_changes_scenario(tmp_path):
    text = "n = 20\np0 = 0.2\nsigma = 1.0\nstrike_hi = 10\n"
    cfg = write(tmp_path, "s.cfg", text)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["price", "--config", cfg, "--out", str(a), "--seed", "1"]) == 0
    assert main(["price", "--config", cfg, "--out", str(b), "--seed", "2"]) == 0
    assert a.read_bytes() != b.read_bytes()
    assert "# config: seed = 2" in comments(b)


def test_greeks_command(tmp_path):
    cfg = write(tmp_path, "g.cfg", "n = 12\np0 = 0.2\nalpha_law = uniform_real\nalpha_lo = 0.5\n"
                "alpha_hi = 2\nstrike = 3\n")
    out = tmp_path / "g.csv"
    assert main(["greeks", "--config", cfg, "--out", str(out)]) == 0
    table = rows(out)
    assert [int(r["l"]) for r in table] == list(range(1, 13))
    for r in table:
        assert 0.0 <= float(r["dp"]) <= float(r["alpha_l"]) + 1e-12
        assert 0.0 <= float(r["dalpha"]) <= float(r["p_l"]) + 1e-15


def test_cdo_spread_command(tmp_path):
    cfg = write(tmp_path, "c.cfg", "n_names = 30\nhazard = 0.02\nrho = 0.3\nrecovery = 0.4\n"
                "tranches = 0-0.03, 0.03-0.07, 0.07-1\nmaturity = 5\nrate = 0.03\n"
                "u_nodes = 8\nt_nodes = 5\ngrid_size = 100\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["cdo-spread", "--config", cfg, "--out", str(a)]) == 0
    assert main(["cdo-spread", "--config", cfg, "--out", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()
    table = rows(a)
    assert [r["tranche"] for r in table] == ["0-0.03", "0.03-0.07", "0.07-1"]
    spreads = [float(r["spread"]) for r in table]
    assert spreads[0] > spreads[1] > spreads[2] > 0.0


@pytest.mark.parametrize(
    "text",
    ["n = 10\n", "n = 10\np0 = 2\n", "n = 10\np0 = 0.1\ngrid_size = 0\n",
     "n = 10\np0 = 0.1\nromberg_n1 = 100\nromberg_n2 = 100\n", "n = ten\np0 = 0.1\n",
     "n = 10\np0 = 0.1\nstrike_step = 0\n", "n = 10\np0 = 0.1\nreference = magic\n",
     "command = greeks\nn = 10\np0 = 0.1\n", "garbage line\n"],
)
def test_config_errors_exit_2(tmp_path, text):
    cfg = write(tmp_path, "bad.cfg", text)
    assert main(["compare", "--config", cfg, "--out", str(tmp_path / "o.csv")]) == 2


def test_cdo_config_errors():
    with pytest.raises(ConfigError):
        build_run_config("cdo-spread", {"n_names": "5", "hazard": "0.01", "rho": "0.3"}, "o.csv")
    with pytest.raises(ConfigError):
        build_run_config("cdo-spread", {"n_names": "5", "hazard": "0.01", "rho": "0.3",
                                        "tranches": "0.1"}, "o.csv")


def test_missing_config_file(tmp_path):
    assert main(["price", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path / "o.csv")]) == 2


def test_numerical_failure_exit_3(tmp_path, monkeypatch, capsys):
    import dqwalk.cli as cli
    from dqwalk.errors import PropagationError

    def fail(*args, **kwargs):
        raise PropagationError("value 7.0 lies outside grid range [0.0, 5.0]")

    monkeypatch.setattr(cli, "execute", fail)
    cfg = write(tmp_path, "h.cfg", "n = 10\np0 = 0.2\n")
    assert main(["price", "--config", cfg, "--out", str(tmp_path / "o.csv")]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, "h.cfg", "n = 10\np0 = 0.2\nstrike_hi = 5\n")
    out = tmp_path / "e.csv"
    proc = subprocess.run([sys.executable, "-m", "dqwalk.cli", "price", "--config", cfg, "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert len(rows(out)) == 6
