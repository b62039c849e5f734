import csv
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hermite_boltzmann import cli
from hermite_boltzmann.config import RunConfig, parse_config
from hermite_boltzmann.errors import ConfigError
from hermite_boltzmann.ipl_kernel import bgk_tau


@pytest.fixture
def cache(tmp_path, monkeypatch):
    d = tmp_path / "cache"
    monkeypatch.setenv("HERMITE_BOLTZMANN_CACHE", str(d))
    monkeypatch.chdir(tmp_path)
    return d


def read_csv(path):
    rows = list(csv.reader(open(path)))
    return rows[0], np.array(rows[1:], dtype=float)


# -- configuration -------------------------------------------------------

def test_config_parse_and_comments():
    cfg = parse_config("# experiment\neta = 10   # hard\nM=12\nM0 = 4\nmodel = bgk\n")
    assert (cfg.eta, cfg.M, cfg.M0, cfg.model) == (10.0, 12, 4, "bgk")


@given(st.floats(3.01, 50.0), st.integers(2, 8), st.integers(0, 8),
       st.sampled_from(["quadratic", "hybrid", "bgk"]),
       st.sampled_from(["bkw", "bigaussian", "discontinuous"]),
       st.floats(1e-4, 0.5), st.floats(0.0, 100.0))
def test_config_round_trip(eta, M0, extra, model, experiment, dt, t_end):
    cfg = RunConfig(eta=eta, M=M0 + extra, M0=M0, model=model, experiment=experiment,
                    dt=dt, t_end=t_end, cache_dir="c")
    assert parse_config(cfg.to_text()) == cfg


@pytest.mark.parametrize("text", ["eta = 2", "M = 3\nM0 = 5", "dt = 0", "model = exact",
                                  "colour = red", "M = three", "eta"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_flags_override_file(tmp_path, cache):
    p = tmp_path / "run.cfg"
    p.write_text("eta = 10\nM0 = 4\nM = 6\n")
    args = cli.build_parser().parse_args(["info", "--config", str(p), "--M0", "5"])
    cfg = cli._config(args)
    assert (cfg.eta, cfg.M0, cfg.M) == (10.0, 5, 6)


# -- verbs ---------------------------------------------------------------

def test_assemble_then_cache_hit(cache, capsys, caplog):
    assert cli.main(["assemble", "--eta", "5", "--M0", "4"]) == 0
    out = capsys.readouterr().out
    assert "entries:" in out and f"{8 * 35 ** 3} bytes" in out
    f = cache / "A_eta5_M4.bin"
    stamp = f.stat().st_mtime_ns
    with caplog.at_level("INFO", logger="hermite_boltzmann"):
        assert cli.main(["-v", "assemble", "--eta", "5", "--M0", "4"]) == 0
    assert "cache hit" in capsys.readouterr().out
    assert any("cache hit" in r.getMessage() for r in caplog.records)
    assert f.stat().st_mtime_ns == stamp


def test_memory_refusal(cache, capsys):
    assert cli.main(["assemble", "--M0", "20"]) == 4
    assert "41.38" in capsys.readouterr().err


def test_run_requires_cache(cache, capsys):
    assert cli.main(["run", "--M", "6", "--M0", "4"]) == 3
    assert "assemble" in capsys.readouterr().err


def test_run_bkw(cache, capsys, tmp_path):
    assert cli.main(["assemble", "--M0", "5"]) == 0
    code = cli.main(["run", "--M", "10", "--M0", "5", "--t-end", "0.6",
                     "--marginal-g", "g.csv", "--marginal-h", "h.csv", "--single-thread"])
    assert code == 0
    out = capsys.readouterr().out
    dev = float(out.split("max deviation from BKW (f400, f220):")[1].split()[0])
    assert dev < 1e-9
    header, rows = read_csv(tmp_path / "trajectory.csv")
    assert header[0] == "t" and header[-2:] == ["f400", "f220"]
    assert np.allclose(rows[:, 0], np.arange(61) * 0.01)
    gh, g = read_csv(tmp_path / "g.csv")
    assert gh == ["t", "v1", "g"]
    assert sorted(set(g[:, 0])) == pytest.approx([0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6])


def test_run_deterministic(cache, tmp_path):
    cli.main(["assemble", "--eta", "10", "--M0", "4"])
    base = ["run", "--eta", "10", "--M", "6", "--M0", "4", "--experiment", "bigaussian",
            "--t-end", "0.2", "--single-thread"]
    cli.main(base + ["--output", "a.csv"])
    cli.main(base + ["--output", "b.csv"])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_run_bgk_closed_form(cache, tmp_path):
    assert cli.main(["run", "--eta", "10", "--M", "6", "--M0", "4", "--model", "bgk",
                     "--experiment", "bigaussian", "--t-end", "1"]) == 0
    header, rows = read_csv(tmp_path / "trajectory.csv")
    tau = bgk_tau(10.0)
    s11 = rows[:, header.index("sigma11")]
    assert np.allclose(s11, s11[0] * np.exp(-rows[:, 0] / tau), rtol=1e-8)


def test_run_discontinuous_scaled_time(cache, capsys, tmp_path):
    cli.main(["assemble", "--eta", "3.1", "--M0", "3"])
    assert cli.main(["run", "--eta", "3.1", "--M", "6", "--M0", "3", "--experiment",
                     "discontinuous", "--t-end", "0.1"]) == 0
    out = capsys.readouterr().out
    assert float(out.split("tau_s:")[1].split()[0]) == pytest.approx(1.36017, abs=1e-4)
    header, rows = read_csv(tmp_path / "trajectory.csv")
    assert header[-1] == "t_scaled"
    assert rows[-1, -1] == pytest.approx(0.1 / 1.36017, rel=1e-4)


def test_run_custom(cache, tmp_path):
    from hermite_boltzmann.solver import project_bigaussian
    np.savetxt(tmp_path / "c.txt", project_bigaussian(4).coeffs)
    assert cli.main(["run", "--model", "bgk", "--experiment", "custom", "--coeff-file",
                     "c.txt", "--M", "4", "--M0", "4", "--t-end", "0.02"]) == 0
    assert cli.main(["run", "--model", "bgk", "--experiment", "custom", "--M", "4",
                     "--M0", "4"]) == 2


def test_run_quadratic_model(cache, tmp_path):
    cli.main(["assemble", "--M0", "4"])
    assert cli.main(["run", "--model", "quadratic", "--M", "8", "--M0", "4",
                     "--t-end", "0.05"]) == 0


def test_info(cache, capsys):
    assert cli.main(["info", "--M", "20", "--M0", "10"]) == 0
    out = capsys.readouterr().out
    assert "N_M (M=20): 1771" in out
    assert "(0.1743 GiB)" in out
    assert "tau_s: 1\n" in out
    assert "unavailable" in out
    cli.main(["assemble", "--M0", "4"])
    capsys.readouterr()
    cli.main(["info", "--M0", "4"])
    nu = float(capsys.readouterr().out.split("nu_M0:")[1].split()[0])
    assert nu > 0


def test_cache_ls_rm(cache, capsys):
    cli.main(["assemble", "--M0", "3"])
    cli.main(["assemble", "--eta", "7", "--M0", "3"])
    capsys.readouterr()
    cli.main(["cache", "ls"])
    assert capsys.readouterr().out.count(".bin") == 2
    assert cli.main(["cache", "rm", "--eta", "7", "--M0", "3"]) == 0
    assert cli.main(["cache", "rm"]) == 2
    cli.main(["cache", "rm", "--all"])
    capsys.readouterr()
    cli.main(["cache", "ls"])
    assert capsys.readouterr().out == ""


def test_stale_cache_exit_code(cache, capsys):
    cli.main(["assemble", "--M0", "3"])
    (cache / "A_eta5_M3.bin").rename(cache / "A_eta7_M3.bin")
    assert cli.main(["run", "--eta", "7", "--M0", "3", "--M", "3",
                     "--experiment", "bigaussian"]) == 3
    assert "re-run" in capsys.readouterr().err


def test_bad_step_exit_code(cache):
    assert cli.main(["run", "--model", "bgk", "--experiment", "bigaussian", "--eta", "5",
                     "--dt", "1", "--t-end", "0.5"]) == 2  # t_end not a multiple of dt


def test_numerical_failure_exit_code(cache, capsys, tmp_path):
    cli.main(["assemble", "--M0", "3"])
    c = np.full(20, 1e150)
    np.savetxt(tmp_path / "huge.txt", c)
    with np.errstate(all="ignore"):
        code = cli.main(["run", "--model", "quadratic", "--experiment", "custom",
                         "--coeff-file", "huge.txt", "--M", "3", "--M0", "3", "--t-end", "1"])
    assert code == 5
    assert "non-finite" in capsys.readouterr().err


def test_console_script(cache):
    res = subprocess.run([sys.executable, "-m", "hermite_boltzmann.cli", "info", "--M0", "5"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "N_M0 (M0=5): 56" in res.stdout
