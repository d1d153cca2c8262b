"""CLI plumbing: config parsing, run directories, exit codes, CSV outputs."""

import math
import subprocess
import sys

import numpy as np
import pytest

from dissipwave import ExperimentPreset, preset_to_config, read_snapshot
from dissipwave.cli import (ConfigError, main, make_run_dir,
                            parse_config_text, resolve_preset)


def _tiny_preset(**over):
    base = dict(name="cli-tiny", kind="semilinear", n_dims=1, grid_points=64,
                half_width=16.0, amplitude=0.1, theta=3, dt=0.05, t_final=1.0,
                snapshot_times=(0.5, 1.0), fit_window=(0.4, 1.05), reports=())
    base.update(over)
    return ExperimentPreset(**base)


def _write_config(tmp_path, preset, name="run.cfg"):
    text = "\n".join(f"{k} = {v}" for k, v in preset_to_config(preset).items())
    path = tmp_path / name
    path.write_text(text + "\n")
    return str(path)


def _only_run_dir(out_root, name):
    dirs = sorted((out_root / name).iterdir())
    assert len(dirs) == 1
    return dirs[0]


# ---------------------------------------------------------------------------
# config parsing


def test_parse_config_text_comments_and_blanks():
    cfg = parse_config_text(
        "# header\n\nname = x  # trailing note\n  kind =  linear\n")
    assert cfg == {"name": "x", "kind": "linear"}


def test_parse_config_text_duplicate_key_line_number():
    with pytest.raises(ConfigError, match=r"stuff:3: duplicate key 'a'"):
        parse_config_text("a = 1\nb = 2\na = 3\n", source="stuff")


def test_parse_config_text_missing_equals():
    with pytest.raises(ConfigError, match=r"config:2: expected key=value"):
        parse_config_text("a = 1\nbroken line\n")


def test_parse_config_text_empty_key():
    with pytest.raises(ConfigError, match="empty key"):
        parse_config_text("= 5\n")


def test_resolve_preset_builtin_name():
    p = resolve_preset("lin1d", [])
    assert p.name == "lin1d" and p.kind == "linear"


def test_resolve_preset_unknown_name_lists_builtins():
    with pytest.raises(ConfigError, match="bands1d"):
        resolve_preset("no-such-preset", [])
    with pytest.raises(ConfigError, match="required"):
        resolve_preset(None, [])


def test_resolve_preset_file_and_overrides(tmp_path):
    path = _write_config(tmp_path, _tiny_preset())
    p = resolve_preset(path, ["amplitude=0.2", "name=renamed"])
    assert p.amplitude == 0.2
    assert p.name == "renamed"
    with pytest.raises(ConfigError, match="--set expects"):
        resolve_preset(path, ["amplitude"])


def test_resolve_preset_bad_value_becomes_config_error(tmp_path):
    path = _write_config(tmp_path, _tiny_preset())
    with pytest.raises(ConfigError, match="config key theta"):
        resolve_preset(path, ["theta=soft"])


def test_make_run_dir_env_and_collisions(tmp_path, monkeypatch):
    monkeypatch.setenv("DISSIPWAVE_OUT", str(tmp_path / "envroot"))
    d1 = make_run_dir(None, "demo")
    assert d1.parent.parent == tmp_path / "envroot" / "demo" or \
        d1.parent == tmp_path / "envroot" / "demo"
    # same second: the second call picks a -k suffix instead of failing
    d2 = make_run_dir(None, "demo")
    assert d2 != d1 and d2.exists()
    explicit = make_run_dir(str(tmp_path / "explicit"), "demo")
    assert str(explicit).startswith(str(tmp_path / "explicit"))


# ---------------------------------------------------------------------------
# simulate


def test_simulate_vacuous_reports_pass(tmp_path, capsys):
    path = _write_config(tmp_path, _tiny_preset())
    code = main(["simulate", "--config", path, "--out", str(tmp_path / "o")])
    assert code == 0
    run_dir = _only_run_dir(tmp_path / "o", "cli-tiny")
    assert (run_dir / "series.csv").exists()
    assert (run_dir / "report.csv").exists()
    assert (run_dir / "energy.csv").exists()
    assert "verdict: pass" in (run_dir / "manifest.txt").read_text()


def test_simulate_zero_amplitude_still_passes(tmp_path, capsys):
    p = _tiny_preset(amplitude=0.0, reports=((math.inf, 0, 0),))
    path = _write_config(tmp_path, p)
    code = main(["simulate", "--config", path, "--out", str(tmp_path / "o")])
    assert code == 0
    assert "decay fit skipped" in capsys.readouterr().out


def test_simulate_unknown_key_exits_2(tmp_path, capsys):
    path = _write_config(tmp_path, _tiny_preset())
    code = main(["simulate", "--config", path, "--set", "typo_key=1",
                 "--out", str(tmp_path / "o")])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_simulate_unknown_preset_name_exits_2(tmp_path, capsys):
    code = main(["simulate", "--config", "missing-preset",
                 "--out", str(tmp_path / "o")])
    assert code == 2


def test_simulate_instability_exits_3(tmp_path, capsys):
    path = _write_config(tmp_path, _tiny_preset())
    code = main(["simulate", "--config", path, "--set", "delta_bar=0.001",
                 "--out", str(tmp_path / "o")])
    assert code == 3
    assert "run aborted" in capsys.readouterr().err
    run_dir = _only_run_dir(tmp_path / "o", "cli-tiny")
    assert "verdict: unstable" in (run_dir / "manifest.txt").read_text()


def test_simulate_writes_snapshots(tmp_path, capsys):
    path = _write_config(tmp_path, _tiny_preset())
    code = main(["simulate", "--config", path, "--snapshots",
                 "--out", str(tmp_path / "o")])
    assert code == 0
    run_dir = _only_run_dir(tmp_path / "o", "cli-tiny")
    snaps = sorted((run_dir / "snapshots").glob("u_t*.dwf"))
    assert len(snaps) == 2
    field, t = read_snapshot(snaps[0])
    assert t == pytest.approx(0.5, abs=1e-9)
    assert field.grid.points_per_dim == 64


def test_simulate_series_bytes_deterministic(tmp_path, capsys):
    path = _write_config(tmp_path, _tiny_preset())
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "b")]) == 0
    sa = _only_run_dir(tmp_path / "a", "cli-tiny") / "series.csv"
    sb = _only_run_dir(tmp_path / "b", "cli-tiny") / "series.csv"
    assert sa.read_bytes() == sb.read_bytes()


def test_manifest_is_relaunchable(tmp_path, capsys):
    p = _tiny_preset(reports=((math.inf, 0, 0), (2.0, 1, 1)))
    path = _write_config(tmp_path, p)
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "o")]) in (0, 1)
    manifest = _only_run_dir(tmp_path / "o", "cli-tiny") / "manifest.txt"
    relaunched = resolve_preset(str(manifest), [])
    assert relaunched == p


# ---------------------------------------------------------------------------
# decay-report


def _write_series(path, times, series):
    lines = ["t,quantity,value"]
    for label, vals in series.items():
        lines += [f"{float(t)!r},{label},{float(v)!r}"
                  for t, v in zip(times, vals)]
    path.write_text("\n".join(lines) + "\n")


def test_decay_report_refit_passes_on_exact_law(tmp_path, capsys):
    p = _tiny_preset(kind="linear", theta=1, name="lin-tiny",
                     reports=((math.inf, 0, 0),), fit_window=(1.0, 12.0))
    path = _write_config(tmp_path, p)
    t = np.arange(1.0, 13.0)
    run_dir = tmp_path / "prior"
    run_dir.mkdir()
    _write_series(run_dir / "series.csv", t, {"linf:u": (1 + t) ** -0.5})
    code = main(["decay-report", "--config", path, "--run", str(run_dir),
                 "--out", str(tmp_path / "o")])
    assert code == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "slope -0.5000" in out


def test_decay_report_refit_fails_on_wrong_law(tmp_path, capsys):
    p = _tiny_preset(kind="linear", theta=1, name="lin-tiny",
                     reports=((math.inf, 0, 0),), fit_window=(1.0, 12.0))
    path = _write_config(tmp_path, p)
    t = np.arange(1.0, 13.0)
    run_dir = tmp_path / "prior"
    run_dir.mkdir()
    _write_series(run_dir / "series.csv", t, {"linf:u": (1 + t) ** -2.0})
    code = main(["decay-report", "--config", path, "--run", str(run_dir),
                 "--out", str(tmp_path / "o")])
    assert code == 1
    assert "FAIL" in capsys.readouterr().out


def test_decay_report_missing_series_exits_2(tmp_path, capsys):
    p = _tiny_preset(kind="linear", theta=1, name="lin-tiny",
                     reports=((math.inf, 0, 0),), fit_window=(1.0, 12.0))
    path = _write_config(tmp_path, p)
    run_dir = tmp_path / "prior"
    run_dir.mkdir()
    _write_series(run_dir / "series.csv", [1.0, 2.0], {"l2:u": [1.0, 0.5]})
    code = main(["decay-report", "--config", path, "--run", str(run_dir),
                 "--out", str(tmp_path / "o")])
    assert code == 2
    assert "lacks series" in capsys.readouterr().err


def test_decay_report_reuses_simulate_output(tmp_path, capsys):
    path = _write_config(tmp_path, _tiny_preset())
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "o")]) == 0
    prior = _only_run_dir(tmp_path / "o", "cli-tiny")
    code = main(["decay-report", "--config", path, "--run", str(prior),
                 "--out", str(tmp_path / "r")])
    assert code == 0  # no requested norms: vacuously green
    assert (_only_run_dir(tmp_path / "r", "cli-tiny") / "report.csv").exists()


def test_decay_report_rejects_bands(tmp_path, capsys):
    code = main(["decay-report", "--config", "bands1d",
                 "--out", str(tmp_path / "o")])
    assert code == 2
    assert "linear/semilinear" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# energy-audit


def test_energy_audit_fresh_then_reuse(tmp_path, capsys):
    path = _write_config(tmp_path, _tiny_preset())
    code = main(["energy-audit", "--config", path, "--out", str(tmp_path / "o"),
                 "--mono-tol", "1e-6", "--balance-tol", "1e-3"])
    assert code == 0
    fresh = _only_run_dir(tmp_path / "o", "cli-tiny")
    assert (fresh / "energy.csv").exists()
    out = capsys.readouterr().out
    assert "balance residual" in out and "PASS" in out

    code = main(["energy-audit", "--config", path, "--run", str(fresh),
                 "--out", str(tmp_path / "r"),
                 "--mono-tol", "1e-6", "--balance-tol", "1e-3"])
    assert code == 0


def test_energy_audit_requires_semilinear(tmp_path, capsys):
    code = main(["energy-audit", "--config", "lin1d",
                 "--out", str(tmp_path / "o")])
    assert code == 2
    assert "semilinear" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# verify-symbols / green-bands


def test_verify_symbols_passes(tmp_path, capsys):
    code = main(["verify-symbols", "--out", str(tmp_path / "o")])
    assert code == 0
    run_dir = _only_run_dir(tmp_path / "o", "verify-symbols")
    text = (run_dir / "symbols.csv").read_text()
    assert text.startswith("t,quantity,value\n")
    assert "abs_err_g:xi_sq=" in text and "abs_err_gt:xi_sq=" in text


def test_green_bands_small_grid(tmp_path, capsys):
    p = ExperimentPreset(name="bands-tiny", kind="bands", n_dims=1,
                         grid_points=512, half_width=64.0, eps=0.45,
                         outer_radius=2.0,
                         band1_times=(2.0, 4.0, 8.0, 12.0, 16.0),
                         band2_times=(1.0, 2.0, 3.0, 4.0, 5.0))
    path = _write_config(tmp_path, p)
    code = main(["green-bands", "--config", path, "--out", str(tmp_path / "o")])
    assert code in (0, 1)  # plumbing test; slope quality needs the full preset
    run_dir = _only_run_dir(tmp_path / "o", "bands-tiny")
    assert (run_dir / "series.csv").exists()
    assert (run_dir / "report.csv").exists()
    assert "linf:band2" in (run_dir / "series.csv").read_text()


def test_green_bands_rejects_non_bands_config(tmp_path, capsys):
    path = _write_config(tmp_path, _tiny_preset())
    code = main(["green-bands", "--config", path, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "bands preset" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# module entry point


def test_module_entry_point_subprocess(tmp_path):
    cfg = _write_config(tmp_path, _tiny_preset())
    proc = subprocess.run(
        [sys.executable, "-m", "dissipwave", "simulate", "--config", cfg,
         "--out", str(tmp_path / "o")],
        capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert "wrote" in proc.stdout
