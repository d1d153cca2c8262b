"""Experiment presets: validation, config round trips, tiny end-to-end runs."""

import math

import numpy as np
import pytest

from dissipwave import (ExperimentPreset, builtin_presets, gaussian_bump,
                        make_grid, preset_from_config, preset_to_config,
                        run_bands, run_experiment, run_linear, run_semilinear,
                        write_snapshot)
from dissipwave.presets import HEAT_GAP_LABEL, _rounded_times, profile_label


def _tiny(**over):
    base = dict(name="tiny", kind="semilinear", n_dims=1, grid_points=64,
                half_width=16.0, amplitude=0.1, theta=3, dt=0.05, t_final=1.0,
                snapshot_times=(0.5, 1.0), fit_window=(0.5, 1.0),
                reports=((math.inf, 0, 0), (2.0, 0, 0)))
    base.update(over)
    return ExperimentPreset(**base)


def test_builtin_presets_validate_and_names_match():
    presets = builtin_presets()
    assert set(presets) == {"lin1d", "lin2d", "semi1d-theta3",
                            "semi2d-theta2", "bands1d"}
    for name, p in presets.items():
        assert p.name == name
        p.grid  # construction already validated; touch the grid property too


def test_config_round_trip_all_builtins():
    for p in builtin_presets().values():
        cfg = preset_to_config(p)
        assert all(isinstance(k, str) and isinstance(v, str)
                   for k, v in cfg.items())
        assert preset_from_config(cfg) == p


def test_config_unknown_key_rejected():
    cfg = preset_to_config(_tiny())
    cfg["cleverness"] = "11"
    with pytest.raises(ValueError, match="unknown config key"):
        preset_from_config(cfg)


def test_config_missing_required_key():
    cfg = preset_to_config(_tiny())
    del cfg["grid_points"]
    with pytest.raises(ValueError, match="missing required"):
        preset_from_config(cfg)


def test_config_bad_value_names_the_key():
    cfg = preset_to_config(_tiny())
    cfg["dt"] = "fast"
    with pytest.raises(ValueError, match="config key dt"):
        preset_from_config(cfg)


def test_gaussian_bump_peak_and_width_guard(grid1d):
    f = gaussian_bump(grid1d, 2.5, 1.0)
    assert float(np.max(f.values)) == pytest.approx(2.5, rel=1e-12)
    assert float(f.values[0]) < 1e-8  # far tail
    with pytest.raises(ValueError, match="width"):
        gaussian_bump(grid1d, 1.0, 0.0)


def test_rounded_times_are_dt_multiples():
    ts = _rounded_times(1.0, 10.0, 7, 0.05, include=(2.0,))
    assert 2.0 in ts
    assert ts == tuple(sorted(set(ts)))
    for t in ts:
        assert abs(round(t / 0.05) * 0.05 - t) < 1e-9


def test_theta_floor_depends_on_dimension():
    with pytest.raises(ValueError, match="theta"):
        _tiny(theta=2)
    # two dimensions admit theta = 2
    _tiny(n_dims=2, grid_points=32, theta=2)


def test_domain_margin_guard():
    with pytest.raises(ValueError, match="domain too small"):
        _tiny(t_final=15.0, dt=0.5, snapshot_times=(), fit_window=(1.0, 15.0))


def test_snapshot_times_must_fit_horizon():
    with pytest.raises(ValueError, match="snapshot"):
        _tiny(snapshot_times=(0.5, 2.0))


def test_bands_preset_needs_time_lists():
    with pytest.raises(ValueError, match="band"):
        ExperimentPreset(name="b", kind="bands", n_dims=1, grid_points=64,
                         half_width=16.0)


def test_kind_dispatch_guards():
    p = _tiny()
    with pytest.raises(ValueError, match="not linear"):
        run_linear(p)
    with pytest.raises(ValueError, match="not a bands"):
        run_bands(p)
    lin = _tiny(kind="linear", theta=1)
    with pytest.raises(ValueError, match="not semilinear"):
        run_semilinear(lin)


def test_semilinear_tiny_run_series_shapes():
    p = _tiny()
    run = run_semilinear(p)
    assert run.times.shape == (2,)
    assert run.times[0] == pytest.approx(0.5, abs=1e-9)
    labels = {"linf:u", "l2:u", profile_label(p.profile_r)}
    assert set(run.series) == labels
    for vals in run.series.values():
        assert vals.shape == (2,)
        assert np.all(vals > 0)
    assert run.e0 > 0
    # ledger saw every step: 20 steps plus the initial record
    assert len(run.ledger.times) == 21
    assert run.ledger.balance_residual() < 1e-3 * run.ledger.energy[0]


def test_linear_run_includes_heat_gap():
    p = _tiny(kind="linear", theta=1, reports=((math.inf, 0, 0),))
    run = run_linear(p)
    assert HEAT_GAP_LABEL in run.series
    assert run.series[HEAT_GAP_LABEL].shape == (2,)
    assert set(run.series) == {"linf:u", HEAT_GAP_LABEL}


def test_run_experiment_dispatch_matches_kind():
    p = _tiny()
    run = run_experiment(p)
    assert run.preset is p
    lin = _tiny(kind="linear", theta=1)
    assert HEAT_GAP_LABEL in run_experiment(lin).series


def test_snapshot_sink_receives_fields():
    p = _tiny()
    seen = []
    run_semilinear(p, snapshot_sink=lambda t, u, v: seen.append((t, u, v)))
    assert len(seen) == 2
    t0, u0, v0 = seen[0]
    assert t0 == pytest.approx(0.5, abs=1e-9)
    assert u0.grid == p.grid and v0.grid == p.grid


def test_initial_data_from_snapshot_file(tmp_path):
    p = _tiny()
    grid = p.grid
    bump = gaussian_bump(grid, 0.07, 2.0)
    path = tmp_path / "u0.dwf"
    write_snapshot(path, bump, 0.0)
    q = _tiny(u0_file=str(path))
    u0, u1 = q.initial_data()
    assert np.array_equal(u0.values, bump.values)
    assert np.all(u1.values == 0.0)


def test_initial_data_file_grid_mismatch(tmp_path):
    other = make_grid(1, 128, 16.0)
    path = tmp_path / "u0.dwf"
    write_snapshot(path, gaussian_bump(other, 0.1, 1.0), 0.0)
    with pytest.raises(ValueError, match="different grid"):
        _tiny(u0_file=str(path)).initial_data()


def test_tiny_bands_run_shapes():
    p = ExperimentPreset(name="b", kind="bands", n_dims=1, grid_points=512,
                         half_width=64.0, eps=0.45, outer_radius=2.0,
                         band1_times=(2.0, 4.0, 8.0, 12.0, 16.0),
                         band2_times=(1.0, 2.0, 3.0, 4.0, 5.0))
    run = run_bands(p)
    assert run.band1_sup.shape == (5,)
    assert run.band2_sup.shape == (5,)
    fits = run.fits()
    assert set(fits) == {"linf:band1", "linf:dx_band1", "linf:band2"}
    assert all(f.n_points == 5 for f in fits.values())
    # the middle band decays monotonically from the start
    assert np.all(np.diff(run.band2_sup) < 0)


def test_report_runs_on_tiny_series():
    # five snapshots, the least the fitter accepts; the window edges sit
    # clear of the snapshots because stepped times carry roundoff
    p = _tiny(snapshot_times=(0.2, 0.4, 0.6, 0.8, 1.0), fit_window=(0.1, 1.05))
    report = run_semilinear(p).report()
    assert len(report.rows) == 2  # one row per requested norm
    assert report.window == (0.1, 1.05)
    names = {row.quantity for row in report.rows}
    assert names == {"linf:u", "l2:u"}
