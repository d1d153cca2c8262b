"""Experiment presets and runners.

A preset bundles a grid, Gaussian initial data, stepping parameters, the
snapshot schedule, and the decay quantities to record.  Runners turn a
preset into time series; the CLI and the acceptance suite both consume
them.  Presets round-trip losslessly through the flat key=value config
format, so a run's manifest can be fed back in as a config file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import analysis, oracle, solver, symbols
from .analysis import EnergyLedger, quantity_label
from .grid import (Field, Grid, SpectralField, derivative_multiplier,
                   forward_transform, inverse_transform, make_grid)

KINDS = ("linear", "semilinear", "bands")

# Domain sizing heuristic: the box half width should cover the influence
# cone with margin, half_width >= 1.6 * t_final + data support radius.
DOMAIN_MARGIN = 1.6

HEAT_GAP_LABEL = "linf:heat_gap"


def gaussian_bump(grid: Grid, amplitude: float, width: float) -> Field:
    """Radial Gaussian amplitude * exp(-|x|^2 / (2 width^2)) centered at 0."""
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    return Field(grid, amplitude * np.exp(-0.5 * grid.radius_sq / (width * width)))


def profile_label(r: float) -> str:
    return f"profile_r{r:g}:u"


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    kind: str
    n_dims: int
    grid_points: int
    half_width: float
    amplitude: float = 1.0
    width: float = 1.0
    u1_amplitude: float = 0.0
    u0_file: str = ""
    u1_file: str = ""
    theta: int = 3
    dt: float = 0.02
    t_final: float = 100.0
    integrator: str = "exponential_duhamel"
    dealias: bool | None = None
    delta_bar: float = 0.5
    snapshot_times: tuple[float, ...] = ()
    fit_window: tuple[float, float] = (20.0, 100.0)
    reports: tuple[tuple[float, int, int], ...] = ()
    profile_r: float = 2.0
    sobolev_index: int | None = None
    eps: float = 0.125
    outer_radius: float = 2.0
    band1_times: tuple[float, ...] = ()
    band2_times: tuple[float, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        self.grid  # validates dimension, point count, half width
        if self.kind == "semilinear":
            min_theta = 2 + math.floor(1.0 / self.n_dims)
            if self.theta < min_theta:
                raise ValueError(
                    f"semilinear decay presets need theta >= {min_theta} "
                    f"in {self.n_dims}d, got {self.theta}")
        if self.kind in ("linear", "semilinear"):
            if self.t_final * DOMAIN_MARGIN > self.half_width + 1e-9:
                raise ValueError(
                    f"domain too small: need half_width >= {DOMAIN_MARGIN} * "
                    f"t_final = {DOMAIN_MARGIN * self.t_final}, "
                    f"got {self.half_width}")
            if any(t < 0 or t > self.t_final + 1e-9 for t in self.snapshot_times):
                raise ValueError("snapshot times must lie in [0, t_final]")
        if self.kind == "bands":
            symbols.CutoffSpec(self.eps, self.outer_radius)  # validates
            if not self.band1_times or not self.band2_times:
                raise ValueError("bands presets need band1_times and band2_times")

    @property
    def grid(self) -> Grid:
        return make_grid(self.n_dims, self.grid_points, self.half_width)

    @property
    def sobolev_s(self) -> int:
        return self.n_dims + 1 if self.sobolev_index is None else self.sobolev_index

    @property
    def cutoff_spec(self) -> symbols.CutoffSpec:
        return symbols.CutoffSpec(self.eps, self.outer_radius)

    def initial_data(self) -> tuple[Field, Field]:
        grid = self.grid
        u0 = (self._load_field(self.u0_file) if self.u0_file
              else gaussian_bump(grid, self.amplitude, self.width))
        u1 = (self._load_field(self.u1_file) if self.u1_file
              else gaussian_bump(grid, self.u1_amplitude, self.width))
        return u0, u1

    def _load_field(self, path: str) -> Field:
        from .grid import read_snapshot
        f, _t = read_snapshot(path)
        if f.grid != self.grid:
            raise ValueError(
                f"initial data file {path} was written on a different grid")
        return f

    def solver_config(self) -> solver.SolverConfig:
        return solver.SolverConfig(
            theta=self.theta, dt=self.dt, t_final=self.t_final,
            integrator=self.integrator, dealias=self.dealias,
            snapshot_times=self.snapshot_times, delta_bar=self.delta_bar)


@dataclass
class ExperimentRun:
    """Collected time series of one linear or semilinear run."""

    preset: ExperimentPreset
    times: np.ndarray
    series: dict
    ledger: EnergyLedger | None = None
    e0: float = 0.0

    def rows(self):
        for name, vals in self.series.items():
            for t, v in zip(self.times, vals):
                yield float(t), name, float(v)

    def report(self) -> analysis.DecayReport:
        kind = "linear" if self.preset.kind == "linear" else "semilinear"
        return analysis.decay_report(
            self.times, self.series, self.preset.reports, kind,
            self.preset.n_dims, self.preset.fit_window)


@dataclass
class BandRun:
    """Sup-norm series of the low and middle band kernels."""

    preset: ExperimentPreset
    band1_times: np.ndarray
    band1_sup: np.ndarray
    band1_grad_sup: np.ndarray
    band2_times: np.ndarray
    band2_sup: np.ndarray

    def rows(self):
        for t, v in zip(self.band1_times, self.band1_sup):
            yield float(t), "linf:band1", float(v)
        for t, v in zip(self.band1_times, self.band1_grad_sup):
            yield float(t), "linf:dx_band1", float(v)
        for t, v in zip(self.band2_times, self.band2_sup):
            yield float(t), "linf:band2", float(v)

    def fits(self):
        """Fits of the three band series.

        Band 1 sup norms follow power laws in 1 + t; the middle band decays
        exponentially, so its log is fit against t directly.
        """
        w1 = (self.band1_times[0], self.band1_times[-1])
        w2 = (self.band2_times[0], self.band2_times[-1])
        return {
            "linf:band1": analysis.fit_decay_rate(self.band1_times, self.band1_sup, w1),
            "linf:dx_band1": analysis.fit_decay_rate(self.band1_times, self.band1_grad_sup, w1),
            "linf:band2": analysis.fit_exponential_rate(self.band2_times, self.band2_sup, w2),
        }


def _norm_of(state: solver.SolverState, p, alpha_order: int, h: int) -> float:
    """Requested norm of a derivative of the state.

    Spatial derivatives are taken along the first axis; mixed multi-index
    directions are not needed by the built-in presets.
    """
    grid = state.grid
    if h == 0:
        coeffs = state.u_hat
    elif h == 1:
        coeffs = state.v_hat
    else:
        coeffs = forward_transform(solver.time_derivative(state, h)).coeffs
    if alpha_order:
        alpha = (alpha_order,) + (0,) * (grid.n_dims - 1)
        coeffs = coeffs * derivative_multiplier(grid, alpha)
    return analysis.lp_norm(inverse_transform(SpectralField(grid, coeffs)), p)


def _record_state(preset: ExperimentPreset, state: solver.SolverState,
                  times: list, series: dict) -> None:
    times.append(state.time)
    for p, a, h in preset.reports:
        series[quantity_label(p, a, h)].append(_norm_of(state, p, a, h))
    if preset.kind == "semilinear":
        series[profile_label(preset.profile_r)].append(
            analysis.weighted_profile(solver.u_field(state), state.time,
                                      preset.profile_r))


def _empty_series(preset: ExperimentPreset) -> dict:
    series: dict = {quantity_label(p, a, h): [] for p, a, h in preset.reports}
    if preset.kind == "semilinear":
        series[profile_label(preset.profile_r)] = []
    if preset.kind == "linear":
        series[HEAT_GAP_LABEL] = []
    return series


def run_linear(preset: ExperimentPreset, snapshot_sink=None) -> ExperimentRun:
    """Evaluate the exact linear flow at the snapshot times.

    Also records the sup distance to the heat evolution of u0 + u1, the
    series behind the diffusion-phenomenon check.
    """
    if preset.kind != "linear":
        raise ValueError(f"preset {preset.name!r} is not linear")
    grid = preset.grid
    u0, u1 = preset.initial_data()
    heat_data = Field(grid, u0.values + u1.values)
    times: list = []
    series = _empty_series(preset)
    for t in preset.snapshot_times:
        u, v = solver.linear_solution(u0, u1, t)
        state = solver.SolverState(grid=grid, u_hat=forward_transform(u).coeffs,
                                   v_hat=forward_transform(v).coeffs,
                                   time=float(t), theta=preset.theta)
        _record_state(preset, state, times, series)
        gap = u.values - oracle.heat_reference(heat_data, t).values
        series[HEAT_GAP_LABEL].append(float(np.max(np.abs(gap))))
        if snapshot_sink is not None:
            snapshot_sink(float(t), u, v)
    run = ExperimentRun(preset=preset,
                        times=np.asarray(times),
                        series={k: np.asarray(v) for k, v in series.items()},
                        e0=analysis.e0_norm(u0, u1, preset.sobolev_s))
    return run


def run_semilinear(preset: ExperimentPreset, snapshot_sink=None,
                   with_ledger: bool = True) -> ExperimentRun:
    """March the semilinear preset, recording norms at the snapshot times."""
    if preset.kind != "semilinear":
        raise ValueError(f"preset {preset.name!r} is not semilinear")
    u0, u1 = preset.initial_data()
    s = preset.sobolev_s
    e0 = analysis.e0_norm(u0, u1, s)
    ledger = EnergyLedger(sobolev_index=s, e0=e0) if with_ledger else None
    times: list = []
    series = _empty_series(preset)

    def observer(state: solver.SolverState) -> None:
        _record_state(preset, state, times, series)
        if snapshot_sink is not None:
            snapshot_sink(state.time, solver.u_field(state), solver.v_field(state))

    solver.solve(u0, u1, preset.solver_config(), observers=(observer,),
                 ledger=ledger)
    return ExperimentRun(preset=preset,
                         times=np.asarray(times),
                         series={k: np.asarray(v) for k, v in series.items()},
                         ledger=ledger, e0=e0)


def run_bands(preset: ExperimentPreset) -> BandRun:
    """Sample sup norms of the band kernels over the preset's time lists."""
    if preset.kind != "bands":
        raise ValueError(f"preset {preset.name!r} is not a bands preset")
    grid = preset.grid
    spec = preset.cutoff_spec
    b1_sup, b1_grad = [], []
    for t in preset.band1_times:
        kernel = symbols.green_band(1, grid, t, spec)
        b1_sup.append(float(np.max(np.abs(kernel.values))))
        coeffs = forward_transform(kernel).coeffs * derivative_multiplier(
            grid, (1,) + (0,) * (grid.n_dims - 1))
        grad = inverse_transform(SpectralField(grid, coeffs))
        b1_grad.append(float(np.max(np.abs(grad.values))))
    b2_sup = []
    for t in preset.band2_times:
        kernel = symbols.green_band(2, grid, t, spec)
        b2_sup.append(float(np.max(np.abs(kernel.values))))
    return BandRun(preset=preset,
                   band1_times=np.asarray(preset.band1_times),
                   band1_sup=np.asarray(b1_sup),
                   band1_grad_sup=np.asarray(b1_grad),
                   band2_times=np.asarray(preset.band2_times),
                   band2_sup=np.asarray(b2_sup))


def run_experiment(preset: ExperimentPreset, snapshot_sink=None):
    if preset.kind == "linear":
        return run_linear(preset, snapshot_sink)
    if preset.kind == "semilinear":
        return run_semilinear(preset, snapshot_sink)
    return run_bands(preset)


def _rounded_times(lo: float, hi: float, count: int, dt: float | None,
                   include: tuple[float, ...] = ()) -> tuple[float, ...]:
    raw = list(np.geomspace(lo, hi, count)) + list(include)
    if dt is None:
        ts = sorted({round(float(t), 9) for t in raw})
    else:
        ts = sorted({round(round(float(t) / dt) * dt, 9) for t in raw})
    return tuple(t for t in ts if 0 < t <= hi + 1e-9)


def builtin_presets() -> dict[str, ExperimentPreset]:
    """The five standard experiments."""
    sup = math.inf
    lin1d = ExperimentPreset(
        name="lin1d", kind="linear", n_dims=1, grid_points=4096,
        half_width=200.0, amplitude=1.0, width=1.0, t_final=100.0,
        snapshot_times=_rounded_times(1.0, 100.0, 33, None),
        fit_window=(20.0, 100.0),
        reports=((sup, 0, 0), (sup, 1, 0), (sup, 0, 1)))
    lin2d = ExperimentPreset(
        name="lin2d", kind="linear", n_dims=2, grid_points=512,
        half_width=80.0, amplitude=1.0, width=1.0, t_final=50.0,
        snapshot_times=_rounded_times(1.0, 50.0, 25, None),
        fit_window=(10.0, 50.0),
        reports=((sup, 0, 0),))
    # semilinear amplitudes put the Sobolev data size near 0.1; the widths
    # and steps keep the trapezoid energy-balance residual under 1e-6 E(0)
    semi1d = ExperimentPreset(
        name="semi1d-theta3", kind="semilinear", n_dims=1, grid_points=4096,
        half_width=200.0, amplitude=0.0485, width=2.0, theta=3, dt=0.005,
        t_final=100.0,
        snapshot_times=_rounded_times(1.0, 100.0, 30, 0.005, include=(10.0,)),
        fit_window=(20.0, 100.0),
        reports=((sup, 0, 0), (2, 0, 0), (1, 0, 0), (sup, 0, 1)),
        profile_r=2.0)
    semi2d = ExperimentPreset(
        name="semi2d-theta2", kind="semilinear", n_dims=2, grid_points=256,
        half_width=80.0, amplitude=0.0226, width=2.0, theta=2, dt=0.004,
        t_final=50.0,
        snapshot_times=_rounded_times(1.0, 50.0, 25, 0.004, include=(10.0,)),
        fit_window=(10.0, 50.0),
        reports=((sup, 0, 0), (sup, 0, 1)),
        profile_r=2.0)
    bands1d = ExperimentPreset(
        name="bands1d", kind="bands", n_dims=1, grid_points=4096,
        half_width=200.0, t_final=80.0, eps=0.45, outer_radius=2.0,
        band1_times=tuple(round(float(t), 6) for t in np.geomspace(10.0, 80.0, 8)),
        band2_times=tuple(np.linspace(5.0, 40.0, 8)))
    return {p.name: p for p in (lin1d, lin2d, semi1d, semi2d, bands1d)}


# ---------------------------------------------------------------------------
# flat key=value config schema

_TRUE = ("true", "1", "yes", "on")
_FALSE = ("false", "0", "no", "off")


def _parse_bool(text: str):
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    if t in ("auto", "none", ""):
        return None
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_float_list(text: str) -> tuple[float, ...]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    return tuple(float(s) for s in items)


def _parse_reports(text: str) -> tuple[tuple[float, int, int], ...]:
    out = []
    for item in (s.strip() for s in text.split(",") if s.strip()):
        parts = item.split(":")
        if len(parts) != 3:
            raise ValueError(
                f"report entry must look like p:alpha:h, got {item!r}")
        p = math.inf if parts[0] == "inf" else float(parts[0])
        out.append((p, int(parts[1]), int(parts[2])))
    return tuple(out)


def _format_reports(reports) -> str:
    items = []
    for p, a, h in reports:
        head = "inf" if p == math.inf else f"{p:g}"
        items.append(f"{head}:{a}:{h}")
    return ",".join(items)


def _format_float_list(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _parse_optional_int(text: str):
    t = text.strip().lower()
    if t in ("auto", "none", ""):
        return None
    return int(t)


_SCHEMA = {
    "name": (str, str, "name"),
    "kind": (str, str, "kind"),
    "dimension": (int, str, "n_dims"),
    "grid_points": (int, str, "grid_points"),
    "half_width": (float, repr, "half_width"),
    "amplitude": (float, repr, "amplitude"),
    "width": (float, repr, "width"),
    "u1_amplitude": (float, repr, "u1_amplitude"),
    "u0_file": (str, str, "u0_file"),
    "u1_file": (str, str, "u1_file"),
    "theta": (int, str, "theta"),
    "dt": (float, repr, "dt"),
    "t_final": (float, repr, "t_final"),
    "integrator": (str, str, "integrator"),
    "dealias": (_parse_bool, lambda v: "auto" if v is None else str(v).lower(), "dealias"),
    "delta_bar": (float, repr, "delta_bar"),
    "snapshot_times": (_parse_float_list, _format_float_list, "snapshot_times"),
    "fit_window_lo": (float, repr, None),
    "fit_window_hi": (float, repr, None),
    "reports": (_parse_reports, _format_reports, "reports"),
    "profile_r": (float, repr, "profile_r"),
    "sobolev_index": (_parse_optional_int,
                      lambda v: "auto" if v is None else str(v), "sobolev_index"),
    "eps": (float, repr, "eps"),
    "outer_radius": (float, repr, "outer_radius"),
    "band1_times": (_parse_float_list, _format_float_list, "band1_times"),
    "band2_times": (_parse_float_list, _format_float_list, "band2_times"),
    "seed": (int, str, "seed"),
}

REQUIRED_KEYS = ("name", "kind", "dimension", "grid_points", "half_width")


def preset_to_config(preset: ExperimentPreset) -> dict[str, str]:
    """Flatten a preset to the key=value form (complete, relaunchable)."""
    out: dict[str, str] = {}
    for key, (_parse, fmt, attr) in _SCHEMA.items():
        if key == "fit_window_lo":
            out[key] = repr(float(preset.fit_window[0]))
        elif key == "fit_window_hi":
            out[key] = repr(float(preset.fit_window[1]))
        else:
            out[key] = fmt(getattr(preset, attr))
    return out


def preset_from_config(cfg: dict[str, str]) -> ExperimentPreset:
    """Build a validated preset from flat config text values.

    Unknown keys are hard errors; missing optional keys fall back to the
    dataclass defaults.
    """
    unknown = sorted(set(cfg) - set(_SCHEMA))
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    missing = sorted(k for k in REQUIRED_KEYS if k not in cfg)
    if missing:
        raise ValueError(f"missing required config keys: {', '.join(missing)}")

    kwargs = {}
    window = [None, None]
    for key, raw in cfg.items():
        parse, _fmt, attr = _SCHEMA[key]
        try:
            value = parse(raw)
        except (ValueError, TypeError) as exc:
            raise ValueError(f"config key {key}: {exc}") from exc
        if key == "fit_window_lo":
            window[0] = value
        elif key == "fit_window_hi":
            window[1] = value
        else:
            kwargs[attr] = value
    preset = ExperimentPreset(**kwargs)
    if window[0] is not None or window[1] is not None:
        lo = window[0] if window[0] is not None else preset.fit_window[0]
        hi = window[1] if window[1] is not None else preset.fit_window[1]
        preset = replace(preset, fit_window=(lo, hi))
    return preset
