"""Norms, energy bookkeeping, and decay-rate measurement.

All L^2-type quantities are evaluated spectrally through the Parseval
identity sum |f_j|^2 dx^n = (dx/N)^n sum |c_k|^2, so they can be read off
solver states without leaving Fourier space.  Decay rates are ordinary
least-squares fits of log(value) against log(1 + t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import linregress

from .grid import Field, Grid, SpectralField, inverse_transform

MIN_FIT_POINTS = 5


def _parseval_factor(grid: Grid) -> float:
    return grid.cell_volume / grid.mode_count


def spectral_l2_sq(grid: Grid, coeffs: np.ndarray, weight=None) -> float:
    """Weighted squared L^2 norm computed from DFT coefficients."""
    power = np.abs(coeffs) ** 2
    if weight is not None:
        power = power * weight
    return float(np.sum(power)) * _parseval_factor(grid)


def lp_norm(f: Field, p) -> float:
    """L^p norm on the box; p may be 1, 2, any real >= 1, or inf."""
    if p == math.inf:
        return float(np.max(np.abs(f.values)))
    p = float(p)
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    total = float(np.sum(np.abs(f.values) ** p)) * f.grid.cell_volume
    return total ** (1.0 / p)


@lru_cache(maxsize=64)
def sobolev_weight(grid: Grid, s: int) -> np.ndarray:
    """Spectral weight sum_{k=0}^{s} |xi|^(2k) of the H^s norm."""
    if s < 0 or s != int(s):
        raise ValueError(f"s must be a nonnegative integer, got {s}")
    out = np.ones(grid.shape)
    power = np.ones(grid.shape)
    for _ in range(int(s)):
        power = power * grid.freq_sq
        out = out + power
    return out


def sobolev_norm(f: Field, s: int) -> float:
    """H^s norm via Parseval.

    The order-k derivative block carries the |xi|^(2k) weight, i.e. all
    mixed partials of order k counted with multinomial multiplicity.
    """
    from .grid import forward_transform

    coeffs = forward_transform(f).coeffs
    return math.sqrt(spectral_l2_sq(f.grid, coeffs, sobolev_weight(f.grid, s)))


def e0_norm(u0: Field, u1: Field, s: int) -> float:
    """Size of the initial data pair: |u0|_{H^{s+1}} + |u1|_{H^s}."""
    if u0.grid != u1.grid:
        raise ValueError("u0 and u1 must share a grid")
    return sobolev_norm(u0, s + 1) + sobolev_norm(u1, s)


def basic_energy(state) -> float:
    """Energy of a solver state.

    E = 1/2 |u_t|^2 + 1/2 |grad u|^2 + 1/(theta+2) |u|_{theta+2}^{theta+2}.
    Along the absorbing flow dE/dt = -|u_t|^2, so E never increases.
    """
    grid = state.grid
    kinetic = 0.5 * spectral_l2_sq(grid, state.v_hat)
    gradient = 0.5 * spectral_l2_sq(grid, state.u_hat, grid.freq_sq)
    u = inverse_transform(SpectralField(grid, state.u_hat)).values
    q = state.theta + 2
    potential = float(np.sum(np.abs(u) ** q)) * grid.cell_volume / q
    return kinetic + gradient + potential


def dissipation_rate(state) -> float:
    """Instantaneous dissipation |u_t|^2 of a solver state."""
    return spectral_l2_sq(state.grid, state.v_hat)


def weighted_profile(f: Field, t: float, r: float, derivative_order: int = 0) -> float:
    """Spatially weighted amplitude sup_x |f| (1+t)^((n+a)/2) (1+|x|^2/(1+t))^r.

    A bounded profile across time witnesses the pointwise decay rate
    together with its spatial envelope.  Pass the derivative field and its
    order a to shift the time exponent accordingly.
    """
    n = f.grid.n_dims
    if not r > max(n / 2.0, 1.0):
        raise ValueError(
            f"r must exceed max(n/2, 1) = {max(n / 2.0, 1.0)}, got {r}")
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    envelope = (1.0 + f.grid.radius_sq / (1.0 + t)) ** r
    amp = float(np.max(np.abs(f.values) * envelope))
    return amp * (1.0 + t) ** (0.5 * (n + derivative_order))


@dataclass(frozen=True)
class FitResult:
    slope: float
    stderr: float
    r_squared: float
    n_points: int
    window: tuple[float, float]


def _fit_window(times, values, window):
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError(f"fit window must satisfy lo < hi, got ({lo}, {hi})")
    mask = (times >= lo) & (times <= hi)
    if int(mask.sum()) < MIN_FIT_POINTS:
        raise ValueError(
            f"fit window ({lo}, {hi}) contains {int(mask.sum())} samples; "
            f"need at least {MIN_FIT_POINTS}")
    vals = values[mask]
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ValueError("fit requires positive finite values inside the window")
    return times[mask], vals, (lo, hi)


def fit_decay_rate(times, values, window) -> FitResult:
    """OLS slope of log(value) vs log(1 + t) inside the window."""
    ts, vals, win = _fit_window(times, values, window)
    res = linregress(np.log1p(ts), np.log(vals))
    return FitResult(slope=float(res.slope), stderr=float(res.stderr),
                     r_squared=float(res.rvalue) ** 2, n_points=len(ts),
                     window=win)


def fit_exponential_rate(times, values, window) -> FitResult:
    """OLS slope of log(value) vs t inside the window (exponential decay)."""
    ts, vals, win = _fit_window(times, values, window)
    res = linregress(ts, np.log(vals))
    return FitResult(slope=float(res.slope), stderr=float(res.stderr),
                     r_squared=float(res.rvalue) ** 2, n_points=len(ts),
                     window=win)


def field_label(alpha_order: int = 0, h: int = 0) -> str:
    """Short name of a derivative of the solution, e.g. dx_u or dt2_u."""
    name = "u"
    if alpha_order == 1:
        name = "dx_" + name
    elif alpha_order > 1:
        name = f"dx{alpha_order}_" + name
    if h == 1:
        name = "dt_" + name
    elif h > 1:
        name = f"dt{h}_" + name
    return name


def quantity_label(p, alpha_order: int = 0, h: int = 0) -> str:
    norm = "linf" if p == math.inf else f"l{p:g}"
    return f"{norm}:{field_label(alpha_order, h)}"


def target_slope(kind: str, n_dims: int, p, alpha_order: int, h: int) -> float:
    """Expected log-log decay slope of the requested norm.

    Linear flow: -(n + |alpha| + 2h)/2 for the sup norm.  Semilinear
    absorbing flow: -(n/2)(1 - 1/p) - |alpha|/2, with no gain from time
    derivatives (those are upper-bound checks only).
    """
    if kind == "linear":
        if p != math.inf:
            raise ValueError("linear decay targets are defined for the sup norm")
        return -0.5 * (n_dims + alpha_order + 2 * h)
    if kind == "semilinear":
        inv_p = 0.0 if p == math.inf else 1.0 / float(p)
        return -0.5 * n_dims * (1.0 - inv_p) - 0.5 * alpha_order
    raise ValueError(f"kind must be 'linear' or 'semilinear', got {kind!r}")


def decay_tolerance(kind: str, h: int) -> float:
    return 0.15 if (kind == "linear" and h >= 1) else 0.10


@dataclass(frozen=True)
class DecayRow:
    quantity: str
    slope: float
    stderr: float
    target: float
    tolerance: float
    one_sided: bool
    passed: bool


@dataclass(frozen=True)
class DecayReport:
    rows: tuple[DecayRow, ...]
    window: tuple[float, float]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def decay_report(times, series: dict, requests, kind: str, n_dims: int,
                 window) -> DecayReport:
    """Fit each requested (p, alpha_order, h) series and compare to targets.

    Semilinear time-derivative norms are judged one-sided: the measured
    slope only has to stay at or below target + tolerance.
    """
    rows = []
    win = None
    for p, alpha_order, h in requests:
        label = quantity_label(p, alpha_order, h)
        if label not in series:
            raise KeyError(f"run record has no series {label!r}")
        fit = fit_decay_rate(times, series[label], window)
        win = fit.window
        target = target_slope(kind, n_dims, p, alpha_order, h)
        tol = decay_tolerance(kind, h)
        one_sided = kind == "semilinear" and h >= 1
        if one_sided:
            ok = fit.slope <= target + tol
        else:
            ok = abs(fit.slope - target) <= tol
        rows.append(DecayRow(quantity=label, slope=fit.slope, stderr=fit.stderr,
                             target=target, tolerance=tol, one_sided=one_sided,
                             passed=ok))
    return DecayReport(rows=tuple(rows), window=win or tuple(map(float, window)))


@dataclass
class EnergyLedger:
    """Per-step record of energy, dissipation, and norm growth.

    dissipation_integral accumulates the trapezoid rule for
    int_0^t |u_tau|^2 dtau, so energy balance can be audited as
    E(t) - E(0) + dissipation_integral(t) = 0 up to scheme error.
    """

    sobolev_index: int
    e0: float = 0.0
    times: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    diss_rate: list = field(default_factory=list)
    dissipation_integral: list = field(default_factory=list)
    sup_norm: list = field(default_factory=list)
    u_sobolev: list = field(default_factory=list)
    ut_sobolev: list = field(default_factory=list)

    def record(self, state) -> None:
        grid = state.grid
        s = self.sobolev_index
        u_field = inverse_transform(SpectralField(grid, state.u_hat))
        u = u_field.values
        q = state.theta + 2
        kinetic = 0.5 * spectral_l2_sq(grid, state.v_hat)
        gradient = 0.5 * spectral_l2_sq(grid, state.u_hat, grid.freq_sq)
        potential = float(np.sum(np.abs(u) ** q)) * grid.cell_volume / q
        energy = kinetic + gradient + potential
        rate = 2.0 * kinetic

        if self.times and state.time <= self.times[-1]:
            raise ValueError("ledger times must be strictly increasing")
        if self.times:
            dt = state.time - self.times[-1]
            run = self.dissipation_integral[-1] \
                + 0.5 * dt * (self.diss_rate[-1] + rate)
        else:
            run = 0.0

        self.times.append(float(state.time))
        self.energy.append(energy)
        self.diss_rate.append(rate)
        self.dissipation_integral.append(run)
        self.sup_norm.append(float(np.max(np.abs(u))))
        self.u_sobolev.append(math.sqrt(spectral_l2_sq(
            grid, state.u_hat, sobolev_weight(grid, s + 1))))
        self.ut_sobolev.append(math.sqrt(spectral_l2_sq(
            grid, state.v_hat, sobolev_weight(grid, s))))

    def balance_residual(self) -> float:
        """Worst deviation of E(t) - E(0) + int |u_tau|^2 from zero."""
        if not self.times:
            return 0.0
        e = np.asarray(self.energy)
        return float(np.max(np.abs(e - e[0] + np.asarray(self.dissipation_integral))))

    def rows(self):
        columns = (("energy", self.energy),
                   ("diss_rate", self.diss_rate),
                   ("diss_integral", self.dissipation_integral),
                   ("linf:u", self.sup_norm),
                   (f"h{self.sobolev_index + 1}:u", self.u_sobolev),
                   (f"h{self.sobolev_index}:dt_u", self.ut_sobolev))
        for name, vals in columns:
            for t, v in zip(self.times, vals):
                yield float(t), name, float(v)


def write_series_csv(path, rows) -> None:
    """Long-format time series: header t,quantity,value.

    rows is an iterable of (time, quantity_name, value) triples; values are
    written with repr for lossless round-trips and byte-stable reruns.
    """
    lines = ["t,quantity,value"]
    for t, name, v in rows:
        lines.append(f"{float(t)!r},{name},{float(v)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_report_csv(path, report: DecayReport) -> None:
    """Decay report: header quantity,slope,stderr,target,tolerance,verdict."""
    lines = ["quantity,slope,stderr,target,tolerance,verdict"]
    for r in report.rows:
        verdict = "pass" if r.passed else "fail"
        lines.append(f"{r.quantity},{float(r.slope)!r},{float(r.stderr)!r},"
                     f"{float(r.target)!r},{float(r.tolerance)!r},{verdict}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
