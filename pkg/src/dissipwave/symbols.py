"""Fourier symbols of the damped wave Green function and band kernels.

Each Fourier mode of the linear equation u_tt + u_t - Lap u = 0 satisfies
g'' + g' + |xi|^2 g = 0.  The fundamental solution with g(0) = 0, g'(0) = 1
has the two characteristic exponents mu_pm = (-1 pm sqrt(1 - 4 |xi|^2)) / 2,
which collide at the branch point |xi| = 1/2.  Evaluation switches between
exponential, trigonometric, and Taylor-series forms so that every branch is
stable, including a neighborhood of the collision.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Field, Grid, SpectralField, forward_transform, inverse_transform

# The series argument is w = (1 - 4 xi_sq) t^2 / 4; |w| <= W_SERIES keeps the
# degree-3 Taylor truncation of sinh(sqrt(w))/sqrt(w) and cosh(sqrt(w))
# below 1e-22 while avoiding the 0/0 cancellation of the closed forms.
# Equivalent to |sqrt(w)| <= 1e-2.
W_SERIES = 1e-4

MIN_TRANSITION_MODES = 8


def _as_float_arrays(xi_sq, t):
    xi_sq = np.asarray(xi_sq, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if np.any(xi_sq < 0):
        raise ValueError("xi_sq must be nonnegative")
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    return np.broadcast_arrays(xi_sq, t)


def _maybe_scalar(out, scalar: bool):
    return float(out[()]) if scalar else out


def mu_pm(xi_sq):
    """Characteristic exponents mu_plus, mu_minus of one Fourier mode.

    Real for |xi| < 1/2, complex conjugates for |xi| > 1/2.  The pair is
    built so mu_plus + mu_minus = -1 holds exactly.
    """
    xi_sq = np.asarray(xi_sq, dtype=np.float64)
    if np.any(xi_sq < 0):
        raise ValueError("xi_sq must be nonnegative")
    root = np.sqrt(np.asarray(1.0 - 4.0 * xi_sq, dtype=np.complex128))
    plus = 0.5 * (-1.0 + root)
    minus = -1.0 - plus
    if xi_sq.ndim == 0:
        return complex(plus), complex(minus)
    return plus, minus


def _sinhc_series(w):
    # sinh(sqrt(w))/sqrt(w) = 1 + w/6 + w^2/120 + w^3/5040 + O(w^4)
    return 1.0 + (w / 6.0) * (1.0 + (w / 20.0) * (1.0 + w / 42.0))


def _cosh_series(w):
    # cosh(sqrt(w)) = 1 + w/2 + w^2/24 + w^3/720 + O(w^4)
    return 1.0 + (w / 2.0) * (1.0 + (w / 12.0) * (1.0 + w / 30.0))


def green_hat(xi_sq, t):
    """Green function symbol: the mode solution with g(0) = 0, g'(0) = 1.

    Vectorized over broadcastable xi_sq >= 0 and t >= 0.
    """
    scalar = np.ndim(xi_sq) == 0 and np.ndim(t) == 0
    xi_sq, t = _as_float_arrays(xi_sq, t)
    m = 1.0 - 4.0 * xi_sq
    w = m * t * t / 4.0
    out = np.empty_like(w)

    series = np.abs(w) <= W_SERIES
    over = ~series & (m > 0)
    under = ~series & (m < 0)

    if np.any(series):
        ts, ws = t[series], w[series]
        out[series] = ts * np.exp(-0.5 * ts) * _sinhc_series(ws)
    if np.any(over):
        # both exponents are nonpositive, so no overflow
        root = np.sqrt(m[over])
        to = t[over]
        out[over] = (np.exp(0.5 * (root - 1.0) * to)
                     - np.exp(-0.5 * (root + 1.0) * to)) / root
    if np.any(under):
        root = np.sqrt(-m[under])
        tu = t[under]
        out[under] = 2.0 * np.exp(-0.5 * tu) * np.sin(0.5 * root * tu) / root
    return _maybe_scalar(out, scalar)


def green_hat_dt(xi_sq, t):
    """Time derivative of the Green function symbol.  Equals 1 at t = 0."""
    scalar = np.ndim(xi_sq) == 0 and np.ndim(t) == 0
    xi_sq, t = _as_float_arrays(xi_sq, t)
    m = 1.0 - 4.0 * xi_sq
    w = m * t * t / 4.0
    out = np.empty_like(w)

    series = np.abs(w) <= W_SERIES
    over = ~series & (m > 0)
    under = ~series & (m < 0)

    if np.any(series):
        ts, ws = t[series], w[series]
        out[series] = np.exp(-0.5 * ts) * (
            _cosh_series(ws) - 0.5 * ts * _sinhc_series(ws))
    if np.any(over):
        root = np.sqrt(m[over])
        to = t[over]
        mu_p = 0.5 * (root - 1.0)
        mu_m = -0.5 * (root + 1.0)
        out[over] = (mu_p * np.exp(mu_p * to) - mu_m * np.exp(mu_m * to)) / root
    if np.any(under):
        root = np.sqrt(-m[under])
        tu = t[under]
        half_angle = 0.5 * root * tu
        out[under] = np.exp(-0.5 * tu) * (
            np.cos(half_angle) - np.sin(half_angle) / root)
    return _maybe_scalar(out, scalar)


def green_hat_dtt(xi_sq, t):
    """Second time derivative, from the mode ODE g'' = -g' - xi_sq g."""
    return -green_hat_dt(xi_sq, t) - np.asarray(xi_sq) * green_hat(xi_sq, t)


@dataclass(frozen=True)
class SymbolTable:
    """Symbol and its first two time derivatives tabulated on a grid.

    g_tt is defined through the mode ODE identity, so
    g_tt = -g_t - freq_sq * g holds exactly.
    """

    grid: Grid
    delta: float
    g: np.ndarray
    g_t: np.ndarray
    g_tt: np.ndarray


def build_symbol_table(grid: Grid, delta: float) -> SymbolTable:
    """Tabulate the symbol at time increment delta over the frequency lattice."""
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    xi_sq = grid.freq_sq
    g = green_hat(xi_sq, delta)
    g_t = green_hat_dt(xi_sq, delta)
    g_tt = -g_t - xi_sq * g
    return SymbolTable(grid=grid, delta=float(delta), g=g, g_t=g_t, g_tt=g_tt)


@dataclass(frozen=True)
class CutoffSpec:
    """Radial frequency thresholds of the three-band smooth partition.

    Band 1 covers |xi| < eps (identically 1 there, 0 beyond 2 eps); band 3
    covers |xi| > outer_radius (identically 1 there, 0 below
    outer_radius - 1); band 2 is the middle remainder.  The transitions must
    not overlap: 2 eps < outer_radius - 1.
    """

    eps: float = 0.125
    outer_radius: float = 2.0

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.outer_radius > 1:
            raise ValueError(
                f"outer_radius must exceed 1, got {self.outer_radius}")
        if not 2 * self.eps < self.outer_radius - 1:
            raise ValueError(
                f"transition overlap: need 2*eps < outer_radius - 1, "
                f"got eps={self.eps}, outer_radius={self.outer_radius}")

    def transition_intervals(self, band: int) -> tuple[tuple[float, float], ...]:
        low = (self.eps, 2 * self.eps)
        high = (self.outer_radius - 1, self.outer_radius)
        if band == 1:
            return (low,)
        if band == 2:
            return (low, high)
        if band == 3:
            return (high,)
        raise ValueError(f"band must be 1, 2 or 3, got {band}")


def smooth_step(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1, strictly increasing between."""
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s)
    out[s >= 1] = 1.0
    interior = (s > 0) & (s < 1)
    if np.any(interior):
        si = s[interior]
        a = np.exp(-1.0 / si)
        b = np.exp(-1.0 / (1.0 - si))
        out[interior] = a / (a + b)
    return out


def cutoff(band: int, radius, spec: CutoffSpec = CutoffSpec()):
    """Smooth radial cutoff chi_band evaluated at |xi| = radius.

    The three cutoffs form an exact partition of unity by construction.
    """
    radius = np.asarray(radius, dtype=np.float64)
    if np.any(radius < 0):
        raise ValueError("radius must be nonnegative")
    low = 1.0 - smooth_step((radius - spec.eps) / spec.eps)
    high = smooth_step(radius - (spec.outer_radius - 1.0))
    if band == 1:
        return low
    if band == 3:
        return high
    if band == 2:
        return 1.0 - low - high
    raise ValueError(f"band must be 1, 2 or 3, got {band}")


@lru_cache(maxsize=32)
def _delta_spectrum(grid: Grid) -> np.ndarray:
    """Transform of the discrete delta at the origin, scaled to unit mass."""
    values = np.zeros(grid.shape)
    values[grid.origin_index] = 1.0 / grid.cell_volume
    return forward_transform(Field(grid, values)).coeffs


def _check_band_resolution(band: int, grid: Grid, spec: CutoffSpec) -> None:
    radius = grid.freq_radius
    for lo, hi in spec.transition_intervals(band):
        if hi > grid.nyquist_freq:
            raise ValueError(
                f"band {band} transition ({lo}, {hi}) extends beyond the "
                f"lattice Nyquist frequency {grid.nyquist_freq:.4g}")
        count = int(np.count_nonzero((radius > lo) & (radius < hi)))
        if count < MIN_TRANSITION_MODES:
            raise ValueError(
                f"band {band} transition ({lo}, {hi}) is sampled by only "
                f"{count} lattice modes; need at least {MIN_TRANSITION_MODES}")


def green_band(band: int, grid: Grid, t: float, spec: CutoffSpec = CutoffSpec()) -> Field:
    """Band kernel: inverse transform of chi_band(|xi|) * green_hat(xi, t).

    The kernel is centered at x = 0.  Raises if the grid does not resolve
    the cutoff transition zones.
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    _check_band_resolution(band, grid, spec)
    mult = cutoff(band, grid.freq_radius, spec) * green_hat(grid.freq_sq, t)
    return inverse_transform(SpectralField(grid, _delta_spectrum(grid) * mult))
