"""Time integration of u_tt - Lap u + u_t = -|u|^theta u in Fourier space.

The linear flow is applied exactly through the tabulated Green function
symbol, so the only discretization error of the exponential integrator
comes from the quadrature of the nonlinear source.  A classical RK4
stepper on the spectral system is kept as an independent reference route.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid import Field, Grid, SpectralField, forward_transform, inverse_transform
from .symbols import SymbolTable, build_symbol_table, green_hat, green_hat_dt

INTEGRATORS = ("reference_rk4", "exponential_duhamel")

# Abort threshold is this multiple of the configured amplitude bound.
GUARD_FACTOR = 10.0

_QUAD_POINTS = 8


class InstabilityError(RuntimeError):
    """Raised when the iterate leaves the trust region sup|u| <= 10 delta_bar."""

    def __init__(self, time: float, sup: float, bound: float):
        super().__init__(
            f"instability at t = {time:.6g}: sup|u| = {sup:.6g} "
            f"exceeds {bound:.6g}")
        self.time = time
        self.sup = sup
        self.bound = bound


@dataclass(frozen=True)
class SolverState:
    """Spectral state (u, u_t) at one instant.  Immutable."""

    grid: Grid
    u_hat: np.ndarray
    v_hat: np.ndarray
    time: float
    theta: int


@dataclass(frozen=True)
class SolverConfig:
    """Stepping parameters.

    dealias None resolves to the 2/3 rule for theta >= 2.  nonlin_sign is
    -1 for the absorbing equation; +1 flips the source for the qualitative
    growth experiment and is not covered by any decay guarantee.
    """

    theta: int
    dt: float
    t_final: float
    integrator: str = "exponential_duhamel"
    dealias: bool | None = None
    snapshot_times: tuple[float, ...] = ()
    delta_bar: float = 0.5
    nonlin_sign: int = -1

    def __post_init__(self) -> None:
        if self.theta < 1 or self.theta != int(self.theta):
            raise ValueError(f"theta must be a positive integer, got {self.theta}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_final >= self.dt:
            raise ValueError(
                f"t_final must be at least dt, got {self.t_final} < {self.dt}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(
                f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if not 0 < self.delta_bar < 1:
            raise ValueError(
                f"delta_bar must lie in (0, 1), got {self.delta_bar}")
        if self.nonlin_sign not in (-1, 1):
            raise ValueError(f"nonlin_sign must be -1 or +1, got {self.nonlin_sign}")
        if any(t < 0 for t in self.snapshot_times):
            raise ValueError("snapshot_times must be nonnegative")

    @property
    def dealias_enabled(self) -> bool:
        if self.dealias is None:
            return self.theta >= 2
        return self.dealias


def state_from_fields(u0: Field, u1: Field, theta: int, time: float = 0.0) -> SolverState:
    if u0.grid != u1.grid:
        raise ValueError("u0 and u1 must share a grid")
    return SolverState(grid=u0.grid,
                       u_hat=forward_transform(u0).coeffs,
                       v_hat=forward_transform(u1).coeffs,
                       time=float(time), theta=int(theta))


def u_field(state: SolverState) -> Field:
    return inverse_transform(SpectralField(state.grid, state.u_hat))


def v_field(state: SolverState) -> Field:
    return inverse_transform(SpectralField(state.grid, state.v_hat))


def apply_nonlinearity(u: np.ndarray, theta: int, sign: int = -1) -> np.ndarray:
    """Pointwise source sign * |u|^theta u.

    Even theta uses (u^2)^(theta/2) * u; odd theta |u| (u^2)^((theta-1)/2) u.
    Both stay smooth through u = 0 and avoid fractional powers.
    """
    if theta < 1 or theta != int(theta):
        raise ValueError(f"theta must be a positive integer, got {theta}")
    theta = int(theta)
    u_sq = u * u
    if theta % 2 == 0:
        amp = u_sq ** (theta // 2)
    else:
        amp = np.abs(u) * (u_sq ** ((theta - 1) // 2) if theta > 1 else 1.0)
    return sign * amp * u


def linear_solution(u0: Field, u1: Field, t: float) -> tuple[Field, Field]:
    """Exact solution (u, u_t) of the linear damped wave at time t.

    Per mode: u_hat(t) = G (u0_hat + u1_hat) + G_t u0_hat, and the velocity
    follows by differentiating, using G_tt = -G_t - |xi|^2 G.
    """
    if u0.grid != u1.grid:
        raise ValueError("u0 and u1 must share a grid")
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    grid = u0.grid
    xi_sq = grid.freq_sq
    g = green_hat(xi_sq, t)
    g_t = green_hat_dt(xi_sq, t)
    g_tt = -g_t - xi_sq * g
    c0 = forward_transform(u0).coeffs
    c1 = forward_transform(u1).coeffs
    csum = c0 + c1
    u_hat = g * csum + g_t * c0
    v_hat = g_t * csum + g_tt * c0
    return (inverse_transform(SpectralField(grid, u_hat)),
            inverse_transform(SpectralField(grid, v_hat)))


def linear_step(state: SolverState, table: SymbolTable) -> SolverState:
    """Advance the linear flow by the table increment (exact per mode).

    The per-mode propagator is [[G_t + G, G], [G_tt + G_t, G_t]] and forms
    a semigroup in the increment.
    """
    if table.grid != state.grid:
        raise ValueError("symbol table grid does not match the state grid")
    u_new = (table.g_t + table.g) * state.u_hat + table.g * state.v_hat
    v_new = (table.g_tt + table.g_t) * state.u_hat + table.g_t * state.v_hat
    return replace(state, u_hat=u_new, v_hat=v_new, time=state.time + table.delta)


def dealias_mask(grid: Grid) -> np.ndarray:
    """2/3-rule mask: keep integer modes |j| <= N/3 along each axis."""
    n = grid.points_per_dim
    j = np.fft.fftfreq(n, d=1.0 / n)  # integer mode numbers in FFT order
    keep = np.abs(j) <= n / 3.0
    mask = np.ones(grid.shape, dtype=bool)
    for axis in range(grid.n_dims):
        shape = [1] * grid.n_dims
        shape[axis] = n
        mask = mask & keep.reshape(shape)
    return mask.astype(np.float64)


@dataclass(frozen=True)
class _StepCache:
    """Per-run precomputation shared by every step of size dt."""

    table: SymbolTable
    mask: np.ndarray | None
    quad_g0: np.ndarray
    quad_g1: np.ndarray
    quad_gt0: np.ndarray
    quad_gt1: np.ndarray


def _make_step_cache(grid: Grid, config: SolverConfig) -> _StepCache:
    dt = config.dt
    table = build_symbol_table(grid, dt)
    mask = dealias_mask(grid) if config.dealias_enabled else None

    # Gauss-Legendre quadrature of int_0^dt G(dt - s) F(s) ds with F
    # interpolated linearly between its endpoint evaluations: the integral
    # collapses to g0 * F(0) + g1 * F(dt) with per-mode weights.
    nodes, weights = np.polynomial.legendre.leggauss(_QUAD_POINTS)
    sigma = 0.5 * dt * (nodes + 1.0)
    w = 0.5 * dt * weights
    xi_sq = grid.freq_sq
    g0 = np.zeros(grid.shape)
    g1 = np.zeros(grid.shape)
    gt0 = np.zeros(grid.shape)
    gt1 = np.zeros(grid.shape)
    for s_q, w_q in zip(sigma, w):
        ker = green_hat(xi_sq, dt - s_q)
        ker_t = green_hat_dt(xi_sq, dt - s_q)
        lo = 1.0 - s_q / dt
        hi = s_q / dt
        g0 += w_q * lo * ker
        g1 += w_q * hi * ker
        gt0 += w_q * lo * ker_t
        gt1 += w_q * hi * ker_t
    return _StepCache(table=table, mask=mask, quad_g0=g0, quad_g1=g1,
                      quad_gt0=gt0, quad_gt1=gt1)


def _source_hat(u: np.ndarray, config: SolverConfig, cache: _StepCache) -> np.ndarray:
    f_hat = np.fft.fftn(apply_nonlinearity(u, config.theta, config.nonlin_sign))
    if cache.mask is not None:
        f_hat = f_hat * cache.mask
    return f_hat


def _guard(u: np.ndarray, time: float, config: SolverConfig) -> None:
    sup = float(np.max(np.abs(u)))
    bound = GUARD_FACTOR * config.delta_bar
    if not np.isfinite(sup) or sup > bound:
        raise InstabilityError(time=time, sup=sup, bound=bound)


def _step_duhamel(state: SolverState, config: SolverConfig,
                  cache: _StepCache) -> SolverState:
    # states stay Hermitian: every multiplier is real and every source is
    # the transform of a real array
    u = np.fft.ifftn(state.u_hat).real
    _guard(u, state.time, config)
    f0 = _source_hat(u, config, cache)

    predicted = linear_step(state, cache.table)
    u_pred = np.fft.ifftn(predicted.u_hat).real
    f1 = _source_hat(u_pred, config, cache)

    u_new = predicted.u_hat + cache.quad_g0 * f0 + cache.quad_g1 * f1
    v_new = predicted.v_hat + cache.quad_gt0 * f0 + cache.quad_gt1 * f1
    return replace(state, u_hat=u_new, v_hat=v_new, time=predicted.time)


def _step_rk4(state: SolverState, config: SolverConfig,
              cache: _StepCache) -> SolverState:
    xi_sq = state.grid.freq_sq
    dt = config.dt

    def rhs(u_hat, v_hat):
        u = np.fft.ifftn(u_hat).real
        f_hat = _source_hat(u, config, cache)
        return v_hat, -xi_sq * u_hat - v_hat + f_hat

    u = np.fft.ifftn(state.u_hat).real
    _guard(u, state.time, config)

    u0, v0 = state.u_hat, state.v_hat
    ku1, kv1 = rhs(u0, v0)
    ku2, kv2 = rhs(u0 + 0.5 * dt * ku1, v0 + 0.5 * dt * kv1)
    ku3, kv3 = rhs(u0 + 0.5 * dt * ku2, v0 + 0.5 * dt * kv2)
    ku4, kv4 = rhs(u0 + dt * ku3, v0 + dt * kv3)
    u_new = u0 + (dt / 6.0) * (ku1 + 2 * ku2 + 2 * ku3 + ku4)
    v_new = v0 + (dt / 6.0) * (kv1 + 2 * kv2 + 2 * kv3 + kv4)
    return replace(state, u_hat=u_new, v_hat=v_new, time=state.time + dt)


def step_semilinear(state: SolverState, config: SolverConfig,
                    cache: _StepCache | None = None) -> SolverState:
    """One step of the configured integrator.  Raises InstabilityError when
    the iterate exceeds 10 * delta_bar in sup norm."""
    if cache is None:
        cache = _make_step_cache(state.grid, config)
    if config.integrator == "reference_rk4":
        return _step_rk4(state, config, cache)
    return _step_duhamel(state, config, cache)


def _snapshot_steps(config: SolverConfig, n_steps: int) -> dict[int, float]:
    out: dict[int, float] = {}
    for t in config.snapshot_times:
        k = int(round(t / config.dt))
        if abs(k * config.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(
                f"snapshot time {t} is not a multiple of dt = {config.dt}")
        if k > n_steps:
            raise ValueError(f"snapshot time {t} lies beyond t_final")
        out[k] = t
    return out


def solve(u0: Field, u1: Field, config: SolverConfig, observers=(),
          ledger=None) -> SolverState:
    """March the semilinear equation to t_final.

    Observers are called with the solver state at every requested snapshot
    time; a ledger (analysis.EnergyLedger) records every step including the
    initial state.  Returns the final state.
    """
    n_steps = int(round(config.t_final / config.dt))
    if abs(n_steps * config.dt - config.t_final) > 1e-9 * max(1.0, config.t_final):
        raise ValueError(
            f"t_final = {config.t_final} is not a multiple of dt = {config.dt}")
    snaps = _snapshot_steps(config, n_steps)

    state = state_from_fields(u0, u1, config.theta)
    cache = _make_step_cache(state.grid, config)
    if ledger is not None:
        ledger.record(state)
    if 0 in snaps:
        for obs in observers:
            obs(state)
    for k in range(1, n_steps + 1):
        state = step_semilinear(state, config, cache)
        if ledger is not None:
            ledger.record(state)
        if k in snaps:
            for obs in observers:
                obs(state)
    return state


def time_derivative(state: SolverState, h: int) -> Field:
    """h-th time derivative of the absorbing flow read off the state.

    h = 0 gives u, h = 1 gives u_t, h = 2 substitutes the equation:
    u_tt = Lap u - u_t - |u|^theta u, Laplacian evaluated spectrally.
    """
    if h not in (0, 1, 2):
        raise ValueError(f"h must be 0, 1 or 2, got {h}")
    if h == 0:
        return u_field(state)
    if h == 1:
        return v_field(state)
    grid = state.grid
    linear_part = inverse_transform(SpectralField(
        grid, -grid.freq_sq * state.u_hat - state.v_hat))
    u = u_field(state).values
    return Field(grid, linear_part.values + apply_nonlinearity(u, state.theta))
