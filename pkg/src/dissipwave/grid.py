"""Periodic grid, discrete Fourier transforms, and snapshot serialization.

The computational domain is the box [-half_width, half_width)^n_dims sampled
on a uniform lattice with points_per_dim points per axis.  The frequency
lattice carries the angular frequencies xi_j = (pi / half_width) * j for
j in [-N/2, N/2), stored in FFT order.  The forward transform is the plain
(unnormalized) DFT sum; the inverse carries the 1/N factor per axis.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

SNAPSHOT_MAGIC = b"DWF1"

# Relative imaginary residue tolerated when casting an inverse transform
# back to a real field.  Anything larger indicates non-Hermitian input.
IMAG_RESIDUE_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-half_width, half_width)^n_dims."""

    n_dims: int
    points_per_dim: int
    half_width: float

    def __post_init__(self) -> None:
        if self.n_dims not in (1, 2, 3):
            raise ValueError(f"n_dims must be 1, 2 or 3, got {self.n_dims}")
        n = self.points_per_dim
        if n < 16 or n & (n - 1):
            raise ValueError(
                f"points_per_dim must be a power of two >= 16, got {n}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.points_per_dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_dim,) * self.n_dims

    @property
    def cell_volume(self) -> float:
        return self.dx ** self.n_dims

    @property
    def mode_count(self) -> int:
        return self.points_per_dim ** self.n_dims

    @cached_property
    def axis_coords(self) -> np.ndarray:
        """Sample positions along one axis, x_j = -L + j dx."""
        return -self.half_width + self.dx * np.arange(self.points_per_dim)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis."""
        return tuple(np.meshgrid(*(self.axis_coords,) * self.n_dims,
                                 indexing="ij", sparse=True))

    @cached_property
    def radius_sq(self) -> np.ndarray:
        """|x|^2 on the full lattice."""
        out = np.zeros(self.shape)
        for c in self.coords:
            out = out + c * c
        return out

    @cached_property
    def axis_freqs(self) -> np.ndarray:
        """Angular frequencies (pi / half_width) * j in FFT storage order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points_per_dim, d=self.dx)

    @cached_property
    def freq_grids(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(self.axis_freqs,) * self.n_dims,
                                 indexing="ij", sparse=True))

    @cached_property
    def freq_sq(self) -> np.ndarray:
        """|xi|^2 on the full frequency lattice."""
        out = np.zeros(self.shape)
        for f in self.freq_grids:
            out = out + f * f
        return out

    @cached_property
    def freq_radius(self) -> np.ndarray:
        return np.sqrt(self.freq_sq)

    @property
    def nyquist_freq(self) -> float:
        return np.pi * self.points_per_dim / (2.0 * self.half_width)

    @property
    def origin_index(self) -> tuple[int, ...]:
        """Lattice index of x = 0 (exact for even point counts)."""
        return (self.points_per_dim // 2,) * self.n_dims


def make_grid(n_dims: int, points_per_dim: int, half_width: float) -> Grid:
    """Construct a validated grid."""
    return Grid(n_dims=n_dims, points_per_dim=points_per_dim,
                half_width=float(half_width))


@dataclass(frozen=True)
class Field:
    """Real-valued samples on a grid.  Treated as immutable."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ValueError(
                f"field shape {v.shape} does not match grid shape {self.grid.shape}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SpectralField:
    """Complex DFT coefficients in FFT storage order."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {c.shape} does not match grid shape {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)


def forward_transform(field: Field) -> SpectralField:
    """Plain-sum DFT of a real field."""
    return SpectralField(field.grid, np.fft.fftn(field.values))


def inverse_transform(spectral: SpectralField) -> Field:
    """Inverse DFT (1/N per axis).  Rejects non-Hermitian input.

    The imaginary residue must stay below IMAG_RESIDUE_TOL relative to the
    field magnitude; larger residues indicate corrupted coefficients rather
    than rounding noise.
    """
    w = np.fft.ifftn(spectral.coeffs)
    scale = float(np.max(np.abs(w)))
    residue = float(np.max(np.abs(w.imag)))
    if residue > IMAG_RESIDUE_TOL * max(scale, 1e-300):
        raise ValueError(
            f"inverse transform has imaginary residue {residue:.3e} "
            f"(relative to magnitude {scale:.3e}); coefficients are not Hermitian")
    return Field(spectral.grid, np.ascontiguousarray(w.real))


def derivative_multiplier(grid: Grid, alpha: tuple[int, ...]) -> np.ndarray:
    """Per-mode factor prod_k (i xi_k)^alpha_k for the derivative D^alpha.

    The Nyquist mode has no conjugate partner, so it is zeroed along every
    differentiated axis; this keeps outputs real and makes the operators
    compose exactly (applying alpha=(1,) twice equals alpha=(2,)).
    """
    if len(alpha) != grid.n_dims:
        raise ValueError(
            f"alpha has length {len(alpha)}, expected {grid.n_dims}")
    if any(a < 0 or a != int(a) for a in alpha):
        raise ValueError(f"alpha must be nonnegative integers, got {alpha}")
    mult = np.ones(grid.shape, dtype=np.complex128)
    n = grid.points_per_dim
    for axis, order in enumerate(alpha):
        if order == 0:
            continue
        freqs = grid.axis_freqs.copy()
        freqs[n // 2] = 0.0
        shape = [1] * grid.n_dims
        shape[axis] = n
        mult = mult * (1j * freqs.reshape(shape)) ** int(order)
    return mult


def spectral_derivative(spectral: SpectralField, alpha: tuple[int, ...]) -> SpectralField:
    """Coefficients of the mixed partial derivative D^alpha."""
    mult = derivative_multiplier(spectral.grid, alpha)
    return SpectralField(spectral.grid, spectral.coeffs * mult)


def derivative_field(field: Field, alpha: tuple[int, ...]) -> Field:
    """Real-space D^alpha f via the spectral route."""
    return inverse_transform(spectral_derivative(forward_transform(field), alpha))


def write_snapshot(path, field: Field, time: float) -> None:
    """Serialize one field in the DWF1 layout.

    Little-endian: magic "DWF1", u32 n_dims, u32 points_per_dim,
    f64 half_width, f64 time, then points_per_dim^n_dims f64 samples in
    row-major order.
    """
    g = field.grid
    header = SNAPSHOT_MAGIC + struct.pack(
        "<IIdd", g.n_dims, g.points_per_dim, g.half_width, float(time))
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_snapshot(path) -> tuple[Field, float]:
    """Read a DWF1 snapshot back into (field, time)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    head_len = len(SNAPSHOT_MAGIC) + struct.calcsize("<IIdd")
    if len(raw) < head_len or raw[:4] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a DWF1 snapshot")
    n_dims, n_pts, half_width, time = struct.unpack(
        "<IIdd", raw[4:head_len])
    grid = Grid(n_dims=n_dims, points_per_dim=n_pts, half_width=half_width)
    expected = grid.mode_count * 8
    payload = raw[head_len:]
    if len(payload) != expected:
        raise ValueError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f8").reshape(grid.shape)
    return Field(grid, values.astype(np.float64)), time
