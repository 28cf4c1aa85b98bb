"""Uniform periodic grid on the circle and spectral tools on it.

Fields are plain numpy arrays sampled at ``theta_j = 2*pi*j/n``: scalar fields
have shape ``(n,)``, vector fields shape ``(n, d)``. All routines act along
axis 0.

Fourier coefficients use the normalization ``c_nu = sqrt(2 pi)/n * sum_j
u_j exp(-i nu theta_j)`` so that ``quadrature(u**2) == sum |c_nu|**2``.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import ValidationError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PeriodicGrid:
    """Odd-sized uniform grid on S^1.

    Odd ``n`` keeps the spectral differentiation matrix exactly antisymmetric
    with no Nyquist mode.
    """

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 9 or self.n % 2 == 0:
            raise ValidationError(f"grid size must be an odd integer >= 9, got {self.n!r}")

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n

    @cached_property
    def theta(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n) / self.n

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer mode numbers in numpy FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    @cached_property
    def max_mode(self) -> int:
        return (self.n - 1) // 2

    @cached_property
    def diff_matrix(self) -> np.ndarray:
        """Dense Fourier differentiation matrix (odd n).

        ``D[j, k] = (-1)**(j-k) / (2 sin((j-k) pi / n))`` off the diagonal.
        """
        n = self.n
        k = np.arange(n)
        offs = k[:, None] - k[None, :]
        with np.errstate(divide="ignore"):
            d = 0.5 * (-1.0) ** offs / np.sin(offs * np.pi / n)
        d[offs == 0] = 0.0
        # enforce antisymmetry bitwise
        d = 0.5 * (d - d.T)
        d.setflags(write=False)
        return d

    @cached_property
    def _stencil(self) -> np.ndarray:
        # D is circulant; D[j, k] depends on (j - k) mod n only
        c = np.ascontiguousarray(self.diff_matrix[::-1, 0])
        c.setflags(write=False)
        return c


@lru_cache(maxsize=32)
def get_grid(n: int) -> PeriodicGrid:
    """Shared grid instance for size ``n``."""
    return PeriodicGrid(int(n))


def _grid_of(u, grid=None) -> PeriodicGrid:
    u = np.asarray(u)
    if grid is None:
        return get_grid(u.shape[0])
    if u.shape[0] != grid.n:
        raise ValidationError(f"field has {u.shape[0]} samples, grid has {grid.n}")
    return grid


def _circulant_apply(grid, u):
    n = grid.n
    w = np.concatenate([u, u], axis=0)
    step = w.strides
    # window[j, ..., i] = u[(j + 1 + i) mod n]; built directly to skip view-helper overhead
    window = np.ndarray(
        (n,) + u.shape[1:] + (n,), dtype=float, buffer=w, offset=step[0], strides=(step[0],) + step[1:] + (step[0],)
    )
    # every output entry sums the same products in the same order,
    # so cyclic shifts of u give bitwise-shifted results
    return np.einsum("...i,i->...", window, grid._stencil)


def diff_theta(u, grid=None, method="circulant"):
    """Spectral derivative d/dtheta of a scalar or vector field.

    Parameters
    ----------
    u : array, shape (n,) or (n, d)
    grid : PeriodicGrid, optional
        Checked against ``len(u)`` when given.
    method : {"circulant", "matrix", "fft"}
        ``circulant`` applies the differentiation matrix row by row with a
        fixed summation order and commutes exactly with grid rotations.
        ``matrix`` is the dense product (faster, same values to rounding);
        ``fft`` is the transform round trip.
    """
    u = np.asarray(u, dtype=float)
    grid = _grid_of(u, grid)
    if method == "circulant":
        return _circulant_apply(grid, u)
    if method == "matrix":
        return grid.diff_matrix @ u
    if method == "fft":
        ik = 1j * grid.wavenumbers
        if u.ndim > 1:
            ik = ik.reshape((-1,) + (1,) * (u.ndim - 1))
        return np.fft.ifft(ik * np.fft.fft(u, axis=0), axis=0).real
    raise ValidationError(f"unknown differentiation method {method!r}")


def quadrature(u) -> float | np.ndarray:
    """Rectangle rule ``(2 pi / n) * sum_j u_j`` along axis 0."""
    u = np.asarray(u, dtype=float)
    return TWO_PI / u.shape[0] * u.sum(axis=0)


def fourier_coefficients(u) -> np.ndarray:
    """Parseval-normalized DFT along axis 0 (numpy FFT mode order)."""
    u = np.asarray(u, dtype=float)
    return np.sqrt(TWO_PI) / u.shape[0] * np.fft.fft(u, axis=0)


def total_energy(u) -> float:
    """``quadrature(|u|^2)``, summed over vector components."""
    u = np.asarray(u, dtype=float)
    return float(np.sum(quadrature(u * u)))


def fourier_tail_energy(u, cutoff: int) -> float:
    """Fourier energy carried by modes with ``|nu| >= cutoff``."""
    u = np.asarray(u, dtype=float)
    grid = _grid_of(u)
    if not 0 <= cutoff < grid.n / 2:
        raise ValidationError(f"cutoff must lie in [0, n/2), got {cutoff}")
    c = fourier_coefficients(u)
    mask = np.abs(grid.wavenumbers) >= cutoff
    return float(np.sum(np.abs(c[mask]) ** 2))


def trig_interpolate(u, x) -> np.ndarray:
    """Evaluate the band-limited interpolant of ``u`` at arbitrary angles ``x``."""
    u = np.asarray(u, dtype=float)
    grid = _grid_of(u)
    c = np.fft.fft(u, axis=0) / grid.n
    basis = np.exp(1j * np.outer(np.asarray(x, dtype=float), grid.wavenumbers))
    return (basis @ c).real


def resample(u, phi, grid=None) -> np.ndarray:
    """Compose a field with a circle map: returns ``u o phi`` at the nodes.

    ``phi`` holds the angles ``phi(theta_j)`` of a strictly increasing
    degree-one circle map. A rigid rotation by a whole number of grid cells
    is applied as an exact cyclic shift.
    """
    u = np.asarray(u, dtype=float)
    grid = _grid_of(u, grid)
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (grid.n,):
        raise ValidationError("phi must be a scalar field on the grid")
    disp = phi - grid.theta
    # whole-cell rotations (up to the rounding of theta + k h) become exact shifts
    shift = float(np.mean(disp)) / grid.spacing
    if np.ptp(disp) <= 1e-13 * TWO_PI and abs(shift - np.round(shift)) <= 1e-9:
        return np.roll(u, -int(np.round(shift)) % grid.n, axis=0)
    dphi = 1.0 + diff_theta(disp, grid)
    if np.any(dphi <= 0.0):
        raise ValidationError("phi is not strictly increasing (phi' <= 0 at some node)")
    return trig_interpolate(u, phi)


def rotation_map(k: int, n: int) -> np.ndarray:
    """Angles of the rotation by ``k`` grid cells, for use with :func:`resample`."""
    grid = get_grid(n)
    return grid.theta + k * grid.spacing


def random_smooth_field(n, d=None, rng=None, amplitude=1.0, decay=0.6, max_mode=None):
    """Random analytic field with geometrically decaying Fourier modes.

    Mode ``nu`` has standard deviation ``amplitude * exp(-decay * |nu|)``.
    Returns shape ``(n,)`` when ``d`` is None, else ``(n, d)``.
    """
    rng = np.random.default_rng(rng)
    grid = get_grid(n)
    top = grid.max_mode if max_mode is None else min(max_mode, grid.max_mode)
    shape = (1,) if d is None else (d,)
    modes = np.arange(top + 1)
    scale = amplitude * np.exp(-decay * modes)
    a = rng.standard_normal((top + 1,) + shape) * scale[:, None]
    b = rng.standard_normal((top + 1,) + shape) * scale[:, None]
    b[0] = 0.0
    arg = np.outer(grid.theta, modes)
    out = np.cos(arg) @ a + np.sin(arg) @ b
    return out[:, 0] if d is None else out
