"""Discrete unit torus, Fourier multipliers and the heat semigroup.

Fields are plain ``float64`` arrays whose last two axes are the grid; any
leading axes are batch axes. Fourier coefficients follow the L2-normalised
convention ``f_hat(k) = <f, e_k>`` with ``e_k(x) = exp(2 pi i k.x)``, so that
``<f, g> = sum_k f_hat(k) conj(g_hat(k))``.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

FOUR_PI2 = 4.0 * np.pi**2


class ExplodedFieldError(FloatingPointError):
    """Raised when a transform receives NaN/Inf values."""


@dataclass(frozen=True)
class TorusGrid:
    """``n x n`` nodes on the unit torus, wavenumbers ``{-n/2, ..., n/2-1}^2``."""

    n: int

    def __post_init__(self):
        if self.n <= 0 or self.n % 2:
            raise ValueError("grid size must be a positive even integer, got %r" % self.n)

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self):
        return (self.n, self.n)

    @cached_property
    def coords(self):
        x = np.arange(self.n) * self.spacing
        return np.meshgrid(x, x, indexing="ij")

    @cached_property
    def wavenumbers(self):
        """Integer wavenumbers in ``fft2`` layout, each of shape (n, n)."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(int)
        return np.meshgrid(k, k, indexing="ij")

    @cached_property
    def ksq(self):
        k1, k2 = self.wavenumbers
        return (k1**2 + k2**2).astype(float)

    @cached_property
    def rwavenumbers(self):
        """Wavenumbers in ``rfft2`` layout (last axis halved)."""
        k1 = np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(int)
        k2 = np.fft.rfftfreq(self.n, d=1.0 / self.n).round().astype(int)
        return np.meshgrid(k1, k2, indexing="ij")

    @cached_property
    def rksq(self):
        k1, k2 = self.rwavenumbers
        return (k1**2 + k2**2).astype(float)

    @cached_property
    def dealias_mask(self):
        """Two-thirds rule in rfft layout: keep ``|k_i| < n/3`` on both axes."""
        k1, k2 = self.rwavenumbers
        cut = self.n / 3.0
        return ((np.abs(k1) < cut) & (np.abs(k2) < cut)).astype(float)

    def inner(self, f, g):
        """L2(T^2) inner product over the last two axes."""
        return np.sum(f * g, axis=(-2, -1)) / self.n**2

    def norm(self, f):
        return np.sqrt(self.inner(f, f))

    def check(self, f):
        if np.shape(f)[-2:] != self.shape:
            raise ValueError("field of shape %s does not live on a %d^2 grid" % (np.shape(f), self.n))


# ---------------------------------------------------------------- transforms


def rfft(f):
    return np.fft.rfft2(f)


def irfft(fh, n):
    return np.fft.irfft2(fh, s=(n, n))


def apply_multiplier(f, mult, n):
    """Multiply the Fourier modes of ``f`` by a real rfft-layout multiplier."""
    return irfft(rfft(f) * mult, n)


def forward_transform(f, grid: TorusGrid):
    """Full complex table ``<f, e_k>`` in ``fft2`` layout.

    Hermitian symmetry ``c(-k) = conj(c(k))`` is imposed explicitly, so the
    table is consistent even when rounding broke it.
    """
    f = np.asarray(f, dtype=float)
    grid.check(f)
    if not np.all(np.isfinite(f)):
        raise ExplodedFieldError("non-finite values in field")
    c = np.fft.fft2(f) / grid.n**2
    return hermitian_symmetrize(c)


def hermitian_symmetrize(c):
    flip = np.roll(np.flip(c, axis=(-2, -1)), 1, axis=(-2, -1))
    return 0.5 * (c + np.conj(flip))


def inverse_transform(c, grid: TorusGrid):
    """Real field from a coefficient table (imaginary rounding dropped)."""
    c = np.asarray(c)
    if not np.all(np.isfinite(c)):
        raise ExplodedFieldError("non-finite coefficients")
    return np.real(np.fft.ifft2(hermitian_symmetrize(c) * grid.n**2))


# ----------------------------------------------------------------- semigroup


def heat_multiplier(grid: TorusGrid, dt: float):
    return np.exp(-FOUR_PI2 * grid.rksq * dt)


def heat_step(f, dt: float, grid: TorusGrid):
    """Exact heat flow ``exp(dt * Laplacian) f``."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return np.array(f, dtype=float, copy=True)
    return apply_multiplier(f, heat_multiplier(grid, dt), grid.n)


def green_multiplier(grid: TorusGrid):
    """Zero-mean periodic Green's function of ``-Laplacian``: ``1/(4 pi^2 |k|^2)``."""
    m = np.zeros_like(grid.rksq)
    nz = grid.rksq > 0
    m[nz] = 1.0 / (FOUR_PI2 * grid.rksq[nz])
    return m


def green_convolve(f, grid: TorusGrid):
    return apply_multiplier(f, green_multiplier(grid), grid.n)


def laplacian(f, grid: TorusGrid):
    return apply_multiplier(f, -FOUR_PI2 * grid.rksq, grid.n)


def dealias(f, grid: TorusGrid):
    return apply_multiplier(f, grid.dealias_mask, grid.n)


# --------------------------------------------------------------- mollifiers


def _smooth_step(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def flat_top_cutoff(r):
    """C-infinity cutoff: 1 on ``[0, 1/2]``, 0 on ``[1, inf)``."""
    r = np.abs(np.asarray(r, dtype=float))
    t = 2.0 * r - 1.0
    a = _smooth_step(1.0 - t)
    b = _smooth_step(t)
    return a / (a + b)


@dataclass(frozen=True)
class Mollifier:
    """Mass-one mollifier at scale ``delta`` with Fourier profile ``chi(delta |k|)``."""

    delta: float
    profile: Callable = flat_top_cutoff

    def check(self, grid: TorusGrid):
        if self.delta < 2.0 * grid.spacing * (1 - 1e-12):
            raise ValueError(
                "mollifier scale %g is below two grid spacings (%g)" % (self.delta, 2 * grid.spacing)
            )

    def multiplier(self, grid: TorusGrid):
        """Real, even rfft-layout multiplier with value 1 at k = 0."""
        return self.profile(self.delta * np.sqrt(grid.rksq))

    def full_multiplier(self, grid: TorusGrid):
        return self.profile(self.delta * np.sqrt(grid.ksq))


def mollify(f, mollifier: Mollifier, grid: TorusGrid):
    mollifier.check(grid)
    return apply_multiplier(f, mollifier.multiplier(grid), grid.n)
