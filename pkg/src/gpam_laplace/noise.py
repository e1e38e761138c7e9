"""Spatial white noise on the discrete torus and its renormalised products."""
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .spectral import (
    Mollifier,
    TorusGrid,
    apply_multiplier,
    dealias,
    green_multiplier,
    irfft,
    rfft,
)

KAPPA = 0.05
_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def hash64(seed: int, index: int) -> int:
    """Per-sample seed: ``splitmix64(splitmix64(seed) XOR index)``."""
    return _splitmix64(_splitmix64(seed & _MASK64) ^ (index & _MASK64))


def sample_seeds(seed: int, count: int, start: int = 0):
    return [hash64(seed, i) for i in range(start, start + count)]


@dataclass(frozen=True)
class NoiseRealization:
    """One white-noise sample; ``coeffs[k] = <xi, e_k>`` in ``fft2`` layout."""

    grid: TorusGrid
    coeffs: np.ndarray = field(repr=False)
    seed: int

    @property
    def values(self):
        """Grid representative; ``<xi, f> = sum(values * f) / n^2``."""
        return np.real(np.fft.ifft2(self.coeffs)) * self.grid.n**2

    def scaled(self, eps: float) -> "NoiseRealization":
        return NoiseRealization(self.grid, eps * self.coeffs, self.seed)


def _white_values(grid: TorusGrid, seed: int):
    rng = np.random.default_rng(seed)
    # iid N(0, 1/h^2) per node; its unitary DFT has iid standard coefficients
    return rng.standard_normal(grid.shape) * grid.n


def sample_white_noise(grid: TorusGrid, seed: int) -> NoiseRealization:
    """Hermitian Gaussian coefficients with ``E|<xi, e_k>|^2 = 1``."""
    z = _white_values(grid, seed)
    coeffs = np.fft.fft2(z) / grid.n**2
    return NoiseRealization(grid, coeffs, seed)


def sample_noise_fields(grid: TorusGrid, seeds: Sequence[int]):
    """Grid values of several realizations, shape ``(len(seeds), n, n)``."""
    out = np.empty((len(seeds),) + grid.shape)
    for i, s in enumerate(seeds):
        out[i] = _white_values(grid, s)
    return out


def _values(xi, grid):
    if isinstance(xi, NoiseRealization):
        if xi.grid != grid:
            raise ValueError("noise realization lives on a different grid")
        return xi.values
    xi = np.asarray(xi, dtype=float)
    grid.check(xi)
    return xi


def pair(xi, h, grid: TorusGrid):
    """Paley-Wiener pairing ``xi(h) = sum_k conj(h_hat(k)) xi_hat(k)``."""
    if isinstance(xi, NoiseRealization) and xi.grid != grid:
        raise ValueError("noise realization lives on a different grid")
    h = np.asarray(h, dtype=float)
    if h.shape[-2:] != grid.shape:
        raise ValueError("h does not live on the noise grid")
    return grid.inner(_values(xi, grid), h)


# ----------------------------------------------------------- renormalisation


@dataclass(frozen=True)
class RenormConstant:
    delta: float
    value: float


def renorm_constant(grid: TorusGrid, mollifier: Mollifier) -> RenormConstant:
    """``c_delta = sum_{k != 0} chi(delta|k|)^2 / (4 pi^2 |k|^2)`` over grid modes."""
    mollifier.check(grid)
    chi = mollifier.full_multiplier(grid)
    ksq = grid.ksq
    nz = ksq > 0
    value = float(np.sum(chi[nz] ** 2 / (4.0 * np.pi**2 * ksq[nz])))
    return RenormConstant(mollifier.delta, value)


@dataclass
class SecondOrderObject:
    """``(K * xi_d) xi_d - c`` with the ingredients needed for recentring."""

    xi_delta: np.ndarray
    k_xi: np.ndarray
    values: np.ndarray
    c: float

    def recentred(self, z):
        """Field ``y -> ((K xi_d)(y) - (K xi_d)(z)) xi_d(y) - c`` for node ``z = (i, j)``."""
        i, j = z
        return self.values - self.k_xi[..., i, j, None, None] * self.xi_delta


def second_order_object(xi, grid: TorusGrid, mollifier: Mollifier, c: float, eps: float = 1.0):
    """Wick-renormalised square for noise ``eps * xi`` and constant ``eps^2 c``.

    ``xi`` may be a realization, one field or a batch of fields.
    """
    mollifier.check(grid)
    xd = eps * apply_multiplier(_values_any(xi, grid), mollifier.multiplier(grid), grid.n)
    kx = apply_multiplier(xd, green_multiplier(grid), grid.n)
    vals = dealias(kx * xd, grid) - eps**2 * c
    return SecondOrderObject(xd, kx, vals, eps**2 * c)


def _values_any(xi, grid):
    if isinstance(xi, NoiseRealization):
        return _values(xi, grid)
    xi = np.asarray(xi, dtype=float)
    grid.check(xi)
    return xi


# ---------------------------------------------------------------- model norm


@dataclass
class ModelNormEstimate:
    norm_xi: np.ndarray
    norm_11: np.ndarray
    combined: np.ndarray
    scales: tuple
    stride: int


def bump(r):
    """C^2 radial bump ``(4/pi)(1 - r^2)^3`` on the unit disc (unit mass)."""
    r = np.asarray(r, dtype=float)
    return np.where(r < 1.0, (4.0 / np.pi) * (1.0 - r**2) ** 3, 0.0)


def _bump_multiplier(grid: TorusGrid, lam: float):
    x1, x2 = grid.coords
    d1 = np.minimum(x1, 1.0 - x1)
    d2 = np.minimum(x2, 1.0 - x2)
    phi = bump(np.hypot(d1, d2) / lam) / lam**2
    phi /= phi.sum() / grid.n**2
    # (f * phi)(z) = <f, phi_z> once divided by n^2
    return rfft(phi) / grid.n**2


def dyadic_scales(grid: TorusGrid, J: int):
    scales = tuple(2.0 ** (-j) for j in range(1, J + 1))
    for lam in scales:
        if lam * grid.n < 4:
            raise ValueError("scale %g is not resolved on a %d^2 grid" % (lam, grid.n))
    return scales


def model_norm_approx(
    xi,
    grid: TorusGrid,
    mollifier: Mollifier,
    c: float,
    scales=3,
    stride: int = 4,
    eps: float = 1.0,
    kappa: float = KAPPA,
) -> ModelNormEstimate:
    """Finite-frame surrogate of the homogeneous model norm.

    Maximises ``lam^{1+kappa} |<xi_d, phi_z^lam>|`` and
    ``lam^{2 kappa} |<Pi_z <11>, phi_z^lam>|`` over dyadic ``lam`` and base
    points ``z`` on a strided sub-lattice; the combined value is
    ``max(norm_xi, sqrt(norm_11))``. ``scales`` is either ``J`` or an
    explicit tuple of scales.
    """
    if isinstance(scales, int):
        scales = dyadic_scales(grid, scales)
    obj = second_order_object(xi, grid, mollifier, c, eps)
    xh = rfft(obj.xi_delta)
    yh = rfft(obj.values)
    kz = obj.k_xi[..., ::stride, ::stride]
    batch = obj.xi_delta.shape[:-2]
    nx = np.zeros(batch)
    n11 = np.zeros(batch)
    for lam in scales:
        bm = _bump_multiplier(grid, lam)
        tx = irfft(xh * bm, grid.n)[..., ::stride, ::stride]
        ty = irfft(yh * bm, grid.n)[..., ::stride, ::stride]
        t11 = ty - kz * tx
        nx = np.maximum(nx, lam ** (1.0 + kappa) * np.abs(tx).max(axis=(-2, -1)))
        n11 = np.maximum(n11, lam ** (2.0 * kappa) * np.abs(t11).max(axis=(-2, -1)))
    combined = np.maximum(nx, np.sqrt(n11))
    return ModelNormEstimate(nx, n11, combined, tuple(scales), stride)
