"""Built-in nonlinearities ``g`` with analytic derivatives of every order."""
from dataclasses import dataclass
from math import factorial

import numpy as np


@dataclass(frozen=True)
class NonlinearitySpec:
    """``g`` together with ``g', g'', ...`` and uniform bounds on each.

    ``derivs(u, K)`` returns an array of shape ``(K+1,) + u.shape`` holding
    ``g^(k)(u)`` for ``k = 0..K``.
    """

    name: str

    def derivs(self, u, K: int):
        u = np.asarray(u, dtype=float)
        return _DERIVS[self.name](u, K)

    def __call__(self, u):
        return self.derivs(u, 0)[0]

    def bound(self, k: int) -> float:
        """``sup |g^(k)|``."""
        return _BOUNDS[self.name](k)

    @property
    def is_constant(self) -> bool:
        return self.name in ("one", "zero")


def _cos(u, K):
    # derivatives cycle through cos, -sin, -cos, sin
    out = np.empty((K + 1,) + u.shape)
    out[0] = np.cos(u)
    if K >= 1:
        np.sin(u, out=out[1])
        np.negative(out[1], out=out[1])
    for k in range(2, K + 1):
        np.negative(out[k - 2], out=out[k])
    return out


def _rational(u, K):
    # 1/(1+u^2) = Im 1/(u - i); d^k/du^k (u - i)^-1 = (-1)^k k! (u - i)^-(k+1)
    z = 1.0 / (u - 1j)
    out = np.empty((K + 1,) + u.shape)
    zp = z
    for k in range(K + 1):
        out[k] = (-1) ** k * factorial(k) * zp.imag
        zp = zp * z
    return out


def _one(u, K):
    out = np.zeros((K + 1,) + u.shape)
    out[0] = 1.0
    return out


def _zero(u, K):
    return np.zeros((K + 1,) + u.shape)


_DERIVS = {"cos": _cos, "rational": _rational, "one": _one, "zero": _zero}
_BOUNDS = {
    "cos": lambda k: 1.0,
    "rational": lambda k: float(factorial(k)),
    "one": lambda k: 1.0 if k == 0 else 0.0,
    "zero": lambda k: 0.0,
}


def get_nonlinearity(name: str) -> NonlinearitySpec:
    if name not in _DERIVS:
        raise ValueError("unknown nonlinearity %r (choose from %s)" % (name, sorted(_DERIVS)))
    return NonlinearitySpec(name)
