"""Finite combinatorics of the small-noise expansion.

Compositions ``S_k^m``, the composition form of Faa di Bruno's formula,
the index maps ``pi: {1..k} -> {3..N+2}`` and the weights ``W_m`` that
multiply ``eps^m`` inside the Laplace prefactor.
"""
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from math import factorial
from typing import Sequence, Tuple

import numpy as np

# exact integers; N + 2 <= 20 keeps every factorial below 2**63
FACTORIALS = tuple(factorial(j) for j in range(21))


@lru_cache(maxsize=None)
def compositions(k: int, m: int) -> Tuple[Tuple[int, ...], ...]:
    """All ``i in N_{>=1}^k`` with ``|i| = m``, in lexicographic order."""
    if k < 1 or m < 1:
        raise ValueError("k and m must be >= 1")
    if k > m:
        return ()
    if k == 1:
        return ((m,),)
    out = []
    for first in range(1, m - k + 2):
        for rest in compositions(k - 1, m - first):
            out.append((first,) + rest)
    return tuple(out)


def riordan_derivative(f_derivs: Sequence, g_derivs: Sequence, m: int):
    """``d^m/de^m f(g(e))`` from derivative values at one point.

    ``f_derivs[k]`` is ``f^(k)`` evaluated at ``g(e)`` and ``g_derivs[i]`` is
    ``g^(i)(e)``; entry 0 of ``g_derivs`` is ignored. Works for floats,
    ``Fraction`` and numpy arrays alike.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if len(f_derivs) < m + 1 or len(g_derivs) < m + 1:
        raise ValueError("need derivatives up to order %d" % m)
    total = 0
    for k in range(1, m + 1):
        inner = 0
        for comp in compositions(k, m):
            term = 1
            denom = 1
            for i in comp:
                term = term * g_derivs[i]
                denom *= FACTORIALS[i]
            inner = inner + term / denom
        # m!/k! is an exact integer for k <= m
        total = total + f_derivs[k] * inner * (FACTORIALS[m] // FACTORIALS[k])
    return total


# --------------------------------------------------------------- maps G(k,N)


@dataclass(frozen=True)
class ExpansionMap:
    """A map ``pi: {1..k} -> {3..N+2}`` stored as its value tuple."""

    values: Tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.values)

    @property
    def ell(self) -> int:
        return sum(v - 2 for v in self.values)

    @property
    def size(self) -> int:
        return sum(self.values)


def maps_G(k: int, N: int, predicate: str = "all", m: int = None):
    """Enumerate ``G(k, N)`` filtered by ``predicate``.

    ``predicate`` is one of ``"all"``, ``"le"`` (``ell <= N``), ``"gt"``
    (``ell > N``) or ``"eq"`` (``ell == m``, requires ``m``).
    """
    if not 1 <= k <= N:
        raise ValueError("need 1 <= k <= N, got k=%d, N=%d" % (k, N))
    if predicate == "eq" and m is None:
        raise ValueError("predicate 'eq' needs m")
    return list(_maps_cached(k, N, predicate, m))


@lru_cache(maxsize=None)
def _maps_cached(k, N, predicate, m):
    keep = {
        "all": lambda p: True,
        "le": lambda p: p.ell <= N,
        "gt": lambda p: p.ell > N,
        "eq": lambda p: p.ell == m,
    }[predicate]
    maps = (ExpansionMap(v) for v in product(range(3, N + 3), repeat=k))
    return tuple(p for p in maps if keep(p))


def weights_W(fhat, N: int):
    """Weights ``W_0..W_N``.

    ``fhat`` maps the order ``j`` (``3 <= j <= N+2``) to the value of the
    j-th functional Taylor coefficient; it may be a dict or a sequence
    indexed by ``j``. Values may be numpy arrays (one entry per sample).
    """
    W = [1.0]
    for mm in range(1, N + 1):
        total = 0.0
        for k in range(1, mm + 1):
            sign = (-1) ** k / FACTORIALS[k]
            acc = 0.0
            for p in maps_G(k, N, "eq", mm):
                term = 1.0
                for v in p.values:
                    term = term * fhat[v] / FACTORIALS[v]
                acc = acc + term
            total = total + sign * acc
        W.append(total)
    return W


# ------------------------------------------------------------ formal series


@dataclass(frozen=True)
class FormalSeries:
    """Truncated power series ``c_0 + c_1 e + ... + c_N e^N``."""

    coeffs: Tuple[float, ...]

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __add__(self, other):
        return FormalSeries(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __mul__(self, other):
        if not isinstance(other, FormalSeries):
            return FormalSeries(tuple(other * a for a in self.coeffs))
        N = min(self.order, other.order)
        a, b = self.coeffs, other.coeffs
        return FormalSeries(tuple(sum(a[i] * b[j - i] for i in range(j + 1)) for j in range(N + 1)))

    __rmul__ = __mul__


def series_exp_truncate(s: FormalSeries) -> FormalSeries:
    """``exp(s)`` truncated at the order of ``s``; needs ``s.coeffs[0] == 0``.

    Uses ``j e_j = sum_{i=1}^j i a_i e_{j-i}``, from ``E' = A' E``.
    """
    a = s.coeffs
    if np.any(np.asarray(a[0]) != 0):
        raise ValueError("series_exp_truncate needs a zero constant term")
    e = [1.0]
    for j in range(1, s.order + 1):
        e.append(sum(i * a[i] * e[j - i] for i in range(1, j + 1)) / j)
    return FormalSeries(tuple(e))
