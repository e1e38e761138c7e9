"""Pointwise hot loops shared by the Taylor-hierarchy marcher.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version with identical semantics. The numba path is used when numba
imports cleanly and ``GPAM_LAPLACE_DISABLE_NUMBA`` is unset (or ``0``).
"""
import math
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAS_NUMBA = False

_DISABLED = os.environ.get("GPAM_LAPLACE_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")
USE_NUMBA = HAS_NUMBA and not _DISABLED


def _inv_factorials(K):
    return np.array([1.0 / math.factorial(k) for k in range(K + 1)])


def compose_series_numpy(dvals, coeffs):
    """Taylor coefficients of ``f(base + U(eps))`` at every point.

    Parameters
    ----------
    dvals : ndarray, shape (K+1, Q)
        ``f^(k)(base)`` for ``k = 0..K``.
    coeffs : ndarray, shape (M, S, Q)
        Coefficients ``c_1..c_M`` of ``U(eps) = sum_j eps^j c_j``.

    Returns
    -------
    ndarray, shape (M+1, S, Q)
        ``[eps^j] f(base + U)`` for ``j = 0..M``. Requires ``K >= M``.
    """
    M, S, Q = coeffs.shape
    if dvals.shape[0] < M + 1:
        raise ValueError("need derivatives up to order %d" % M)
    invf = _inv_factorials(M)
    out = np.zeros((M + 1, S, Q))
    out[0] = dvals[0]
    # pw[j] = [eps^j] U^k; U^k has no terms below order k
    pw = np.zeros((M + 1, S, Q))
    pw[1:] = coeffs
    for k in range(1, M + 1):
        out[k:] += (dvals[k] * invf[k]) * pw[k:]
        if k < M:
            nxt = np.zeros_like(pw)
            for j in range(k + 1, M + 1):
                acc = nxt[j]
                for i in range(1, j - k + 1):
                    acc += coeffs[i - 1] * pw[j - i]
            pw = nxt
    return out


def source_series_numpy(gvals, coeffs, drive, shift, c):
    """Taylor coefficients of the renormalised shifted nonlinearity.

    Expands ``g(u)(eps*drive + shift - eps^2 c g'(u))`` with
    ``u = base + sum_j eps^j c_j`` and returns orders ``1..M``.

    Parameters
    ----------
    gvals : ndarray, shape (M+2, Q)
        ``g^(k)(base)``, ``k = 0..M+1``.
    coeffs : ndarray, shape (M, S, Q)
    drive : ndarray, shape (S, Q)
    shift : ndarray, shape (Q,)
    c : float

    Returns
    -------
    ndarray, shape (M, S, Q)
    """
    M = coeffs.shape[0]
    G = compose_series_numpy(gvals[: M + 1], coeffs)
    out = np.empty_like(coeffs)
    Gp = compose_series_numpy(gvals[1 : M + 1], coeffs[: M - 1]) if M >= 2 else None
    for j in range(1, M + 1):
        s = G[j - 1] * drive + G[j] * shift
        if j >= 2:
            prod = np.zeros_like(drive)
            for i in range(j - 1):
                prod += G[i] * Gp[j - 2 - i]
            s -= c * prod
        out[j - 1] = s
    return out


if HAS_NUMBA:

    @njit(cache=True, fastmath=True)
    def _source_series_jit(gvals, coeffs, drive, shift, c, invf, out):
        M, S, Q = coeffs.shape
        # orders k above kmax have g^(k) = g^(k+1) = 0 everywhere
        kmax = 0
        for k in range(M + 1):
            for q in range(Q):
                if gvals[k, q] != 0.0 or gvals[k + 1, q] != 0.0:
                    kmax = k
                    break
        pw = np.empty((M + 1, Q))
        nxt = np.empty((M + 1, Q))
        G = np.empty((M + 1, Q))
        Gp = np.empty((M + 1, Q))
        for s in range(S):
            # G, Gp: series of g(u), g'(u) built from the powers of U
            G[:] = 0.0
            Gp[:] = 0.0
            pw[:] = 0.0
            pw[0, :] = 1.0
            for k in range(kmax + 1):
                for j in range(k, M + 1):
                    for q in range(Q):
                        G[j, q] += gvals[k, q] * invf[k] * pw[j, q]
                        Gp[j, q] += gvals[k + 1, q] * invf[k] * pw[j, q]
                if k < kmax:
                    nxt[:] = 0.0
                    for j in range(k + 1, M + 1):
                        for i in range(1, j - k + 1):
                            for q in range(Q):
                                nxt[j, q] += coeffs[i - 1, s, q] * pw[j - i, q]
                    pw[:] = nxt
            for j in range(1, M + 1):
                for q in range(Q):
                    out[j - 1, s, q] = G[j - 1, q] * drive[s, q] + G[j, q] * shift[q]
                for i in range(j - 1):
                    for q in range(Q):
                        out[j - 1, s, q] -= c * G[i, q] * Gp[j - 2 - i, q]

    def source_series_numba(gvals, coeffs, drive, shift, c):
        M, S, Q = coeffs.shape
        if gvals.shape[0] < M + 2:
            raise ValueError("need derivatives up to order %d" % (M + 1))
        out = np.empty((M, S, Q))
        _source_series_jit(
            np.ascontiguousarray(gvals, dtype=np.float64),
            np.ascontiguousarray(coeffs, dtype=np.float64),
            np.ascontiguousarray(drive, dtype=np.float64),
            np.ascontiguousarray(shift, dtype=np.float64),
            float(c),
            _inv_factorials(M + 1),
            out,
        )
        return out

else:  # pragma: no cover
    source_series_numba = None


def source_series(gvals, coeffs, drive, shift, c):
    """Dispatch to the numba kernel when enabled, else numpy."""
    if USE_NUMBA:
        return source_series_numba(gvals, coeffs, drive, shift, c)
    return source_series_numpy(gvals, coeffs, drive, shift, c)
