"""Brute-force reference implementations used as test oracles.

Everything here is written from the defining sums with explicit loops and
shares no code with the package.
"""

import cmath
import math

import numpy as np


def dft(values):
    """``J_t(s_j) = (2 pi T)^-1/2 sum_{u=1..T} X_u(s_j) exp(-i u lambda_t)`` for ``t = -N..N``.

    Returns a dict keyed by ``t``.
    """
    values = np.asarray(values, dtype=float)
    T, k = values.shape
    N = (T - 1) // 2
    out = {}
    for t in range(-N, N + 1):
        lam = 2 * math.pi * t / T
        row = np.zeros(k, dtype=complex)
        for j in range(k):
            acc = 0j
            for u in range(1, T + 1):
                acc += values[u - 1, j] * cmath.exp(-1j * u * lam)
            row[j] = acc / math.sqrt(2 * math.pi * T)
        out[t] = row
    return out


def periodogram_double_sum(values, t):
    """``(2 pi T)^-1 sum_{s1,s2} X_s1(sigma) X_s2(tau) exp(-i lambda (s1 - s2))``."""
    values = np.asarray(values, dtype=float)
    T, k = values.shape
    lam = 2 * math.pi * t / T
    out = np.zeros((k, k), dtype=complex)
    for s1 in range(1, T + 1):
        for s2 in range(1, T + 1):
            out += np.outer(values[s1 - 1], values[s2 - 1]) * cmath.exp(-1j * lam * (s1 - s2))
    return out / (2 * math.pi * T)


def epanechnikov(x):
    return 1.5 * (1 - (x / math.pi) ** 2) if abs(x) <= math.pi else 0.0


def wrap_angle(x):
    return (x + math.pi) % (2 * math.pi) - math.pi


def smoothed(values, b, weight=epanechnikov, wrap=False):
    """Smoothed kernels for ``t = 0..N`` from the full-range sum over ``-N..N``."""
    values = np.asarray(values, dtype=float)
    T, k = values.shape
    N = (T - 1) // 2
    J = dft(values)
    P = {t: np.outer(J[t], np.conj(J[t])) for t in J}
    return smoothed_from_periodograms(P, T, b, weight, wrap)


def smoothed_from_periodograms(P, T, b, weight=epanechnikov, wrap=False):
    N = (T - 1) // 2
    k = P[0].shape[0]
    out = np.zeros((N + 1, k, k), dtype=complex)
    for u in range(N + 1):
        for t in range(-N, N + 1):
            d = 2 * math.pi * (u - t) / T
            if wrap:
                d = wrap_angle(d)
            out[u] += weight(d / b) * P[t]
        out[u] /= b * T
    return out


def hs_inner(a, b):
    k = a.shape[0]
    acc = 0j
    for i in range(k):
        for j in range(k):
            acc += a[i, j] * np.conj(b[i, j])
    return acc / k ** 2


def full_range(values_half):
    """Map ``t -> slice`` for ``t = -N..N`` using conjugation for negative ``t``."""
    N = values_half.shape[0] - 1
    return {t: (values_half[t] if t >= 0 else np.conj(values_half[-t])) for t in range(-N, N + 1)}


def u_statistic(fx_half, fy_half, T):
    fx, fy = full_range(fx_half), full_range(fy_half)
    return 2 * math.pi / T * sum(hs_inner(fx[t] - fy[t], fx[t] - fy[t]).real for t in fx)


def cv_score(ihat_full, T, b, weight=epanechnikov):
    """Direct loop over the leave-one-out estimator.

    ``ihat_full`` maps every ``t`` in ``-N..N`` to the averaged periodogram.
    """
    N = (T - 1) // 2
    total = 0.0
    for t in range(1, N + 1):
        g = 0.0
        for s in range(-N, N + 1):
            if s in (t, -t):
                continue
            g += weight(2 * math.pi * (t - s) / T / b) * ihat_full[s]
        g /= T * b
        if g <= 0:
            return math.inf
        total += math.log(g) + ihat_full[t] / g
    return total / N
