"""Orthogonal polynomials and combinatorics on the hypersphere.

All polynomial evaluations use three-term recurrences and accept scalars or
numpy arrays for the argument ``t``.  Factorial ratios go through ``math.lgamma``
or exact integer arithmetic.
"""
from __future__ import annotations

import math

import numpy as np

from .exceptions import DomainError

BOUNDARY_TOL = 1e-12
INT64_MAX = 2**63 - 1


def _clip_unit(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + BOUNDARY_TOL):
        raise DomainError("argument must lie in [-1, 1]")
    return np.clip(t, -1.0, 1.0)


def _as_output(value, like):
    return float(value) if np.ndim(like) == 0 else value


def gegenbauer(n: int, eta: float, t):
    """Gegenbauer polynomial C_n^(eta)(t) by the standard recurrence.

    ``n * C_n = 2 t (n + eta - 1) C_{n-1} - (n + 2 eta - 2) C_{n-2}``,
    started from ``C_0 = 1`` and ``C_1 = 2 eta t``.  Negative ``n`` returns 0,
    which is the convention used in the telescoping identities.
    """
    if eta <= 0:
        raise DomainError(f"eta must be positive, got {eta}")
    x = _clip_unit(t)
    if n < 0:
        return _as_output(np.zeros_like(x), t)
    prev = np.ones_like(x)
    if n == 0:
        return _as_output(prev, t)
    cur = 2.0 * eta * x
    for k in range(2, n + 1):
        prev, cur = cur, (2.0 * x * (k + eta - 1.0) * cur - (k + 2.0 * eta - 2.0) * prev) / k
    return _as_output(cur, t)


def gegenbauer_all(n_max: int, eta: float, t) -> np.ndarray:
    """Rows C_0..C_{n_max} of the Gegenbauer recurrence at ``t``."""
    if eta <= 0:
        raise DomainError(f"eta must be positive, got {eta}")
    x = _clip_unit(t)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 2.0 * eta * x
    for k in range(2, n_max + 1):
        out[k] = (2.0 * x * (k + eta - 1.0) * out[k - 1] - (k + 2.0 * eta - 2.0) * out[k - 2]) / k
    return out


def gegenbauer_at_one(n: int, eta: float) -> float:
    """C_n^(eta)(1) = Gamma(n + 2 eta) / (n! Gamma(2 eta))."""
    if eta <= 0:
        raise DomainError(f"eta must be positive, got {eta}")
    if n < 0:
        return 0.0
    return math.exp(math.lgamma(n + 2 * eta) - math.lgamma(n + 1) - math.lgamma(2 * eta))


def legendre_sphere(n: int, dplus1: int, t):
    """Legendre polynomial P_{n,d+1}(t) of the (d+1)-dimensional sphere.

    For ``dplus1 == 2`` this is ``cos(n arccos t)``.  Otherwise the normalized
    recurrence

        (n + d - 1) P_{n+1} = (2n + d - 1) t P_n - n P_{n-1}

    is used; every iterate stays bounded by one, so nothing overflows.
    """
    if dplus1 < 2:
        raise DomainError(f"dplus1 must be >= 2, got {dplus1}")
    if n < 0:
        raise DomainError(f"degree must be nonnegative, got {n}")
    x = _clip_unit(t)
    if dplus1 == 2:
        return _as_output(np.cos(n * np.arccos(x)), t)
    d = dplus1 - 1
    prev = np.ones_like(x)
    if n == 0:
        return _as_output(prev, t)
    cur = x.copy()
    for k in range(1, n):
        prev, cur = cur, ((2 * k + d - 1) * x * cur - k * prev) / (k + d - 1)
    return _as_output(cur, t)


def legendre_sphere_all(n_max: int, dplus1: int, t) -> np.ndarray:
    """Rows P_{0,d+1}..P_{n_max,d+1} at ``t``."""
    if dplus1 < 2:
        raise DomainError(f"dplus1 must be >= 2, got {dplus1}")
    x = _clip_unit(t)
    d = dplus1 - 1
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = x
    for k in range(1, n_max):
        out[k + 1] = ((2 * k + d - 1) * x * out[k] - k * out[k - 1]) / (k + d - 1)
    return out


def legendre_sphere_sum(n: int, dplus1: int, t):
    """P_{n,d+1}(t) from its explicit finite sum over k <= n/2.

    Kept as an independent route for cross-checks; it loses accuracy for large
    ``n`` through cancellation, so library code uses :func:`legendre_sphere`.
    """
    if dplus1 < 2:
        raise DomainError(f"dplus1 must be >= 2, got {dplus1}")
    x = _clip_unit(t)
    d = dplus1 - 1
    total = np.zeros_like(x)
    half_d = d / 2.0
    log_pref = math.lgamma(n + 1) + math.lgamma(half_d)
    for k in range(n // 2 + 1):
        log_c = log_pref - (k * math.log(4.0) + math.lgamma(k + 1) + math.lgamma(n - 2 * k + 1)
                            + math.lgamma(k + half_d))
        total = total + (-1) ** k * math.exp(log_c) * (1.0 - x * x) ** k * x ** (n - 2 * k)
    return _as_output(total, t)


def legendre_from_gegenbauer(n: int, dplus1: int, t):
    """P_{n,d+1}(t) = n! (d-2)! / (n+d-2)! * C_n^((d-1)/2)(t), valid for d >= 2."""
    d = dplus1 - 1
    if d < 2:
        raise DomainError("the Gegenbauer rescaling needs d >= 2")
    scale = math.exp(math.lgamma(n + 1) + math.lgamma(d - 1) - math.lgamma(n + d - 1))
    return scale * gegenbauer(n, (d - 1) / 2.0, t)


def dirichlet(N: int, t):
    """Dirichlet kernel 1 + 2 sum_{n<=N} cos(n t) = sin((N + 1/2) t) / sin(t / 2).

    At ``t == 0`` the continuous extension ``1 + 2N`` is returned.
    """
    if N < 0:
        raise DomainError(f"N must be nonnegative, got {N}")
    x = np.asarray(t, dtype=float)
    if np.any((x < 0) | (x > np.pi + BOUNDARY_TOL)):
        raise DomainError("t must lie in [0, pi]")
    s = np.sin(x / 2.0)
    small = np.abs(s) < 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin((N + 0.5) * x) / np.where(small, 1.0, s)
    val = np.where(small, 1.0 + 2.0 * N, val)
    return _as_output(val, t)


def harmonic_dim(n: int, dplus1: int) -> int:
    """Dimension N_{n,d+1} of degree-n spherical harmonics on S^d.

    Computed exactly as C(n+d, d) - C(n+d-2, d), which equals
    (2n+d-1)(n+d-2)! / (n! (d-1)!) and also covers the n = 0, d = 1 corner.
    """
    if dplus1 < 2:
        raise DomainError(f"dplus1 must be >= 2, got {dplus1}")
    if n < 0:
        raise DomainError(f"degree must be nonnegative, got {n}")
    d = dplus1 - 1
    value = math.comb(n + d, d) - (math.comb(n + d - 2, d) if n >= 2 else 0)
    if value > INT64_MAX:
        raise OverflowError(f"N_({n},{dplus1}) = {value} exceeds the int64 range")
    return value


def sphere_area(d: int) -> float:
    """Surface area |S^d| = 2 pi^((d+1)/2) / Gamma((d+1)/2).

    ``d = 0`` is accepted and gives 2, the counting measure of S^0.
    """
    if d < 0:
        raise DomainError(f"d must be nonnegative, got {d}")
    return 2.0 * math.pi ** ((d + 1) / 2.0) / math.gamma((d + 1) / 2.0)


def hermite(n: int, x):
    """Physicists' Hermite polynomial H_n(x); H_{n+1} = 2x H_n - 2n H_{n-1}."""
    if n < 0:
        raise DomainError(f"degree must be nonnegative, got {n}")
    xa = np.asarray(x, dtype=float)
    prev = np.ones_like(xa)
    if n == 0:
        return _as_output(prev, x)
    cur = 2.0 * xa
    for k in range(1, n):
        prev, cur = cur, 2.0 * xa * cur - 2.0 * k * prev
    return _as_output(cur, x)


def hermite_all(n_max: int, x) -> np.ndarray:
    xa = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + xa.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 2.0 * xa
    for k in range(1, n_max):
        out[k + 1] = 2.0 * xa * out[k] - 2.0 * k * out[k - 1]
    return out
