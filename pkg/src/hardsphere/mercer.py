"""Mercer eigenvalues of the squared-exponential kernel on S^d.

On the sphere the SE kernel is zonal, ``k(x, z) = kappa(x.z)`` with
``kappa(t) = exp(-2 (1 - t) / theta)``.  Its integral operator (Lebesgue
surface measure) has the degree-n spherical harmonics as eigenfunctions, with
eigenvalue ``lambda_n`` of multiplicity ``N_{n,d+1}``.

The Funk-Hecke integral

    lambda_n = |S^{d-1}| int_{-1}^{1} kappa(t) P_{n,d+1}(t) (1 - t^2)^{(d-2)/2} dt

is evaluated after n integrations by parts (Rodrigues' formula), which turns
the oscillating integrand into the positive one

    |S^{d-1}| R_n (2/theta)^n e^{-2/theta} int e^{2t/theta} (1 - t^2)^{n + (d-2)/2} dt,

with ``R_n = Gamma(d/2) / (2^n Gamma(n + d/2))``.  Gauss-Jacobi nodes absorb the
weight exactly, so the quadrature keeps full relative precision even when
``lambda_n`` is far below machine epsilon.  All eigenvalues are carried as
natural logarithms.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, roots_jacobi

from .exceptions import ConvergenceError, DomainError, RangeError
from .special import harmonic_dim, legendre_sphere, sphere_area

PROVENANCE_QUADRATURE = "quadrature"
PROVENANCE_BOUND = "analytic_lower_bound"


@dataclass(frozen=True)
class KernelParams:
    d: int
    theta: float

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"d must be >= 1, got {self.d}")
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta}")


def kappa(t, theta: float):
    """SE kernel as a function of the inner product of two unit vectors."""
    return np.exp(-2.0 * (1.0 - np.asarray(t, dtype=float)) / theta)


# -- analytic bounds ----------------------------------------------------------

def _bound_log_core(n: int, kp: KernelParams) -> float:
    base = 2 * n + kp.d - 1
    log_den = 0.0 if base == 0 else (n + kp.d / 2.0) * math.log(base)
    return n * math.log(2.0 * math.e / kp.theta) - log_den


def log_eigen_lower_bound(n: int, kp: KernelParams, C: float = 1.0) -> float:
    """log of (2e/theta)^n C / (2n + d - 1)^(n + d/2).

    The base ``2n + d - 1`` vanishes only at n = 0, d = 1; the power is then
    read as 1.
    """
    if n < 0:
        raise DomainError(f"degree must be nonnegative, got {n}")
    if not C > 0:
        raise DomainError(f"C must be positive, got {C}")
    return math.log(C) + _bound_log_core(n, kp)


def eigen_lower_bound(n: int, kp: KernelParams, C: float = 1.0) -> float:
    """Lower-bound eigenvalue; 0.0 once it underflows (see the log version)."""
    return math.exp(log_eigen_lower_bound(n, kp, C))


def log_eigen_upper_bound(n: int, kp: KernelParams, C_bar: float) -> float:
    """log of (2e/theta)^n |S^d| C_bar / (2n + d - 1)^(n + d/2)."""
    return math.log(sphere_area(kp.d) * C_bar) + _bound_log_core(n, kp)


# -- quadrature oracle -------------------------------------------------------

def _log_eigen_rodrigues(n: int, kp: KernelParams, nodes: int) -> float:
    d, theta = kp.d, kp.theta
    alpha = n + (d - 2) / 2.0
    t, w = roots_jacobi(nodes, alpha, alpha)
    log_int = logsumexp(np.log(w) + 2.0 * t / theta)
    return (math.log(sphere_area(d - 1)) - 2.0 / theta - n * math.log(theta)
            + math.lgamma(d / 2.0) - math.lgamma(n + d / 2.0) + float(log_int))


def log_eigen_quadrature(n: int, kp: KernelParams, nodes: int = 64) -> float:
    """log lambda_n by Gauss-Jacobi quadrature, verified by node doubling.

    Raises ConvergenceError when doubling the node count moves the result by
    1e-8 or more (relative).
    """
    if n < 0:
        raise DomainError(f"degree must be nonnegative, got {n}")
    if nodes < 64:
        raise DomainError(f"need at least 64 quadrature nodes, got {nodes}")
    coarse = _log_eigen_rodrigues(n, kp, nodes)
    fine = _log_eigen_rodrigues(n, kp, 2 * nodes)
    if abs(math.expm1(fine - coarse)) >= 1e-8:
        raise ConvergenceError(f"lambda_{n} not converged with {nodes} nodes")
    return fine


def eigen_quadrature(n: int, kp: KernelParams, nodes: int = 64) -> float:
    return math.exp(log_eigen_quadrature(n, kp, nodes))


def eigen_projection(n: int, kp: KernelParams, nodes: int = 256) -> float:
    """lambda_n from the untransformed projection integral.

    Direct Gauss-Jacobi evaluation of int kappa(t) P_{n,d+1}(t) (1-t^2)^{(d-2)/2}.
    Accurate only while lambda_n is well above 1e-16; used as a cross-check.
    """
    d = kp.d
    alpha = (d - 2) / 2.0
    t, w = roots_jacobi(nodes, alpha, alpha)
    vals = kappa(t, kp.theta) * legendre_sphere(n, d + 1, t)
    return float(sphere_area(d - 1) * np.dot(w, vals))


# -- spectrum container ------------------------------------------------------

@dataclass(frozen=True)
class EigenSpectrum:
    """Per-degree eigenvalues (as logs) with multiplicities.

    ``constant`` is the C used for a bound-type spectrum and ``None`` for the
    quadrature one.
    """

    kp: KernelParams
    log_lambdas: np.ndarray
    multiplicities: tuple
    provenance: str
    constant: float | None = None
    _lambdas: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        log_lambdas = np.asarray(self.log_lambdas, dtype=float)
        log_lambdas.setflags(write=False)
        object.__setattr__(self, "log_lambdas", log_lambdas)
        if len(self.multiplicities) != log_lambdas.size:
            raise ValueError("multiplicities and eigenvalues differ in length")
        if not np.all(np.isfinite(log_lambdas)):
            raise ValueError("eigenvalues must be positive and finite")
        lam = np.exp(log_lambdas)
        lam.setflags(write=False)
        object.__setattr__(self, "_lambdas", lam)

    @property
    def d(self) -> int:
        return self.kp.d

    @property
    def n_max(self) -> int:
        return self.log_lambdas.size - 1

    @property
    def lambdas(self) -> np.ndarray:
        """Eigenvalues in linear scale; entries below ~1e-308 read as 0."""
        return self._lambdas

    def to_records(self) -> list[dict]:
        return [
            {"degree": n, "lambda": float(self._lambdas[n]), "log_lambda": float(self.log_lambdas[n]),
             "multiplicity": int(self.multiplicities[n]), "provenance": self.provenance}
            for n in range(self.n_max + 1)
        ]

    def to_json(self) -> str:
        payload = {"d": self.d, "theta": self.kp.theta, "provenance": self.provenance,
                   "constant": self.constant, "degrees": self.to_records()}
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EigenSpectrum":
        payload = json.loads(text)
        rows = payload["degrees"]
        return cls(KernelParams(payload["d"], payload["theta"]),
                   np.array([r["log_lambda"] for r in rows]),
                   tuple(r["multiplicity"] for r in rows),
                   payload["provenance"], payload["constant"])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["degree", "lambda", "log_lambda", "multiplicity", "provenance"])
        for r in self.to_records():
            writer.writerow([r["degree"], repr(r["lambda"]), repr(r["log_lambda"]),
                             r["multiplicity"], r["provenance"]])
        return buf.getvalue()


def quadrature_spectrum(kp: KernelParams, n_max: int = 60, nodes: int = 64) -> EigenSpectrum:
    logs = [log_eigen_quadrature(n, kp, nodes) for n in range(n_max + 1)]
    mult = tuple(harmonic_dim(n, kp.d + 1) for n in range(n_max + 1))
    return EigenSpectrum(kp, np.array(logs), mult, PROVENANCE_QUADRATURE)


def fitted_lower_constant(kp: KernelParams, n_fit: int = 30, spectrum: EigenSpectrum | None = None) -> float:
    """C* = min over n <= n_fit of lambda_n / lower_bound(n, C=1)."""
    if spectrum is None or spectrum.n_max < n_fit:
        spectrum = quadrature_spectrum(kp, n_fit)
    gaps = [spectrum.log_lambdas[n] - log_eigen_lower_bound(n, kp, 1.0) for n in range(n_fit + 1)]
    return math.exp(min(gaps))


def bound_spectrum(kp: KernelParams, n_max: int = 60, C: float | None = None) -> EigenSpectrum:
    """Spectrum made of the lower-bound formula; C defaults to the fitted C*."""
    if C is None:
        C = fitted_lower_constant(kp)
    logs = [log_eigen_lower_bound(n, kp, C) for n in range(n_max + 1)]
    mult = tuple(harmonic_dim(n, kp.d + 1) for n in range(n_max + 1))
    return EigenSpectrum(kp, np.array(logs), mult, PROVENANCE_BOUND, C)


def fitted_upper_constant(spectrum: EigenSpectrum, last: int = 10, safety: float = 2.0) -> float:
    """C_bar for the analytic upper envelope, from the last ``last`` degrees.

    The largest ratio lambda_n / envelope(n, C_bar=1) over those degrees,
    inflated by ``safety`` because the ratio is only asymptotically constant.
    """
    kp = spectrum.kp
    lo = max(1, spectrum.n_max - last + 1)
    ratios = [spectrum.log_lambdas[n] - log_eigen_upper_bound(n, kp, 1.0)
              for n in range(lo, spectrum.n_max + 1)]
    return safety * math.exp(max(ratios))


# -- hard-function norms -----------------------------------------------------

def log_peak_b(N: int, d: int) -> float:
    """log b_{N,z}(z) = log(N_{N,d+2} / |S^d|)."""
    return math.log(harmonic_dim(N, d + 2)) - math.log(sphere_area(d))


def rkhs_norm_hard(eps: float, N: int, spectrum: EigenSpectrum) -> float:
    """Exact RKHS norm of the scaled approximate delta of degree N.

    By the addition theorem at x = z, sum_j Y_{n,j}(z)^2 = N_{n,d+1}/|S^d|, so

        ||f||^2 = (2 eps / b_N(z))^2 * sum_{n<=N} N_{n,d+1} / (|S^d| lambda_n),

    which does not depend on the center.
    """
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if N < 0:
        raise DomainError(f"N must be nonnegative, got {N}")
    if N > spectrum.n_max:
        raise RangeError(f"spectrum covers degrees 0..{spectrum.n_max}, need {N}")
    d = spectrum.d
    mult = np.array([float(m) for m in spectrum.multiplicities[: N + 1]])
    log_sum = logsumexp(np.log(mult) - spectrum.log_lambdas[: N + 1])
    log_norm = math.log(2.0 * eps) + 0.5 * (math.log(sphere_area(d)) + log_sum) - math.log(harmonic_dim(N, d + 2))
    return math.exp(log_norm)


def hard_norm_profile(eps: float, spectrum: EigenSpectrum) -> np.ndarray:
    return np.array([rkhs_norm_hard(eps, N, spectrum) for N in range(spectrum.n_max + 1)])


def select_N_bar(eps: float, B: float, spectrum: EigenSpectrum) -> int:
    """Largest degree N whose hard function has RKHS norm at most B.

    The norm is not monotone for the first few degrees (the normalizing peak
    grows faster than the weighted sum at first), but it increases from some
    small degree on; the spectrum must reach far enough that it ends above B
    on an increasing stretch.
    """
    if not 0 < eps < B:
        raise RangeError("need 0 < eps < B")
    norms = hard_norm_profile(eps, spectrum)
    ok = np.nonzero(norms <= B)[0]
    if ok.size == 0:
        raise RangeError("eps/B not sufficiently small: no degree meets the norm budget")
    if norms[-1] <= B or not np.all(np.diff(norms[-4:]) > 0):
        raise RangeError(f"spectrum up to degree {spectrum.n_max} too short for eps={eps}, B={B}")
    return int(ok[-1])
