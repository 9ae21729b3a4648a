"""Approximate-delta hard functions on S^d and the function classes built from them.

The degree-N approximate delta centered at z is the truncated reproducing sum

    b_{N,z}(x) = sum_{n<=N} N_{n,d+1}/|S^d| P_{n,d+1}(x.z)
               = (C_N^{(eta+1)}(x.z) + C_{N-1}^{(eta+1)}(x.z)) / |S^d|,   eta = (d-1)/2,

and the hard function rescales it to peak 2 eps at z.  On the circle the
bracket is the Dirichlet kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import geometry as geo
from .exceptions import DomainError, RangeError
from .mercer import EigenSpectrum, KernelParams, quadrature_spectrum, rkhs_norm_hard, select_N_bar
from .special import dirichlet, gegenbauer, harmonic_dim, hermite, legendre_sphere_all, sphere_area


# -- closed forms -------------------------------------------------------------

def _dots(x, z) -> np.ndarray:
    return np.clip(np.sum(geo.as_array(x) * geo.as_array(z), axis=-1), -1.0, 1.0)


def _scalar(value, like):
    return float(value) if np.ndim(like) == 0 else value


def b_profile(t, N: int, d: int):
    """b_N as a function of t = x.z (Gegenbauer route)."""
    if N < 0:
        raise DomainError(f"N must be nonnegative, got {N}")
    lam = (d - 1) / 2.0 + 1.0
    return (gegenbauer(N, lam, t) + gegenbauer(N - 1, lam, t)) / sphere_area(d)


def b_profile_legendre(t, N: int, d: int):
    """b_N from the degree-by-degree Legendre sum (independent route)."""
    rows = legendre_sphere_all(N, d + 1, t)
    mult = np.array([harmonic_dim(n, d + 1) for n in range(N + 1)], dtype=float)
    out = np.tensordot(mult, rows, axes=1) / sphere_area(d)
    return _scalar(out, t)


def b_value(x, z, N: int, d: int | None = None):
    """b_{N,z}(x) for points (or rows of points) x and a center z."""
    t = _dots(x, z)
    if d is None:
        d = geo.as_array(z).size - 1
    return _scalar(b_profile(t, N, d), t)


def b_value_legendre(x, z, N: int, d: int | None = None):
    t = _dots(x, z)
    if d is None:
        d = geo.as_array(z).size - 1
    return b_profile_legendre(t, N, d)


def b_value_dirichlet(x, z, N: int):
    """Circle-only route: b = dirichlet(N, rho(x, z)) / (2 pi)."""
    rho = np.arccos(_dots(x, z))
    return dirichlet(N, rho) / (2.0 * math.pi)


def peak_b(N: int, d: int) -> float:
    """b_{N,z}(z) = N_{N,d+2} / |S^d|."""
    return harmonic_dim(N, d + 2) / sphere_area(d)


# -- hard functions -----------------------------------------------------------

@dataclass(frozen=True)
class HardFunction:
    """f(x) = 2 eps b_{N,z}(x) / b_{N,z}(z)."""

    z: np.ndarray
    eps: float
    N: int
    kp: KernelParams

    def __post_init__(self):
        z = geo.SpherePoint(self.z).coords
        object.__setattr__(self, "z", z)
        if z.size != self.kp.d + 1:
            raise DomainError("center dimension does not match kernel params")
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps}")
        if self.N < 1:
            raise DomainError(f"N must be >= 1, got {self.N}")

    @property
    def d(self) -> int:
        return self.kp.d

    @property
    def peak(self) -> float:
        return 2.0 * self.eps

    def profile(self, t):
        """f as a function of the inner product with the center."""
        return 2.0 * self.eps * b_profile(t, self.N, self.d) / peak_b(self.N, self.d)

    def __call__(self, x):
        t = _dots(x, self.z)
        return _scalar(self.profile(t), t)

    def norm(self, spectrum: EigenSpectrum) -> float:
        return rkhs_norm_hard(self.eps, self.N, spectrum)


def evaluate(f: HardFunction, x):
    return f(x)


def default_grid(N: int) -> int:
    return max(4000, 200 * N)


def angle_grid(grid: int) -> np.ndarray:
    return np.linspace(0.0, math.pi, grid + 1)


def measure_width(f: HardFunction, grid: int | None = None) -> float:
    """Smallest grid angle rho* with |f| <= eps wherever rho(x, z) lies in [rho*, pi - rho*]."""
    if grid is None:
        grid = default_grid(f.N)
    if grid < 1000:
        raise DomainError(f"grid must be >= 1000, got {grid}")
    rho = angle_grid(grid)
    vals = f.profile(np.cos(rho))
    bad = np.abs(vals) > f.eps
    if not bad.any():
        return 0.0
    m = np.minimum(rho[bad], math.pi - rho[bad]).max()
    above = rho[rho > m]
    return float(above[0]) if above.size else math.pi / 2


def lobe_report(f: HardFunction, rho_star: float, samples: int = 100_000, seed=0) -> dict:
    """Fraction of uniform samples that are eps-optimal near z and near -z, reported separately."""
    x = geo.sample_uniform(f.d, samples, seed)
    opt = f(x) >= f.peak - f.eps
    near_z = geo.geodesic(x, f.z) <= rho_star
    near_mz = geo.geodesic(x, -f.z) <= rho_star
    return {
        "plus_lobe_fraction": float(np.mean(opt & near_z)),
        "minus_lobe_fraction": float(np.mean(opt & near_mz)),
        "outside_fraction": float(np.mean(opt & ~near_z & ~near_mz)),
        "value_at_antipode": float(f(-f.z)),
    }


# -- function classes -----------------------------------------------------------

@dataclass(frozen=True)
class FunctionClass:
    """Hard functions on a w-separated set, one per center, with the paired partition."""

    functions: tuple
    centers: geo.SeparatedSet
    partition: geo.SpherePartition
    w: float
    B: float
    eps: float
    N: int
    kp: KernelParams
    rho_star: float
    member_norm: float
    _z: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_z", self.centers.centers)

    def __len__(self) -> int:
        return len(self.functions)

    @property
    def d(self) -> int:
        return self.kp.d

    def profiles(self, x) -> np.ndarray:
        """Values of every member at every row of x, shape (members, points)."""
        t = np.clip(geo.as_array(x) @ self._z.T, -1.0, 1.0).T
        return self.functions[0].profile(t)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "B": self.B, "N_bar": self.N, "w": self.w, "rho_star": self.rho_star,
                "member_norm": self.member_norm, "d": self.kp.d, "theta": self.kp.theta,
                "centers": self.centers.centers.tolist(), "members": len(self)}


def build_class(eps: float, B: float, kp: KernelParams, spectrum: EigenSpectrum | None = None, seed=0,
                candidate_budget: int | None = None, grid: int | None = None) -> FunctionClass:
    """Hard-function class at accuracy eps for the norm ball of radius B.

    Members use the degree N_bar chosen at budget B/3, so any pair sum
    f_i + 2 f_j still has norm at most B.  The separation is w = 2 rho*, with
    rho* measured on the reference member.
    """
    if not 0 < eps < B:
        raise RangeError(f"need 0 < eps < B, got eps={eps}, B={B}")
    if spectrum is None:
        spectrum = quadrature_spectrum(kp, 60)
    if spectrum.kp != kp:
        raise DomainError("spectrum was built for different kernel params")
    N = select_N_bar(eps, B / 3.0, spectrum)
    if N < 2:
        raise RangeError(f"eps/B not sufficiently small: N_bar = {N} < 2")
    ref = HardFunction(geo.north_pole(kp.d), eps, N, kp)
    rho_star = measure_width(ref, grid)
    w = 2.0 * rho_star
    centers = geo.greedy_separated_set(kp.d, w, candidate_budget, seed)
    partition = geo.build_partition(centers)
    funcs = tuple(HardFunction(z, eps, N, kp) for z in centers.centers)
    return FunctionClass(funcs, centers, partition, w, B, eps, N, kp, rho_star, rkhs_norm_hard(eps, N, spectrum))


def exclusivity_violations(fc: FunctionClass, samples: int = 20_000, seed=0) -> int:
    """Count sampled (x, member) pairs where a member is eps-optimal outside its own region."""
    x = geo.sample_uniform(fc.d, samples, seed)
    owner = fc.partition.assign(x)
    vals = fc.profiles(x)
    opt = vals >= fc.eps
    foreign = owner[None, :] != np.arange(len(fc))[:, None]
    return int(np.sum(opt & foreign))


# -- sup-sum diagnostics ----------------------------------------------------------

@dataclass(frozen=True)
class SupSumTerms:
    """Per-member squared sup over one region, divided by eps^2, with annulus labels."""

    z_index: int
    terms: np.ndarray
    annulus: np.ndarray

    @property
    def ratio(self) -> float:
        return float(self.terms.sum())

    def annulus_totals(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for i, v in zip(self.annulus, self.terms):
            if i >= 0:
                out[int(i)] = out.get(int(i), 0.0) + float(v)
        return dict(sorted(out.items()))


def sup_sum_terms(fc: FunctionClass, z_index: int, samples: int = 2000, seed=0) -> SupSumTerms:
    if samples < 1000:
        raise DomainError(f"need at least 1000 samples per region, got {samples}")
    if not 0 <= z_index < len(fc):
        raise IndexError(f"member index {z_index} out of range")
    pts = geo.region_samples(fc.partition, z_index, samples, seed)
    vals = fc.profiles(pts)
    terms = np.max(vals * vals, axis=1) / fc.eps ** 2
    annulus = np.full(len(fc), -1)
    for i, members in geo.annulus_bins(fc.partition, z_index, pts).items():
        annulus[members] = i
    return SupSumTerms(z_index, terms, annulus)


def sup_sum_ratio(fc: FunctionClass, z_index: int, samples: int = 2000, seed=0) -> float:
    """sum over members of (sampled sup over region z of |f_member|)^2 / eps^2."""
    return sup_sum_terms(fc, z_index, samples, seed).ratio


def annulus_slope(terms: SupSumTerms) -> float:
    """Least-squares slope of log(total contribution of annulus i) vs log i, i >= 1."""
    tot = {i: v for i, v in terms.annulus_totals().items() if i >= 1 and v > 0}
    if len(tot) < 2:
        raise RangeError("need at least two populated annuli to fit a slope")
    i = np.array(list(tot), dtype=float)
    v = np.array(list(tot.values()))
    return float(np.polyfit(np.log(i), np.log(v), 1)[0])


# -- adversarial pairs ------------------------------------------------------------

@dataclass(frozen=True)
class Objective:
    """Sum of weighted hard functions, callable on points."""

    parts: tuple

    def __call__(self, x):
        return sum(wt * f(x) for wt, f in self.parts)


def adversarial_pair(fc: FunctionClass, i: int, j: int, allow_self: bool = False):
    """(f, f~) = (f_i, f_i + 2 f_j).

    With ``allow_self`` the pair (i, i) is accepted and returns f~ = f, the
    degenerate pair used to sanity-check change-of-measure reports.
    """
    n = len(fc)
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"member indices ({i}, {j}) out of range for {n} members")
    f = Objective(((1.0, fc.functions[i]),))
    if i == j:
        if not allow_self:
            raise IndexError("adversarial pair needs two distinct members")
        return f, f
    return f, Objective(((1.0, fc.functions[i]), (2.0, fc.functions[j])))


# -- Gaussian-measure baseline on the real line --------------------------------------

@dataclass(frozen=True)
class GaussianBaselineParams:
    """Constants of the SE-kernel eigensystem under the N(0, sigma^2) measure."""

    sigma_measure: float
    theta: float
    a: float = field(init=False)
    b: float = field(init=False)
    c: float = field(init=False)
    A: float = field(init=False)
    Bg: float = field(init=False)

    def __post_init__(self):
        if not (self.sigma_measure > 0 and self.theta > 0):
            raise DomainError("sigma_measure and theta must be positive")
        a = 1.0 / (4.0 * self.sigma_measure ** 2)
        b = 1.0 / self.theta
        c = math.sqrt(a * a + 2.0 * a * b)
        for name, val in (("a", a), ("b", b), ("c", c), ("A", a + b + c), ("Bg", b / (a + b + c))):
            object.__setattr__(self, name, val)

    def eigenvalue(self, n: int) -> float:
        return math.sqrt(2.0 * self.a / self.A) * self.Bg ** n

    def eigenfunction(self, n: int, x):
        """Normalized phi_n(x) = c_n exp(-(c - a) x^2) H_n(sqrt(2c) x)."""
        log_cn2 = 0.5 * math.log(self.c / self.a) - n * math.log(2.0) - math.lgamma(n + 1)
        x = np.asarray(x, dtype=float)
        out = math.exp(0.5 * log_cn2) * np.exp(-(self.c - self.a) * x * x) * hermite(n, math.sqrt(2.0 * self.c) * x)
        return _scalar(out, x)


def _check_line(d):
    if d is not None and d != 1:
        raise DomainError("the Gaussian-measure baseline is defined on the real line only (d = 1)")


def gaussian_baseline_sum(x, N: int, gp: GaussianBaselineParams, d: int | None = 1):
    """b_N(x) = sum_{n<=N} phi_n(x) phi_n(0), term by term."""
    _check_line(d)
    total = sum(gp.eigenfunction(n, x) * gp.eigenfunction(n, 0.0) for n in range(N + 1))
    return _scalar(total, x)


def gaussian_baseline(x, N: int, gp: GaussianBaselineParams, d: int | None = 1):
    """Christoffel-Darboux closed form of b_N(x).

    sum_{n<=N} H_n(u) H_n(0) / (2^n n!) = [H_N(0) H_{N+1}(u) - H_N(u) H_{N+1}(0)] / (2^{N+1} N! u),
    with the u -> 0 limit [2(N+1) H_N(0)^2 - 2N H_{N-1}(0) H_{N+1}(0)] / (2^{N+1} N!).
    """
    _check_line(d)
    if N < 0:
        raise DomainError(f"N must be nonnegative, got {N}")
    xa = np.asarray(x, dtype=float)
    u = math.sqrt(2.0 * gp.c) * xa
    h0 = [hermite(k, 0.0) for k in range(N + 2)]
    hN_prev = h0[N - 1] if N >= 1 else 0.0
    log_den = (N + 1) * math.log(2.0) + math.lgamma(N + 1)
    small = np.abs(u) < 1e-8
    safe_u = np.where(small, 1.0, u)
    num = h0[N] * hermite(N + 1, safe_u) - hermite(N, safe_u) * h0[N + 1]
    core = np.where(small, (2 * (N + 1) * h0[N] ** 2 - 2 * N * hN_prev * h0[N + 1]), num / safe_u)
    out = math.sqrt(gp.c / gp.a) * np.exp(-(gp.c - gp.a) * xa * xa) * core * math.exp(-log_den)
    return _scalar(out, x)


def gaussian_half_width(N: int, gp: GaussianBaselineParams, grid: int = 20_000, x_max: float | None = None) -> float:
    """First x > 0 where b_N drops to half its peak (grid search plus bisection)."""
    peak = gaussian_baseline(0.0, N, gp)
    if x_max is None:
        x_max = 4.0 * gp.sigma_measure
    xs = np.linspace(0.0, x_max, grid + 1)
    vals = gaussian_baseline(xs, N, gp) - 0.5 * peak
    idx = np.nonzero(vals <= 0)[0]
    if idx.size == 0:
        raise RangeError("b_N never drops to half its peak on the search interval")
    k = idx[0]
    return float(brentq(lambda s: gaussian_baseline(s, N, gp) - 0.5 * peak, xs[k - 1], xs[k]))
