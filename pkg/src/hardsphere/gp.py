"""SE-kernel GP regression on S^d, information gain and MIG bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import geometry as geo
from .exceptions import DomainError, FactorizationError, RangeError
from .mercer import EigenSpectrum, fitted_upper_constant, log_eigen_upper_bound
from .special import harmonic_dim, sphere_area

JITTER_START = 1e-10
JITTER_MAX = 1e-6


def se_kernel(x, y, theta: float):
    """exp(-||x - y||^2 / theta) = exp(-2 (1 - x.y) / theta) for unit vectors (row-wise)."""
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    dots = np.clip(np.sum(geo.as_array(x) * geo.as_array(y), axis=-1), -1.0, 1.0)
    out = np.exp(-2.0 * (1.0 - dots) / theta)
    return float(out) if np.ndim(out) == 0 else out


def kernel_matrix(X, Y, theta: float) -> np.ndarray:
    dots = np.clip(np.atleast_2d(geo.as_array(X)) @ np.atleast_2d(geo.as_array(Y)).T, -1.0, 1.0)
    return np.exp(-2.0 * (1.0 - dots) / theta)


@dataclass
class GPDataset:
    points: np.ndarray
    observations: np.ndarray
    noise_var: float

    def __post_init__(self):
        self.observations = np.asarray(self.observations, dtype=float).reshape(-1)
        pts = np.asarray(geo.as_array(self.points), dtype=float)
        if pts.ndim == 1 and pts.size:
            pts = pts[None, :]
        if pts.size == 0:
            pts = pts.reshape(0, pts.shape[-1] if pts.ndim == 2 else 0)
        if pts.shape[0] != self.observations.size:
            raise DomainError("points and observations differ in length")
        self.points = pts
        if not self.noise_var > 0:
            raise DomainError(f"noise_var must be positive, got {self.noise_var}")

    def __len__(self) -> int:
        return self.observations.size


@dataclass
class PosteriorState:
    """Cholesky factor of K + noise_var I, grown one observation at a time.

    ``log_det`` tracks log det(K + (noise_var + jitter) I) through the rank-one
    extensions; a failed extension triggers a full refactorization with a
    larger jitter.
    """

    theta: float
    noise_var: float
    points: np.ndarray = None
    y: np.ndarray = None
    L: np.ndarray = None
    jitter: float = JITTER_START
    log_det: float = 0.0
    _alpha: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.noise_var > 0:
            raise DomainError(f"noise_var must be positive, got {self.noise_var}")
        if self.points is None:
            self.points = np.empty((0, 0))
            self.y = np.empty(0)
            self.L = np.empty((0, 0))

    def __len__(self) -> int:
        return self.y.size

    @classmethod
    def from_dataset(cls, ds: GPDataset, theta: float) -> "PosteriorState":
        state = cls(theta, ds.noise_var)
        if len(ds):
            state._refactor(np.asarray(ds.points, dtype=float), ds.observations)
        return state

    def _refactor(self, points: np.ndarray, y: np.ndarray, min_jitter: float = JITTER_START):
        K = kernel_matrix(points, points, self.theta) + self.noise_var * np.eye(len(y))
        jitter = min_jitter
        while True:
            try:
                L = np.linalg.cholesky(K + jitter * np.eye(len(y)))
                break
            except np.linalg.LinAlgError:
                jitter *= 10.0
                if jitter > JITTER_MAX * (1 + 1e-9):
                    raise FactorizationError("kernel matrix not positive definite after jitter escalation")
        self.points, self.y, self.L, self.jitter = points, y, L, jitter
        self.log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
        self._alpha = None

    def append(self, x, y: float):
        x = np.asarray(geo.as_array(x), dtype=float).reshape(1, -1)
        if len(self) == 0:
            self._refactor(x, np.array([float(y)]), self.jitter)
            return
        kx = kernel_matrix(self.points, x, self.theta)[:, 0]
        l = solve_triangular(self.L, kx, lower=True)
        s2 = 1.0 + self.noise_var + self.jitter - float(l @ l)
        points = np.vstack([self.points, x])
        ys = np.append(self.y, float(y))
        if s2 <= 0.0:
            self._refactor(points, ys, self.jitter * 10.0)
            return
        s = math.sqrt(s2)
        n = len(self)
        L = np.zeros((n + 1, n + 1))
        L[:n, :n] = self.L
        L[n, :n] = l
        L[n, n] = s
        self.points, self.y, self.L = points, ys, L
        self.log_det += 2.0 * math.log(s)
        self._alpha = None

    def fresh_log_det(self) -> float:
        K = kernel_matrix(self.points, self.points, self.theta)
        K += (self.noise_var + self.jitter) * np.eye(len(self))
        sign, val = np.linalg.slogdet(K)
        return float(val)

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        X = np.atleast_2d(geo.as_array(X))
        if len(self) == 0:
            return np.zeros(X.shape[0]), np.ones(X.shape[0])
        if self._alpha is None:
            self._alpha = cho_solve((self.L, True), self.y)
        Ks = kernel_matrix(self.points, X, self.theta)
        mean = Ks.T @ self._alpha
        v = solve_triangular(self.L, Ks, lower=True)
        var = np.clip(1.0 - np.sum(v * v, axis=0), 1e-16, 1.0)
        return mean, var

    def info_gain(self) -> float:
        """1/2 log det(I + K / noise_var) for the stored points."""
        return 0.5 * (self.log_det - len(self) * math.log(self.noise_var))


def posterior(ds: GPDataset, theta: float, x) -> tuple[float, float]:
    """Posterior mean and variance at a single point."""
    mean, var = PosteriorState.from_dataset(ds, theta).predict(x)
    return float(mean[0]), float(var[0])


def info_gain(ds: GPDataset, theta: float) -> float:
    if len(ds) == 0:
        return 0.0
    return max(0.0, PosteriorState.from_dataset(ds, theta).info_gain())


# -- greedy MIG ----------------------------------------------------------------

def pivoted_cholesky(C: np.ndarray, theta: float, tol: float = 1e-12, max_rank: int | None = None) -> np.ndarray:
    """Low-rank factor F with K(C, C) ~= F F^T; stops once every residual diagonal is below tol."""
    n = C.shape[0]
    max_rank = n if max_rank is None else min(max_rank, n)
    diag = np.ones(n)
    F = np.zeros((n, min(max_rank, 64)))
    k = 0
    while k < max_rank:
        p = int(np.argmax(diag))
        if diag[p] <= tol:
            break
        if k == F.shape[1]:
            F = np.hstack([F, np.zeros((n, min(F.shape[1], max_rank - k)))])
        row = kernel_matrix(C[p:p + 1], C, theta)[0] - F[:, :k] @ F[p, :k]
        col = row / math.sqrt(diag[p])
        F[:, k] = col
        diag = np.maximum(diag - col * col, 0.0)
        k += 1
    return F[:, :k].copy()


class CandidatePosterior:
    """GP posterior restricted to a fixed candidate set, in low-rank feature form.

    The candidate kernel matrix is replaced by F F^T from a pivoted Cholesky
    factorization whose residual diagonal is below ``tol``.  Each observation
    is a rank-one update of the r x r weight covariance, so one step costs
    O(n r) for n candidates.
    """

    def __init__(self, candidates, theta: float, noise_var: float, tol: float = 1e-12):
        if not noise_var > 0:
            raise DomainError(f"noise_var must be positive, got {noise_var}")
        C = np.atleast_2d(geo.as_array(candidates))
        self.noise_var = noise_var
        self.F = pivoted_cholesky(C, theta, tol)
        self.FP = self.F.copy()
        self.b = np.zeros(self.F.shape[1])
        self.var = np.einsum("ij,ij->i", self.F, self.F)
        self.count = 0

    def update(self, index: int, y: float):
        Pu = self.FP[index].copy()
        denom = self.noise_var + self.var[index]
        proj = self.F @ Pu
        self.var = np.maximum(self.var - proj * proj / denom, 0.0)
        self.FP -= np.outer(proj, Pu) / denom
        self.b += (y / self.noise_var) * self.F[index]
        self.count += 1

    def copy(self) -> "CandidatePosterior":
        """Independent state sharing the (read-only) feature matrix."""
        new = object.__new__(CandidatePosterior)
        new.noise_var, new.F, new.count = self.noise_var, self.F, self.count
        new.FP, new.b, new.var = self.FP.copy(), self.b.copy(), self.var.copy()
        return new

    def mean(self) -> np.ndarray:
        return self.FP @ self.b

    def std(self) -> np.ndarray:
        return np.sqrt(self.var)


@dataclass(frozen=True)
class GreedyResult:
    indices: np.ndarray
    gains: np.ndarray

    @property
    def total(self) -> float:
        return float(self.gains[-1]) if self.gains.size else 0.0

    def increments(self) -> np.ndarray:
        return np.diff(np.concatenate([[0.0], self.gains]))


def _greedy_exact(C, T, theta, noise_var):
    n = C.shape[0]
    var = np.ones(n)
    V = np.zeros((T, n))
    picks = np.empty(T, dtype=int)
    gains = np.empty(T)
    total = 0.0
    for t in range(T):
        s = int(np.argmax(var))
        vs = var[s]
        total += 0.5 * math.log1p(vs / noise_var)
        row = kernel_matrix(C[s:s + 1], C, theta)[0] - V[:t, s] @ V[:t]
        row /= math.sqrt(vs + noise_var)
        V[t] = row
        var = np.maximum(var - row * row, 0.0)
        picks[t], gains[t] = s, total
    return picks, gains


def _greedy_features(F, T, noise_var):
    n, r = F.shape
    P = np.eye(r)
    FP = F.copy()
    var = np.einsum("ij,ij->i", F, F)
    picks = np.empty(T, dtype=int)
    gains = np.empty(T)
    total = 0.0
    for t in range(T):
        s = int(np.argmax(var))
        vs = var[s]
        total += 0.5 * math.log1p(vs / noise_var)
        Pu = FP[s].copy()
        denom = noise_var + vs
        proj = F @ Pu
        var = np.maximum(var - proj * proj / denom, 0.0)
        P -= np.outer(Pu, Pu) / denom
        FP -= np.outer(proj, Pu) / denom
        picks[t], gains[t] = s, total
    return picks, gains


def greedy_mig(T: int, candidates, theta: float, noise_var: float, method: str = "auto",
               tol: float = 1e-12) -> GreedyResult:
    """Greedy maximization of 1/2 log det(I + K_T / noise_var) over a candidate pool.

    Each step takes the candidate of largest posterior variance (lowest index on
    ties); repeated picks are allowed, as for noisy queries.  ``method`` is
    ``"exact"`` (incremental Cholesky rows), ``"lowrank"`` (pivoted-Cholesky
    features, residual diagonal below ``tol``) or ``"auto"``.
    """
    C = np.atleast_2d(geo.as_array(candidates))
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    if C.shape[0] < T:
        raise DomainError(f"need at least T={T} candidates, got {C.shape[0]}")
    if not noise_var > 0:
        raise DomainError(f"noise_var must be positive, got {noise_var}")
    if method == "auto":
        method = "exact" if T * C.shape[0] <= 2_000_000 else "lowrank"
    if method == "exact":
        picks, gains = _greedy_exact(C, T, theta, noise_var)
    elif method == "lowrank":
        picks, gains = _greedy_features(pivoted_cholesky(C, theta, tol), T, noise_var)
    else:
        raise DomainError(f"unknown method {method!r}")
    return GreedyResult(picks, gains)


# -- theoretical bound -----------------------------------------------------------

def theory_rate(T: float, d: int) -> float:
    """(ln T)^{d+1} (ln ln T)^{-d}."""
    L = math.log(T)
    return L ** (d + 1) / math.log(L) ** d


@dataclass(frozen=True)
class TailBound:
    """Certified bound on sum_{n > n_max} lambda_n N_{n,d+1} from the analytic envelope."""

    C_bar: float
    value: float
    terms: int


def spectral_tail(spectrum: EigenSpectrum, C_bar: float | None = None, rel_tol: float = 1e-16,
                  max_terms: int = 100_000) -> TailBound:
    kp = spectrum.kp
    if C_bar is None:
        C_bar = fitted_upper_constant(spectrum)
    n0 = spectrum.n_max + 1

    def log_term(n):
        return log_eigen_upper_bound(n, kp, C_bar) + math.log(harmonic_dim(n, kp.d + 1))

    if log_term(n0 + 1) >= log_term(n0):
        raise RangeError(f"envelope tail not yet decreasing at degree {n0}; extend the spectrum")
    logs = [log_term(n0)]
    n = n0 + 1
    while len(logs) < max_terms:
        lt = log_term(n)
        if lt < logs[0] + math.log(rel_tol) or lt < -745.0:
            break
        logs.append(lt)
        n += 1
    else:
        raise RangeError("envelope tail did not converge")
    top = max(logs)
    return TailBound(C_bar, math.exp(top) * float(np.sum(np.exp(np.array(logs) - top))), len(logs))


def mig_bound(T: int, M: int, spectrum: EigenSpectrum, noise_var: float, tail: TailBound | None = None) -> float:
    """N_{M,d+2} ln(1 + T/noise_var) + T/(|S^d| noise_var) sum_{n>M} lambda_n N_{n,d+1}."""
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    if not 0 <= M <= spectrum.n_max:
        raise RangeError(f"M must lie in 0..{spectrum.n_max}")
    d = spectrum.d
    if tail is None:
        tail = spectral_tail(spectrum)
    lam = spectrum.lambdas
    mult = np.array(spectrum.multiplicities, dtype=float)
    mid = float(np.sum(lam[M + 1:] * mult[M + 1:]))
    head = harmonic_dim(M, d + 2) * math.log1p(T / noise_var)
    return head + T / (sphere_area(d) * noise_var) * (mid + tail.value)


def mig_bound_min(T: int, spectrum: EigenSpectrum, noise_var: float) -> tuple[float, int]:
    """Smallest bound over M <= n_max, with the minimizing M."""
    tail = spectral_tail(spectrum)
    vals = [mig_bound(T, M, spectrum, noise_var, tail) for M in range(spectrum.n_max + 1)]
    k = int(np.argmin(vals))
    return float(vals[k]), k


def select_M(T: float, d: int, c: float = 1.0, cU: float = 2.0) -> int:
    """Smallest M with M ln(c M) >= ln T, required to also satisfy M ln(c M) <= cU ln T."""
    if T < 3:
        raise DomainError(f"T must be >= 3, got {T}")
    if not (c > 0 and cU > 0):
        raise DomainError("c and cU must be positive")
    target = math.log(T)
    M = max(1, math.floor(1.0 / c) + 1)
    while M * math.log(c * M) < target:
        M += 1
    if M * math.log(c * M) > cU * target:
        raise RangeError(f"no M satisfies the sandwich for T={T}, c={c}, cU={cU}; raise cU")
    return M
