"""Bandit episodes on hard instances, regret accounting and a change-of-measure certifier."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import norm

from . import geometry as geo
from .exceptions import ConvergenceError, DomainError, HypothesisViolation
from .gp import CandidatePosterior
from .instances import FunctionClass, adversarial_pair

ALGORITHMS = ("gp_ucb", "max_variance", "random")
EVENTS = ("report_in_region", "half_queries_in_region")
ARGMAX_TOL = 1e-12


def max_workers() -> int:
    """Thread cap from HSGP_THREADS (default 1: serial)."""
    raw = os.environ.get("HSGP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn: Callable, items: list) -> list:
    """Map preserving input order; runs on a thread pool when HSGP_THREADS > 1."""
    workers = min(max_workers(), max(1, len(items)))
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def first_argmax(values: np.ndarray, tol: float = ARGMAX_TOL) -> int:
    """Lowest index whose value is within ``tol`` of the maximum."""
    return int(np.argmax(values >= values.max() - tol))


# -- environment ----------------------------------------------------------------

@dataclass
class Environment:
    """Noisy oracle y = f(x) + N(0, sigma^2).

    ``noise_std = 0`` is accepted as a noise-free limit.  When ``optimum`` is
    omitted it is estimated by the maximum over the check samples.
    """

    objective: Callable
    noise_std: float
    seed: int | np.random.SeedSequence
    d: int
    optimum: float | None = None
    check_samples: int = 10_000
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.noise_std < 0:
            raise DomainError(f"noise_std must be nonnegative, got {self.noise_std}")
        x = geo.sample_uniform(self.d, self.check_samples, 12345)
        top = float(np.max(self.objective(x)))
        if self.optimum is None:
            self.optimum = top
        elif top > self.optimum + 1e-9 * max(1.0, abs(self.optimum)):
            raise DomainError(f"declared optimum {self.optimum} is exceeded by a sampled value {top}")
        self.reset()

    def reset(self):
        self._rng = np.random.default_rng(self.seed)

    def observe(self, x) -> tuple[float, float]:
        value = float(self.objective(x))
        return value + self.noise_std * float(self._rng.standard_normal()), value


@dataclass(frozen=True)
class RegretTrace:
    indices: np.ndarray
    points: np.ndarray
    observations: np.ndarray
    values: np.ndarray
    regrets: np.ndarray
    optimum: float
    x_hat: np.ndarray
    simple_regret: float
    region_counts: np.ndarray | None = None

    @property
    def T(self) -> int:
        return self.regrets.size

    @property
    def cumulative_regret(self) -> float:
        return float(np.sum(self.regrets))


@dataclass(frozen=True)
class EpisodeParams:
    theta: float = 1.0
    noise_var: float | None = None
    beta: Callable[[int, int], float] | None = None
    seed: int = 0
    partition: geo.SpherePartition | None = None


def default_beta(t: int, n_candidates: int) -> float:
    return 2.0 * math.log(n_candidates * t * t)


def run_episode(algorithm: str, env: Environment, T: int, candidates, params: EpisodeParams | None = None,
                posterior_factory: Callable[[], CandidatePosterior] | None = None) -> RegretTrace:
    """Run one episode over a finite candidate set.

    gp_ucb queries argmax mean + sqrt(beta_t) std, max_variance queries
    argmax std, random queries a uniform candidate.  The report is the
    candidate with the largest posterior mean.  Ties go to the lowest index.
    """
    if algorithm not in ALGORITHMS:
        raise DomainError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    params = params or EpisodeParams()
    C = np.atleast_2d(geo.as_array(candidates))
    n = C.shape[0]
    if n == 0:
        raise DomainError("candidate set is empty")
    noise_var = params.noise_var if params.noise_var is not None else max(env.noise_std ** 2, 1e-6)
    beta = params.beta or default_beta
    post = posterior_factory() if posterior_factory else CandidatePosterior(C, params.theta, noise_var)
    env.reset()
    algo_rng = np.random.default_rng(params.seed)
    idx = np.empty(T, dtype=int)
    ys = np.empty(T)
    vals = np.empty(T)
    for t in range(1, T + 1):
        if algorithm == "gp_ucb":
            k = first_argmax(post.mean() + math.sqrt(beta(t, n)) * post.std())
        elif algorithm == "max_variance":
            k = first_argmax(post.var)
        else:
            k = int(algo_rng.integers(n))
        y, v = env.observe(C[k])
        post.update(k, y)
        idx[t - 1], ys[t - 1], vals[t - 1] = k, y, v
    k_hat = first_argmax(post.mean())
    x_hat = C[k_hat]
    counts = None
    if params.partition is not None:
        counts = np.bincount(params.partition.assign(C[idx]), minlength=len(params.partition))
    opt = float(env.optimum)
    return RegretTrace(idx, C[idx], ys, vals, opt - vals, opt, x_hat, opt - float(env.objective(x_hat)), counts)


# -- KL machinery -------------------------------------------------------------------

def kl_gaussian(mu1: float, mu2: float, sigma: float) -> float:
    """KL(N(mu1, s^2) || N(mu2, s^2)) = (mu1 - mu2)^2 / (2 s^2)."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return (mu1 - mu2) ** 2 / (2.0 * sigma ** 2)


def max_kl_per_region(f, f_tilde, partition: geo.SpherePartition, sigma: float, samples: int = 1000,
                      seed=0) -> np.ndarray:
    """Sampled sup over each region of the per-query KL divergence.

    Each region is sampled densely and its center (and the antipode) are
    always included, since that is where the hard functions peak.
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if samples < 1000:
        raise DomainError(f"need at least 1000 samples per region, got {samples}")
    Z = partition.centers.centers
    out = np.zeros(len(partition))
    for j in range(len(partition)):
        pts = np.vstack([Z[j], -Z[j], geo.region_samples(partition, j, samples, seed=(seed, j))])
        diff = np.asarray(f(pts)) - np.asarray(f_tilde(pts))
        out[j] = float(np.max(diff * diff)) / (2.0 * sigma ** 2)
    return out


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    z = norm.ppf(0.5 + level / 2.0)
    if not 0 <= successes <= trials or trials < 1:
        raise DomainError(f"need 0 <= successes <= trials, got {successes}/{trials}")
    p = successes / trials
    den = 1.0 + z * z / trials
    mid = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    lo = 0.0 if successes == 0 else max(0.0, mid - half)
    hi = 1.0 if successes == trials else min(1.0, mid + half)
    return lo, hi


@dataclass(frozen=True)
class CertificateReport:
    algorithm: str
    pair: tuple
    T: int
    delta: float
    trials: int
    event: str
    p_f: float
    p_f_tilde: float
    p_f_lower: float
    p_f_tilde_upper: float
    lhs: float
    rhs: float
    premises_met: bool
    verdict: str
    kl_per_region: tuple
    mean_counts: tuple

    def as_row(self) -> dict:
        return {"algorithm": self.algorithm, "i": self.pair[0], "j": self.pair[1], "T": self.T,
                "delta": self.delta, "trials": self.trials, "event": self.event, "p_f": self.p_f,
                "p_f_tilde": self.p_f_tilde, "p_f_lower": self.p_f_lower, "p_f_tilde_upper": self.p_f_tilde_upper,
                "lhs": self.lhs, "rhs": self.rhs, "premises_met": self.premises_met, "verdict": self.verdict}


def trial_seeds(seed, trials: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(trials)


def _event(trace: RegretTrace, event: str, region: int, partition: geo.SpherePartition) -> bool:
    if event == "report_in_region":
        return partition.assign(trace.x_hat) == region
    return trace.region_counts[region] >= trace.T / 2.0


def certify_change_of_measure(algorithm: str, fc: FunctionClass, pair: tuple, T: int, delta: float, trials: int,
                              event: str, sigma: float, candidates, theta: float | None = None, seed=0,
                              kl_samples: int = 1000) -> CertificateReport:
    """Empirical check of the two-measure inequality for f = f_i and f~ = f_i + 2 f_j.

    The event is about region i (where f peaks).  If P_f(A) >= 1 - delta and
    P_f~(A) <= delta hold with 95% Wilson margins, then
    sum_j E_f[N_j(T)] Dbar_j >= ln(1 / (2.4 delta)) must hold.  The pair (i, i)
    gives f~ = f.
    """
    if trials < 30:
        raise DomainError(f"need at least 30 trials, got {trials}")
    if not 0 < delta < 1.0 / 3.0:
        raise DomainError(f"delta must lie in (0, 1/3), got {delta}")
    if event not in EVENTS:
        raise DomainError(f"unknown event {event!r}; choose from {EVENTS}")
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    i, j = pair
    f, f_tilde = adversarial_pair(fc, i, j, allow_self=True)
    part = fc.partition
    theta = fc.kp.theta if theta is None else theta
    C = np.atleast_2d(geo.as_array(candidates))
    seeds = trial_seeds(seed, trials)
    env_f = Environment(f, sigma, 0, fc.d)
    env_ft = Environment(f_tilde, sigma, 0, fc.d)

    def one(k):
        out = []
        for env in (env_f, env_ft):
            e = Environment(env.objective, sigma, seeds[k], fc.d, optimum=env.optimum, check_samples=1)
            params = EpisodeParams(theta=theta, seed=int(seeds[k].generate_state(1)[0]), partition=part)
            tr = run_episode(algorithm, e, T, C, params)
            out.append((bool(_event(tr, event, i, part)), tr.region_counts))
        return out

    results = parallel_map(one, list(range(trials)))
    hits_f = sum(r[0][0] for r in results)
    hits_ft = sum(r[1][0] for r in results)
    counts_f = np.mean([r[0][1] for r in results], axis=0)
    kl = max_kl_per_region(f, f_tilde, part, sigma, kl_samples, seed)
    lhs = float(np.dot(counts_f, kl))
    rhs = math.log(1.0 / (2.4 * delta))
    lo_f, _ = wilson_interval(hits_f, trials)
    _, hi_ft = wilson_interval(hits_ft, trials)
    met = lo_f >= 1.0 - delta and hi_ft <= delta
    verdict = "premises not met" if not met else ("holds" if lhs >= rhs else "violated")
    return CertificateReport(algorithm, (i, j), T, delta, trials, event, hits_f / trials, hits_ft / trials,
                             lo_f, hi_ft, lhs, rhs, met, verdict, tuple(kl.tolist()), tuple(counts_f.tolist()))


# -- epsilon schedule -----------------------------------------------------------------

def eps_schedule(T: int, sigma: float, B: float, delta: float, d: int, calibration: float = 1.0,
                 max_iter: int = 200, rtol: float = 1e-6, hypothesis_ratio: float = 0.01) -> float:
    """Fixed point of eps = (c/2) sqrt(sigma^2/T (ln B/eps)^d (ln ln B/eps)^-d ln 1/delta).

    Refuses parameters with sigma^2 ln(1/delta) / B^2 > hypothesis_ratio * T.
    """
    if T < 1 or not (sigma > 0 and B > 0 and 0 < delta < 1 and calibration > 0):
        raise DomainError("need T >= 1, sigma > 0, B > 0, 0 < delta < 1, calibration > 0")
    if sigma ** 2 * math.log(1.0 / delta) / B ** 2 > hypothesis_ratio * T:
        raise HypothesisViolation("sigma^2 ln(1/delta) / B^2 is not small compared with T")

    def g(eps):
        u = math.log(B / eps)
        if u <= 1.0:
            raise HypothesisViolation("B/eps too small: ln ln(B/eps) must be positive")
        return 0.5 * calibration * math.sqrt(sigma ** 2 / T * (u / math.log(u)) ** d * math.log(1.0 / delta))

    eps = B * math.exp(-math.e)
    for _ in range(max_iter):
        new = g(eps)
        if abs(new - eps) <= rtol * new:
            if new >= B / 2.0:
                raise HypothesisViolation(f"fixed point eps={new} is not below B/2")
            return new
        eps = new
    raise ConvergenceError(f"eps fixed point not reached in {max_iter} iterations")


def eps_residual(eps: float, T: int, sigma: float, B: float, delta: float, d: int, calibration: float = 1.0) -> float:
    u = math.log(B / eps)
    g = 0.5 * calibration * math.sqrt(sigma ** 2 / T * (u / math.log(u)) ** d * math.log(1.0 / delta))
    return abs(g - eps) / eps


# -- worst-member regret ------------------------------------------------------------------

@dataclass(frozen=True)
class WorstMemberResult:
    T: int
    trial: int
    worst_member: int
    cumulative_regret: float
    simple_regret: float
    member_regrets: tuple
    region_counts: tuple = ()


def worst_member_regret(algorithm: str, fc: FunctionClass, T: int, sigma: float, candidates, trial_seed,
                        trial: int = 0, theta: float | None = None,
                        partition: geo.SpherePartition | None = None) -> WorstMemberResult:
    """Run the algorithm on every member with shared noise and return the largest regret."""
    theta = fc.kp.theta if theta is None else theta
    C = np.atleast_2d(geo.as_array(candidates))
    template = CandidatePosterior(C, theta, max(sigma ** 2, 1e-6))
    ss = trial_seed if isinstance(trial_seed, np.random.SeedSequence) else np.random.SeedSequence(trial_seed)
    algo_seed = int(ss.generate_state(1)[0])
    regrets = []
    simple = []
    counts = []
    for f in fc.functions:
        env = Environment(f, sigma, trial_seed, fc.d, optimum=f.peak, check_samples=1)
        tr = run_episode(algorithm, env, T, C, EpisodeParams(theta=theta, seed=algo_seed, partition=partition),
                         posterior_factory=template.copy)
        regrets.append(tr.cumulative_regret)
        simple.append(tr.simple_regret)
        counts.append(tr.region_counts)
    k = int(np.argmax(regrets))
    rc = () if counts[k] is None else tuple(int(c) for c in counts[k])
    return WorstMemberResult(T, trial, k, regrets[k], simple[k], tuple(regrets), rc)
