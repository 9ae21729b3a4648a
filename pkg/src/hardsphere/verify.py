"""Numerical verification suite for the closed forms and constructions.

Every check returns a :class:`Check` with the measured quantity, the
tolerance it was held to and a pass flag.  ``b_scale`` multiplies every
Gegenbauer-route evaluation of b_N so the harness can be fault-injected.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import geometry as geo
from .bandit import Environment, EpisodeParams, eps_schedule, run_episode
from .gp import PosteriorState, greedy_mig, mig_bound_min, select_M, theory_rate
from .instances import (GaussianBaselineParams, b_profile, b_profile_legendre, build_class,
                        exclusivity_violations, gaussian_baseline, gaussian_baseline_sum, gaussian_half_width,
                        measure_width, HardFunction, peak_b, sup_sum_terms, annulus_slope)
from .mercer import (KernelParams, eigen_projection, fitted_lower_constant, hard_norm_profile,
                     log_eigen_lower_bound, quadrature_spectrum, select_N_bar, kappa)
from .special import (dirichlet, gegenbauer, gegenbauer_all, gegenbauer_at_one, harmonic_dim,
                      legendre_from_gegenbauer, legendre_sphere_all, sphere_area)


@dataclass(frozen=True)
class Check:
    name: str
    description: str
    measured: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        out = asdict(self)
        out["measured"] = float(self.measured)
        out["tolerance"] = float(self.tolerance)
        out["passed"] = bool(self.passed)
        return out


def _le(name, desc, measured, tol) -> Check:
    return Check(name, desc, float(measured), float(tol), bool(measured <= tol))


def _ge(name, desc, measured, tol) -> Check:
    return Check(name, desc, float(measured), float(tol), bool(measured >= tol))


# -- polynomial identities ------------------------------------------------------

def dirichlet_sum_deviation(N_max: int = 64, grid: int = 1000) -> float:
    t = np.linspace(math.pi / grid, math.pi, grid)
    worst = 0.0
    for N in range(1, N_max + 1):
        brute = 1.0 + 2.0 * np.sum(np.cos(np.outer(np.arange(1, N + 1), t)), axis=0)
        worst = max(worst, float(np.max(np.abs(brute - dirichlet(N, t)))))
    return worst


def dirichlet_route_deviation(b_scale: float = 1.0, N_max: int = 64, grid: int = 1000) -> float:
    """Max relative (to peak) gap between the Gegenbauer route and Dirichlet / (2 pi) on the circle."""
    t = np.linspace(0.0, math.pi, grid)
    worst = 0.0
    for N in range(1, N_max + 1):
        geg = b_scale * b_profile(np.cos(t), N, 1)
        ref = dirichlet(N, t) / (2.0 * math.pi)
        worst = max(worst, float(np.max(np.abs(geg - ref))) / peak_b(N, 1))
    return worst


def half_peak_violations(N_range=range(2, 65), grid: int = 2000) -> int:
    bad = 0
    for N in N_range:
        t = np.linspace(math.pi / N, math.pi, grid)
        bad += int(np.sum(dirichlet(N, t) > (1 + 2 * N) / 2.0))
    return bad


def gegenbauer_identity_violations(n_max: int = 50, etas=(0.5, 1.0, 1.5, 2.0, 3.0), grid: int = 201) -> dict:
    t = np.linspace(-1.0, 1.0, grid)
    counts = {"recurrence_addition": 0, "endpoint_parity": 0, "max_at_endpoints": 0, "dirichlet_u": 0}
    for eta in etas:
        lo = gegenbauer_all(n_max, eta, t)
        hi = gegenbauer_all(n_max, eta + 1.0, t)
        for n in range(n_max + 1):
            hi_m2 = hi[n - 2] if n >= 2 else 0.0
            lhs = (n + eta) * lo[n]
            rhs = eta * (hi[n] - hi_m2)
            counts["recurrence_addition"] += int(np.sum(np.abs(lhs - rhs) > 1e-8 * np.maximum(1.0, np.abs(hi[n]))))
            at_one = gegenbauer_at_one(n, eta)
            counts["endpoint_parity"] += int(abs(lo[n][-1] - at_one) > 1e-8 * at_one)
            counts["endpoint_parity"] += int(np.max(np.abs(lo[n][::-1] - (-1) ** n * lo[n])) > 1e-8 * at_one)
            if eta in (1.0, 1.5, 2.0):
                peak = np.max(np.abs(lo[n]))
                counts["max_at_endpoints"] += int(abs(peak - at_one) > 1e-8 * at_one)
    xi = np.linspace(math.pi / 1000, math.pi, 1000)
    u = gegenbauer_all(64, 1.0, np.cos(xi))
    for N in range(1, 65):
        gap = np.abs(u[N] + u[N - 1] - dirichlet(N, xi))
        counts["dirichlet_u"] += int(np.sum(gap > 1e-8))
    return counts


def legendre_rescaling_deviation(ds=(2, 3, 4), n_max: int = 40, grid: int = 401) -> float:
    t = np.linspace(-1.0, 1.0, grid)
    worst = 0.0
    for d in ds:
        rows = legendre_sphere_all(n_max, d + 1, t)
        for n in range(n_max + 1):
            ref = legendre_from_gegenbauer(n, d + 1, t)
            # relative to the peak value P(1) = 1
            worst = max(worst, float(np.max(np.abs(rows[n] - ref))))
    return worst


def gen_ub_running_ratio(eta: float, n_lo: int = 16, n_hi: int = 64, grid: int = 4000) -> float:
    vals = []
    for n in range(4, n_hi + 1):
        xi = np.linspace(1.0 / n, math.pi / 2.0, grid)
        vals.append(np.max(np.abs(gegenbauer(n, eta, np.cos(xi))) * xi ** eta * n ** (1.0 - eta)))
    run = np.maximum.accumulate(vals)
    return float(run[n_hi - 4] / run[n_lo - 4])


# -- closed forms of b_N --------------------------------------------------------

def closed_form_deviation(b_scale: float = 1.0, ds=(1, 2, 3), N_max: int = 40, pairs: int = 1000, seed=0) -> float:
    """Max relative error between the Gegenbauer, Legendre and (d = 1) Dirichlet routes."""
    worst = 0.0
    for d in ds:
        x = geo.sample_uniform(d, pairs, (seed, d, 0))
        z = geo.sample_uniform(d, pairs, (seed, d, 1))
        t = np.clip(np.sum(x * z, axis=1), -1.0, 1.0)
        for N in range(1, N_max + 1):
            a = b_scale * b_profile(t, N, d)
            b = b_profile_legendre(t, N, d)
            worst = max(worst, float(np.max(np.abs(a - b) / np.abs(b))))
            if d == 1:
                c = dirichlet(N, np.arccos(t)) / (2.0 * math.pi)
                worst = max(worst, float(np.max(np.abs(a - c) / np.abs(c))))
    return worst


def b0_violations(ds=(1, 2, 3), N_max: int = 40) -> int:
    bad = 0
    for d in ds:
        for N in range(1, N_max + 1):
            lhs = harmonic_dim(N, d + 2)
            bad += int(lhs * math.factorial(d) < N ** d)
            bad += int(peak_b(N, d) * sphere_area(d) < N ** d / math.factorial(d) * (1 - 1e-12))
    return bad


def f_ub_band(d: int, Ns=(8, 16, 32), grid: int = 20_000) -> float:
    eta = (d - 1) / 2.0
    worst = 1.0
    for mirror in (False, True):
        vals = []
        for N in Ns:
            rho = np.linspace(1.0 / N, math.pi / 2, grid) if not mirror else np.linspace(math.pi / 2, math.pi - 1.0 / N, grid)
            f = 2.0 * b_profile(np.cos(rho), N, d) / peak_b(N, d)
            r = math.pi - rho if mirror else rho
            vals.append(np.max(np.abs(f) * r ** (eta + 1) * N ** (d - eta)))
        worst = max(worst, max(vals) / min(vals))
    return float(worst)


# -- spectrum ---------------------------------------------------------------------

def mercer_checks(d: int, theta: float = 1.0, n_max: int = 60) -> dict:
    kp = KernelParams(d, theta)
    sp = quadrature_spectrum(kp, n_max)
    trace_gap = abs(sphere_area(d) - float(np.dot(sp.lambdas, sp.multiplicities)))
    ang = np.linspace(0.0, math.pi, 181)
    t = np.cos(ang)
    rows = legendre_sphere_all(n_max, d + 1, t)
    recon = np.tensordot(sp.lambdas * np.array(sp.multiplicities, dtype=float) / sphere_area(d), rows, axes=1)
    recon_err = float(np.max(np.abs(recon - kappa(t, theta))))
    C_star = fitted_lower_constant(kp, 30, sp)
    lb_gap = min(sp.log_lambdas[n] - log_eigen_lower_bound(n, kp, C_star) for n in range(31))
    proj = max(abs(eigen_projection(n, kp) - sp.lambdas[n]) / sp.lambdas[n] for n in range(6))
    return {"trace_gap": trace_gap, "reconstruction": recon_err, "lower_bound_gap": float(lb_gap),
            "projection_rel": float(proj)}


def circulant_deviation(theta: float = 1.0, m: int = 512, n_max: int = 10) -> float:
    """Quadrature eigenvalues vs eigenvalues of the 2m-point circulant kernel matrix (scaled by 2 pi / 2m)."""
    sp = quadrature_spectrum(KernelParams(1, theta), max(n_max, 20))
    phi = 2.0 * math.pi * np.arange(2 * m) / (2 * m)
    row = kappa(np.cos(phi), theta)
    eig = np.real(np.fft.fft(row)) * (2.0 * math.pi / (2 * m))
    return float(max(abs(eig[n] - sp.lambdas[n]) for n in range(n_max + 1)))


def norm_tail_increasing(d: int = 1, theta: float = 1.0) -> bool:
    """The hard-function norm increases in N from its minimizer on."""
    sp = quadrature_spectrum(KernelParams(d, theta), 60)
    prof = hard_norm_profile(1.0, sp)
    k = int(np.argmin(prof))
    return bool(np.all(np.diff(prof[k:]) > 0))


def n_bar_band(d: int = 1, theta: float = 1.0, B: float = 1.0, eps_grid=(1e-3, 1e-5, 1e-8, 1e-12)) -> float:
    sp = quadrature_spectrum(KernelParams(d, theta), 60)
    r = []
    for eps in eps_grid:
        L = math.log(B / eps)
        r.append(select_N_bar(eps, B, sp) / (L / math.log(L)))
    return float(max(r) / min(r))


# -- instances ------------------------------------------------------------------------

def instance_checks(d: int, eps_grid=(1e-3, 1e-5, 1e-8), B: float = 1.0, theta: float = 1.0,
                    samples: int = 100_000, seed=0, b_scale: float = 1.0) -> dict:
    kp = KernelParams(d, theta)
    sp = quadrature_spectrum(kp, 60)
    peak_err, conf_bad, norm_excess, excl = 0.0, 0, -math.inf, 0
    widths, ratios, slopes = [], [], []
    for k, eps in enumerate(eps_grid):
        fc = build_class(eps, B, kp, sp, seed=seed)
        f = fc.functions[0]
        x = geo.sample_uniform(d, samples, (seed, k))
        x = np.vstack([f.z, x])
        vals = b_scale * f(x)
        peak_err = max(peak_err, abs(vals.max() - 2 * eps) / eps, max(0.0, -2 * eps - vals.min()) / eps)
        opt = vals >= 2 * eps - eps
        near = np.minimum(geo.geodesic(x, f.z), geo.geodesic(x, -f.z)) <= fc.rho_star
        conf_bad += int(np.sum(opt & ~near))
        norm_excess = max(norm_excess, fc.member_norm - B)
        widths.append(fc.rho_star * fc.N)
        excl += exclusivity_violations(fc, 20_000, seed)
        st = sup_sum_terms(fc, 0, 2000, seed)
        ratios.append(st.ratio)
        try:
            slopes.append(annulus_slope(st))
        except Exception:
            slopes.append(float("nan"))
    return {"peak_rel_err": peak_err, "confinement_violations": conf_bad, "norm_excess": norm_excess,
            "width_band": max(widths) / min(widths), "exclusivity_violations": excl,
            "sup_sum_band": max(ratios) / min(ratios), "sup_sum_ratios": ratios, "annulus_slopes": slopes}


def width_law_d1(N_range=range(2, 65), grid: int = 4000) -> tuple[int, float]:
    """(count of N with rho* > pi/N, band of rho* N over N in 4..64)."""
    kp = KernelParams(1, 1.0)
    over = 0
    prod = []
    for N in N_range:
        rs = measure_width(HardFunction(geo.north_pole(1), 1.0, N, kp), grid)
        over += int(rs > math.pi / N + math.pi / grid)
        if N >= 4:
            prod.append(rs * N)
    return over, max(prod) / min(prod)


# -- geometry ----------------------------------------------------------------------------

def geometry_checks(samples: int = 100_000, seed=0) -> dict:
    out = {}
    slopes = {}
    ws = (0.4, 0.2, 0.1, 0.05)
    for d in (1, 2):
        counts = [len(geo.greedy_separated_set(d, w, seed=seed)) for w in ws]
        slopes[d] = float(np.polyfit(np.log(1 / np.array(ws)), np.log(counts), 1)[0]) / d
    out["packing_slope_rel"] = slopes
    sep = geo.greedy_separated_set(2, 0.2, seed=seed)
    part = geo.build_partition(sep)
    x = geo.sample_uniform(2, samples, seed)
    a = part.assign(x)
    out["antipodal_mismatch"] = int(np.sum(a != part.assign(-x)))
    out["separation_ok"] = bool(sep.min_separation() > sep.w)
    bad = 0
    for j, z in enumerate(sep.centers):
        near = np.minimum(geo.geodesic(x, z), geo.geodesic(x, -z)) < sep.w / 2
        bad += int(np.sum(a[near] != j))
    out["ball_violations"] = bad
    return out


# -- GP ---------------------------------------------------------------------------------------

def gp_checks(seed=0) -> dict:
    x = geo.sample_uniform(2, 256, seed)
    st = PosteriorState(1.0, 0.1)
    for row in x:
        st.append(row, 0.0)
    logdet_gap = abs(st.log_det - st.fresh_log_det())
    C = geo.sample_uniform(1, 2048, seed)
    g = greedy_mig(64, C, 1.0, 1.0)
    inc = g.increments()
    submod = float(np.max(np.diff(inc))) if inc.size > 1 else 0.0
    sp = quadrature_spectrum(KernelParams(1, 1.0), 60)
    margins = []
    for T in (64, 128, 256):
        gT = greedy_mig(T, C, 1.0, 1.0).total
        bd, _ = mig_bound_min(T, sp, 1.0)
        margins.append(bd / gT)
    Ms = [select_M(math.exp(k), 1, 1.0) * math.log(k) / k for k in range(3, 11)]
    return {"logdet_gap": logdet_gap, "max_increment_rise": submod, "bound_over_greedy_min": min(margins),
            "bound_over_greedy_max": max(margins), "select_M_band": max(Ms) / min(Ms)}


def mig_scaling_band(Ts=(64, 256, 1024, 4096), candidates: int = 8192, seed=0) -> float:
    C = geo.sample_uniform(1, candidates, seed)
    g = greedy_mig(max(Ts), C, 1.0, 1.0)
    r = [g.gains[T - 1] / theory_rate(T, 1) for T in Ts]
    return float(max(r) / min(r))


# -- bandit -------------------------------------------------------------------------------------

def zero_objective(x):
    x = np.asarray(x)
    return np.zeros(x.shape[0]) if x.ndim > 1 else 0.0


def noise_checks(steps: int = 10_000, sigma: float = 0.5, seed=0) -> dict:
    env = Environment(zero_objective, sigma, seed, 1, optimum=0.0)
    C = geo.sample_uniform(1, 64, seed)
    tr = run_episode("random", env, steps, C, EpisodeParams(seed=seed))
    return {"mean_abs": abs(float(tr.observations.mean())), "mean_tol": 4 * sigma / 100,
            "var_rel": abs(float(tr.observations.var()) / sigma ** 2 - 1.0),
            "regret_total": tr.cumulative_regret}


def eps_monotone() -> bool:
    vals = [eps_schedule(T, 0.1, 1.0, 0.1, 1) for T in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6)]
    return bool(np.all(np.diff(vals) < 0))


def gaussian_checks(N_max: int = 30) -> dict:
    gp = GaussianBaselineParams(1.0, 1.0)
    xs = np.linspace(-3.0, 3.0, 601)
    dev = max(float(np.max(np.abs(gaussian_baseline(xs, N, gp) - gaussian_baseline_sum(xs, N, gp))))
              / gaussian_baseline(0.0, N, gp) for N in range(N_max + 1))
    hw = [gaussian_half_width(N, gp) * math.sqrt(N) for N in range(4, 65)]
    return {"cd_rel_to_peak": dev, "half_width_band": max(hw) / min(hw)}


# -- suite ------------------------------------------------------------------------------------------

def run_suite(b_scale: float = 1.0, samples: int = 20_000, seed=0) -> list[Check]:
    checks: list[Check] = []
    checks.append(_le("dirichlet_cosine_sum", "cosine sum equals sin((N+1/2)t)/sin(t/2), N<=64",
                      dirichlet_sum_deviation(), 1e-8))
    checks.append(_le("dirichlet_cross_route", "Gegenbauer route equals Dirichlet/(2 pi) on the circle",
                      dirichlet_route_deviation(b_scale), 1e-8))
    checks.append(_le("half_peak_bound", "Dirichlet kernel at most half its peak on [pi/N, pi]",
                      half_peak_violations(), 0))
    gi = gegenbauer_identity_violations()
    for key, val in gi.items():
        checks.append(_le(f"gegenbauer_{key}", f"Gegenbauer identity {key}, n<=50", val, 0))
    checks.append(_le("legendre_rescaling", "sphere Legendre vs rescaled Gegenbauer, d in 2..4",
                      legendre_rescaling_deviation(), 1e-10))
    checks.append(_le("gegenbauer_decay_shape", "running max of scaled Gegenbauer sup, n=64 vs n=16",
                      max(gen_ub_running_ratio(eta) for eta in (0.5, 1.0, 1.5, 2.0, 3.0)), 1.5))
    checks.append(_le("closed_form_equivalence", "Gegenbauer vs Legendre vs Dirichlet routes, d in 1..3",
                      closed_form_deviation(b_scale), 1e-8))
    checks.append(_le("peak_lower_bound", "b_N(z)|S^d| >= N^d/d!", b0_violations(), 0))
    checks.append(_le("decay_envelope_band", "scaled |f| envelope stable over N, d in 2..3",
                      max(f_ub_band(2), f_ub_band(3)), 2.0))
    for d in (1, 2):
        mc = mercer_checks(d)
        checks.append(_le(f"trace_identity_d{d}", "sum lambda_n N_n equals |S^d|", mc["trace_gap"], 1e-6))
        checks.append(_le(f"mercer_reconstruction_d{d}", "truncated Mercer sum reproduces the kernel",
                          mc["reconstruction"], 1e-6))
        checks.append(_ge(f"fitted_lower_bound_d{d}", "quadrature eigenvalues above fitted lower bound, n<=30 (log gap)",
                          mc["lower_bound_gap"], -1e-9))
        checks.append(_le(f"projection_cross_check_d{d}", "transformed vs direct projection integral, n<=5",
                          mc["projection_rel"], 1e-8))
    checks.append(_le("circulant_oracle", "quadrature vs 1024-point circulant eigenvalues, n<=10",
                      circulant_deviation(), 1e-6))
    checks.append(_ge("norm_increasing_tail", "hard-function norm increasing past its minimizer",
                      float(norm_tail_increasing()), 1.0))
    checks.append(_le("n_bar_growth_band", "N_bar / (ln(B/eps)/lnln(B/eps)) band", n_bar_band(), 3.0))
    over, band = width_law_d1()
    checks.append(_le("width_below_pi_over_N", "rho* <= pi/N on the circle, N in 2..64", over, 0))
    checks.append(_le("width_times_N_band", "rho* N band over N in 4..64", band, 2.0))
    for d in (1, 2):
        ic = instance_checks(d, samples=samples, seed=seed, b_scale=b_scale)
        checks.append(_le(f"peak_value_d{d}", "max f = 2 eps and min f >= -2 eps (relative to eps)",
                          ic["peak_rel_err"], 1e-9))
        checks.append(_le(f"optimal_confinement_d{d}", "eps-optimal samples inside the +-z balls",
                          ic["confinement_violations"], 0))
        checks.append(_le(f"norm_budget_d{d}", "member RKHS norm minus budget", ic["norm_excess"], 0.0))
        checks.append(_le(f"width_band_d{d}", "rho* N_bar band across eps", ic["width_band"], 2.0))
        checks.append(_le(f"exclusivity_d{d}", "no member eps-optimal in a foreign region",
                          ic["exclusivity_violations"], 0))
        checks.append(_le(f"sup_sum_band_d{d}", "sup-sum ratio band across eps", ic["sup_sum_band"], 3.0))
        if d >= 2:
            checks.append(_le(f"annulus_slope_d{d}", "largest annulus log-log slope across eps",
                              max(ic["annulus_slopes"]), -1.5))
    gc = geometry_checks(samples=max(samples, 100_000), seed=seed)
    for d, s in gc["packing_slope_rel"].items():
        checks.append(Check(f"packing_slope_d{d}", "log|centers| vs log(1/w) slope / d", s, 0.2, bool(abs(s - 1) <= 0.2)))
    checks.append(_le("partition_antipodal", "region(x) = region(-x)", gc["antipodal_mismatch"], 0))
    checks.append(_ge("separation", "min pairwise distance > w", float(gc["separation_ok"]), 1.0))
    checks.append(_le("antipodal_ball_containment", "w/2 balls at z and -z assigned to z", gc["ball_violations"], 0))
    gpc = gp_checks(seed)
    checks.append(_le("incremental_logdet", "rank-one log-det vs fresh factorization, 256 appends",
                      gpc["logdet_gap"], 1e-8))
    checks.append(_le("greedy_submodularity", "largest rise between consecutive greedy increments",
                      gpc["max_increment_rise"], 1e-12))
    checks.append(_ge("mig_bound_dominates", "min over T of bound / greedy gain", gpc["bound_over_greedy_min"], 1.0))
    checks.append(_le("mig_bound_factor", "max over T of bound / greedy gain", gpc["bound_over_greedy_max"], 10.0))
    checks.append(_le("select_M_band", "M lnlnT / lnT band, T in e^3..e^10", gpc["select_M_band"], 2.0))
    nc = noise_checks(seed=seed)
    checks.append(_le("noise_mean", "empirical noise mean over 10^4 steps", nc["mean_abs"], nc["mean_tol"]))
    checks.append(_le("noise_variance", "relative error of empirical noise variance", nc["var_rel"], 0.1))
    checks.append(_le("zero_objective_regret", "regret on the zero objective", abs(nc["regret_total"]), 0.0))
    checks.append(_ge("eps_schedule_monotone", "eps decreases with T", float(eps_monotone()), 1.0))
    gs = gaussian_checks()
    checks.append(_le("gaussian_closed_form", "Christoffel-Darboux vs direct sum (relative to peak)",
                      gs["cd_rel_to_peak"], 1e-7))
    checks.append(_le("gaussian_half_width_band", "half-width sqrt(N) band, N in 4..64", gs["half_width_band"], 2.0))
    return checks
