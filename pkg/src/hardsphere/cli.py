"""Command-line entry point: ``hardsphere-gp <subcommand> --config <path>``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import geometry as geo
from .bandit import certify_change_of_measure, eps_schedule, parallel_map, worst_member_regret
from .exceptions import (BudgetError, ConfigError, ConvergenceError, DomainError, FactorizationError,
                         HypothesisViolation, RangeError)
from .experiments.config import config_hash, load_config
from .gp import greedy_mig, mig_bound_min, theory_rate
from .instances import HardFunction, build_class
from .mercer import KernelParams, quadrature_spectrum
from .verify import run_suite

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_NUMERIC = 0, 2, 3, 4


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


class OutputSet:
    """Collects output files and writes a manifest referencing all of them."""

    def __init__(self, out_dir: Path, subcommand: str, cfg):
        self.out_dir = out_dir
        self.subcommand = subcommand
        self.cfg = cfg
        self.files: dict[str, str] = {}
        self.checks: dict[str, bool] = {}
        self.started = time.perf_counter()
        out_dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str):
        data = text.encode("utf-8")
        (self.out_dir / name).write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def close(self) -> dict:
        manifest = {
            "subcommand": self.subcommand,
            "config_hash": config_hash(self.cfg),
            "config": self.cfg.to_dict(),
            "version": __version__,
            "seed": self.cfg.seed,
            "wall_clock_seconds": round(time.perf_counter() - self.started, 3),
            "checks": self.checks,
            "files": self.files,
        }
        text = json.dumps(manifest, indent=2, sort_keys=True, default=list)
        (self.out_dir / f"{self.subcommand}_manifest.json").write_text(text + "\n", encoding="utf-8")
        return manifest


def candidate_pool(d: int, count: int, seed: int, extra: np.ndarray | None = None) -> np.ndarray:
    """Uniform angle grid on the circle, uniform samples otherwise; ``extra`` rows are appended."""
    if d == 1:
        ang = 2.0 * math.pi * np.arange(count) / count
        pool = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        pool = geo.sample_uniform(d, count, seed)
    return pool if extra is None else np.vstack([pool, extra])


# -- subcommands ----------------------------------------------------------------

def cmd_instance(cfg, out: OutputSet) -> int:
    kp = KernelParams(cfg.d, cfg.theta)
    z = geo.north_pole(cfg.d)
    rho = np.linspace(0.0, math.pi, cfg.profile_points)
    # profile along a great circle through z
    direction = geo.basis_vector(cfg.d, 0)
    pts = np.cos(rho)[:, None] * z + np.sin(rho)[:, None] * direction
    payload = {"functions": [], "kernel": {"d": cfg.d, "theta": cfg.theta}}
    for N in cfg.N_list:
        f = HardFunction(z, cfg.eps, N, kp)
        vals = f(pts)
        out.write(f"profile_N{N}.csv", csv_text(["geodesic_angle", "f_value"], [[a, v] for a, v in zip(rho, vals)]))
        out.checks[f"peak_N{N}"] = bool(abs(vals[0] - 2 * cfg.eps) <= 1e-12 * max(1.0, cfg.eps))
        payload["functions"].append({"center": z.tolist(), "eps": cfg.eps, "N": N})
    if cfg.B is not None:
        fc = build_class(cfg.class_eps, cfg.B, kp, quadrature_spectrum(kp, 60), seed=cfg.seed)
        payload["class"] = fc.to_dict()
        out.checks["class_norm_within_budget"] = bool(fc.member_norm <= cfg.B)
    out.write("instance.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_verify(cfg, out: OutputSet) -> int:
    checks = run_suite(b_scale=cfg.perturb_b, samples=cfg.samples, seed=cfg.seed)
    report = {"checks": [c.to_dict() for c in checks], "all_passed": all(c.passed for c in checks),
              "perturb_b": cfg.perturb_b}
    out.write("verify_report.json", json.dumps(report, indent=2, sort_keys=True))
    out.checks.update({c.name: c.passed for c in checks})
    return EXIT_OK if report["all_passed"] else EXIT_VERIFY


def cmd_mig(cfg, out: OutputSet) -> int:
    kp = KernelParams(cfg.d, cfg.theta)
    sp = quadrature_spectrum(kp, cfg.n_max)
    C = geo.sample_uniform(cfg.d, cfg.candidates, cfg.seed)
    Ts = sorted(cfg.T_list)
    g = greedy_mig(Ts[-1], C, cfg.theta, cfg.noise_var)
    rows = []
    for T in Ts:
        gain = float(g.gains[T - 1])
        bound, M = mig_bound_min(T, sp, cfg.noise_var)
        rows.append([T, gain, bound, M, gain / theory_rate(T, cfg.d)])
        out.checks[f"bound_dominates_T{T}"] = bool(bound >= gain)
    ratios = [r[4] for r in rows]
    out.checks["ratio_band_le_2"] = bool(max(ratios) / min(ratios) <= 2.0)
    out.write("mig.csv", csv_text(["T", "greedy_gain", "bound_minM", "M_star", "ratio_to_theory"], rows))
    return EXIT_OK


def cmd_regret(cfg, out: OutputSet) -> int:
    kp = KernelParams(cfg.d, cfg.theta)
    sp = quadrature_spectrum(kp, 60)
    C = candidate_pool(cfg.d, cfg.candidates, cfg.seed)
    rows = []
    for T in cfg.T_list:
        eps = cfg.eps if cfg.eps is not None else eps_schedule(T, cfg.sigma, cfg.B, cfg.delta, cfg.d, cfg.calibration)
        fc = build_class(eps, cfg.B, kp, sp, seed=cfg.seed)
        seeds = np.random.SeedSequence([cfg.seed, T]).spawn(cfg.trials)
        results = parallel_map(
            lambda k: worst_member_regret(cfg.algorithm, fc, T, cfg.sigma, C, seeds[k], k, partition=fc.partition),
            list(range(cfg.trials)))
        for r in results:
            rows.append([T, r.trial, eps, len(fc), r.worst_member, r.cumulative_regret, r.simple_regret,
                         r.cumulative_regret / (T * eps), ";".join(str(c) for c in r.region_counts)])
        out.checks[f"worst_regret_ge_0.01_T_eps_T{T}"] = bool(min(r.cumulative_regret for r in results) >= 0.01 * T * eps)
    out.write("regret.csv", csv_text(["T", "trial", "eps", "members", "worst_member", "R_T", "r_T",
                                      "R_T_over_T_eps", "region_counts"], rows))
    return EXIT_OK


def cmd_certify(cfg, out: OutputSet) -> int:
    kp = KernelParams(cfg.d, cfg.theta)
    fc = build_class(cfg.eps, cfg.B, kp, quadrature_spectrum(kp, 60), seed=cfg.seed)
    C = candidate_pool(cfg.d, cfg.candidates, cfg.seed)
    rows = []
    header = None
    for i, j in cfg.pairs:
        rep = certify_change_of_measure(cfg.algorithm, fc, (int(i), int(j)), cfg.T, cfg.delta, cfg.trials,
                                        cfg.event, cfg.sigma, C, seed=cfg.seed)
        row = rep.as_row()
        header = list(row)
        rows.append(list(row.values()))
        out.checks[f"pair_{i}_{j}_not_violated"] = rep.verdict != "violated"
    out.write("certify.csv", csv_text(header, rows))
    return EXIT_OK if all(out.checks.values()) else EXIT_VERIFY


COMMANDS = {"instance": cmd_instance, "verify": cmd_verify, "mig": cmd_mig, "regret": cmd_regret,
            "certify": cmd_certify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hardsphere-gp", description=__doc__)
    p.add_argument("subcommand", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--seed", type=int, default=None, help="override the configured seed")
    p.add_argument("--out", default=".", help="output directory")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.subcommand, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = OutputSet(Path(args.out), args.subcommand, cfg)
    try:
        code = COMMANDS[args.subcommand](cfg, out)
    except (DomainError, HypothesisViolation, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, FactorizationError, RangeError, BudgetError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out.close()
    return code


if __name__ == "__main__":
    sys.exit(main())
