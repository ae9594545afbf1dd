"""Batch front-end.

Subcommands: ``fixpoint``, ``simulate``, ``invariance``, ``specfun-selftest``,
``report``.  Configuration comes from an INI-style file (sections per
subcommand) overridden by command-line flags; identical configuration and
seed produce byte-identical outputs.

Exit codes: 0 success, 1 configuration/precondition error, 2 numerical
failure, 3 invariance counterexample.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

from . import fixedpoint as fp
from . import invariants as inv
from . import sim as qsim
from .errors import BracketError, DivergenceError, DomainError, UnstableInversionError
from .grids import make_grid, read_even_fn, write_even_fn
from .output import write_csv, write_json, write_manifest
from .renorm import RenormParams, residual_norm
from .specfun import HypergeomArgs, erf, gamma_fn, kummer_m, lower_incomplete_gamma, mu0_threshold, tricomi_u

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_COUNTEREXAMPLE = 3

# the admissible shooting range contains balanced profiles only at integer
# initial values; the default bracket straddles the one at 1
_DEFAULTS = {
    "fixpoint": {
        "bracket_lo": 0.5,
        "bracket_hi": 1.2,
        "tol": 1e-14,
        "grid_L": 4.5,
        "grid_N": 577,
        "betas": "0.5,0.7,0.9",
        "scan": True,
    },
    "simulate": {
        "T": 1.0,
        "t_end_frac": 0.9,
        "n_samples": 24,
        "grid_N": 4097,
        "kernel": "halfline-conv",
    },
    "invariance": {
        "a": 2.0,
        "k": 0.5,
        "K": 10.0,
        "A": 10.0,
        "alpha": 0.4,
        "delta0": 0.5,
        "sigma": -1.5,
        "nu_exp": 0.6,
        "beta0": 0.8,
        "mu_factor": 1.05,
        "betas": "0.85,0.9,0.99",
        "n_samples": 50,
    },
}


def _load_config(path: str | None, section: str) -> dict:
    cfg = dict(_DEFAULTS.get(section, {}))
    if path:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ValueError(f"cannot read config file {path}")
        for sec in ("global", section):
            if parser.has_section(sec):
                cfg.update(dict(parser.items(sec)))
    return cfg


def _coerce(cfg: dict, casts: dict) -> dict:
    out = dict(cfg)
    for key, cast in casts.items():
        if key in out and isinstance(out[key], str):
            out[key] = cast(out[key])
    return out


def _parse_betas(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(b) for b in text]
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


def _profile_artifacts(out: Path, sol: fp.LimitOdeSolution, betas, fit, agreement):
    write_even_fn(sol.samples, out / "profile.csv")
    rows = []
    for beta in betas:
        res = residual_norm(sol.samples, RenormParams(beta=beta), 2.0)
        rows.append((beta, res.lp, res.sup))
    write_csv(out / "residuals.csv", ["beta", "residual_l2", "residual_sup"], rows)
    summary = {
        "nu_star": sol.nu,
        "tail_class": sol.tail_class.value,
        "tail_fit_rate": sol.tail_fit_rate,
        "residuals_by_beta": {str(b): {"l2": r[1], "sup": r[2]} for b, r in zip(betas, rows)},
        "coefficient_fit": {
            "nu": fit.nu,
            "c1": fit.c1,
            "c2": fit.c2,
            "ratio": fit.ratio,
            "misfit": fit.misfit,
            "refined": fit.refined,
        },
        "method_agreement": agreement,
    }
    write_json(out / "fixpoint_summary.json", summary)
    return ["profile.csv", "profile.meta.json", "residuals.csv", "fixpoint_summary.json"]


def cmd_fixpoint(args) -> int:
    try:
        cfg = _load_config(args.config, "fixpoint")
        cfg = _coerce(cfg, {"bracket_lo": float, "bracket_hi": float, "tol": float,
                            "grid_L": float, "grid_N": int, "scan": lambda s: str(s).lower() != "false"})
        if args.grid_L is not None:
            cfg["grid_L"] = args.grid_L
        if args.grid_N is not None:
            cfg["grid_N"] = args.grid_N
        if args.beta:
            cfg["betas"] = args.beta
        betas = _parse_betas(cfg["betas"])
        grid = make_grid(cfg["grid_L"], cfg["grid_N"])
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.nu is not None:
            nu_star = args.nu
        else:
            nu_star = fp.find_nu(cfg["bracket_lo"], cfg["bracket_hi"], cfg["tol"], grid)
        sol = fp.march_limit_ode(nu_star, grid)
        if args.verify_only or args.gamma != 2.0:
            rows = []
            for beta in betas:
                res = residual_norm(sol.samples, RenormParams(beta=beta, gamma=args.gamma), 2.0)
                rows.append((beta, res.lp, res.sup))
            write_csv(out / "residuals.csv", ["beta", "residual_l2", "residual_sup"], rows)
            write_json(out / "fixpoint_summary.json",
                       {"nu_star": nu_star, "tail_class": sol.tail_class.value,
                        "residuals_by_beta": {str(b): {"l2": r[1], "sup": r[2]}
                                              for b, r in zip(betas, rows)}})
            write_manifest(out, "fixpoint",
                           {**cfg, "nu": nu_star, "gamma": args.gamma,
                            "verify_only": args.verify_only},
                           ["residuals.csv", "fixpoint_summary.json"])
            worst = max(r[2] for r in rows)
            print(f"nu={nu_star}: worst sup-residual {worst:.3e} over betas {betas}")
            return EXIT_OK

        fit = fp.fit_hat_parameters(sol)
        fit = fp.refine_hat_parameters(fit)
        hat = fp.ClosedFormHat(fit.nu, fit.c1, fit.c2, precise_real=True)
        agreement = {}
        for eta in (0.5, 1.0, 2.0, 4.0):
            gs = fp.inverse_laplace(hat, eta, fp.InversionMethod.GAVER_STEHFEST)
            tb = fp.inverse_laplace(hat, eta, fp.InversionMethod.TALBOT_CONTOUR,
                                    talbot_radius_cap=7.0)
            marched = float(sol.samples.evaluate(eta))
            agreement[str(eta)] = {"gaver_stehfest": gs, "talbot": tb, "marched": marched}
        artifacts = _profile_artifacts(out, sol, betas, fit, agreement)
        if cfg.get("scan", True):
            scan = fp.scan_nu(0.05, 1.45, 29, grid)
            write_json(out / "nu_scan.json", scan)
            artifacts.append("nu_scan.json")
        write_manifest(out, "fixpoint", cfg, artifacts)
        print(f"nu_star={nu_star} tail_class={sol.tail_class.value}; artifacts in {out}")
        return EXIT_OK
    except (BracketError, DomainError, DivergenceError, UnstableInversionError,
            OverflowError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def cmd_simulate(args) -> int:
    try:
        cfg = _load_config(args.config, "simulate")
        cfg = _coerce(cfg, {"T": float, "t_end_frac": float, "n_samples": int, "grid_N": int})
        if args.t_end is not None:
            cfg["t_end_frac"] = args.t_end
        if args.grid_N is not None:
            cfg["grid_N"] = args.grid_N
        if not (0.0 < cfg["t_end_frac"] < 1.0):
            raise ValueError(f"t_end_frac must be in (0, 1), got {cfg['t_end_frac']}")
        T = cfg["T"]
        grid_y = make_grid(40.0 / math.sqrt(T), cfg["grid_N"])
        kernel = qsim.Kernel(cfg.get("kernel", "halfline-conv"))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.profile:
            seed_fn = read_even_fn(args.profile)
        elif args.nu is not None:
            seed_fn = fp.march_limit_ode(args.nu).samples
        else:
            raise ValueError("provide --profile PATH or --nu X as the seed")
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        state0 = qsim.init_state(seed_fn, T, grid_y, kernel)
        report = qsim.run_and_fit(state0, cfg["t_end_frac"], cfg["n_samples"],
                                  reference=seed_fn)
        rows = [
            (t, T - t, e, om, pe)
            for t, e, om, pe in zip(report.sample_times, report.energies,
                                    report.enstrophies,
                                    report.profile_errors or [math.nan] * len(report.sample_times))
        ]
        write_csv(out / "scaling.csv",
                  ["t", "T_minus_t", "energy", "enstrophy", "profile_err"], rows)
        summary = {
            "energy_slope": report.energy_slope,
            "enstrophy_slope": report.enstrophy_slope,
            "max_profile_err": report.max_profile_error(),
            "degenerate": report.degenerate,
            "failure_time": report.failure_time,
        }
        write_json(out / "scaling_summary.json", summary)
        write_manifest(out, "simulate", cfg, ["scaling.csv", "scaling_summary.json"])
        print(
            f"energy slope {report.energy_slope} enstrophy slope {report.enstrophy_slope}"
            + (" [degenerate]" if report.degenerate else "")
        )
        return EXIT_OK
    except OverflowError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def cmd_invariance(args) -> int:
    try:
        cfg = _load_config(args.config, "invariance")
        cfg = _coerce(cfg, {"a": float, "k": float, "K": float, "A": float, "alpha": float,
                            "delta0": float, "sigma": float, "nu_exp": float, "beta0": float,
                            "mu_factor": float, "n_samples": int})
        if args.beta:
            cfg["betas"] = args.beta
        if args.n_samples is not None:
            cfg["n_samples"] = args.n_samples
        betas = _parse_betas(cfg["betas"])
        mu0 = mu0_threshold(cfg["a"], cfg["k"], cfg["sigma"], cfg["beta0"])
        mu = cfg.get("mu")
        mu = cfg["mu_factor"] * mu0 if mu is None else float(mu)
        params = inv.BoundsParams(a=cfg["a"], k=cfg["k"], K=cfg["K"], A=cfg["A"],
                                  alpha=cfg["alpha"], delta0=cfg["delta0"], mu=mu,
                                  sigma=cfg["sigma"], nu_exp=cfg["nu_exp"])
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report = inv.invariance_experiment(params, betas, cfg["n_samples"], args.seed,
                                           beta0=cfg["beta0"])
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    failures = []
    for i, failure in enumerate(report.failures):
        name = f"counterexample_{i}.csv"
        write_even_fn(failure["member"], out / name)
        failures.append({"stream": failure["stream"], "sample": failure["sample"],
                         "beta": failure["beta"], "margin": failure["margin"],
                         "file": name})
    payload = {
        "params": {k: getattr(params, k) for k in
                   ("a", "k", "K", "A", "alpha", "delta0", "mu", "sigma", "nu_exp")},
        "betas": list(report.betas),
        "n_samples": report.n_samples,
        "seed": report.seed,
        "mu0": report.mu0,
        "pass_counts": {
            "envelope": [report.envelope_pass, report.envelope_total],
            "weighted": [report.weighted_pass, report.weighted_total],
        },
        "worst_margins": {
            "envelope": report.envelope_worst_margin,
            "weighted": report.weighted_worst_margin,
        },
        "holder_norm_ratio_max": max(report.holder_norm_ratios, default=math.nan),
        "failures": failures,
    }
    write_json(out / "invariance_report.json", payload)
    write_manifest(out, "invariance", {**cfg, "mu": mu, "seed": args.seed},
                   ["invariance_report.json"] + [f["file"] for f in failures])
    if not report.all_passed:
        print(f"counterexamples found: {len(failures)}; serialized in {out}", file=sys.stderr)
        return EXIT_COUNTEREXAMPLE
    print(
        f"invariance: envelope {report.envelope_pass}/{report.envelope_total}, "
        f"weighted {report.weighted_pass}/{report.weighted_total} passed"
    )
    return EXIT_OK


def cmd_specfun_selftest(args) -> int:
    import mpmath as mp

    checks = []

    def add(name, got, want, tol):
        ok = abs(got - want) <= tol * max(1.0, abs(want))
        checks.append((name, ok, got, want))

    add("erf(1)", erf(1.0), float(mp.erf(1)), 1e-12)
    add("gamma(0.5)", gamma_fn(0.5), math.sqrt(math.pi), 1e-12)
    add("gamma(5)", gamma_fn(5.0), 24.0, 1e-12)
    add("lower_gamma(1,2)", lower_incomplete_gamma(1.0, 2.0), 1.0 - math.exp(-2.0), 1e-10)
    add("M(1,1,1)=e", kummer_m(HypergeomArgs(1.0, 1.0, 1.0)), math.e, 1e-10)
    add("M(1,2,1)=e-1", kummer_m(HypergeomArgs(1.0, 2.0, 1.0)), math.e - 1.0, 1e-9)
    for a, z in ((0.75, 2.0), (0.75, 8.0), (1.25, 40.0)):
        add(f"U({a},1/2,{z})", tricomi_u(HypergeomArgs(a, 0.5, z)).value,
            float(mp.hyperu(a, 0.5, z)), 1e-7)
    add("mu0(2,0.5,-1.5,0.9)", mu0_threshold(2.0, 0.5, -1.5, 0.9),
        float((0.25 / 0.81) * (1 - 0.81) / (0.9**-0.5 - 1)
              * (mp.gamma(0.75) * mp.hyp1f1(0.75, 0.5, 1) - 2 * mp.gamma(1.25) * mp.hyp1f1(1.25, 1.5, 1))),
        1e-8)
    failed = [c for c in checks if not c[1]]
    for name, ok, got, want in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: got {got!r}, reference {want!r}")
    return EXIT_OK if not failed else EXIT_NUMERICAL


def cmd_report(args) -> int:
    out = Path(args.out)
    manifest = out / "manifest.json"
    if not manifest.exists():
        print(f"no manifest.json under {out}", file=sys.stderr)
        return EXIT_CONFIG
    data = json.loads(manifest.read_text())
    print(f"command:  {data.get('command')}")
    print(f"version:  {data.get('artifact_version')}")
    print(f"config:   {data.get('config_hash')}")
    for name in data.get("artifacts", []):
        path = out / name
        mark = "ok " if path.exists() else "MISSING"
        print(f"  [{mark}] {name}")
        if name.endswith(".json") and path.exists():
            payload = json.loads(path.read_text())
            for key in ("nu_star", "energy_slope", "enstrophy_slope", "pass_counts"):
                if isinstance(payload, dict) and key in payload:
                    print(f"      {key} = {payload[key]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qglab",
                                     description="scale-map fixed points and blow-up scaling")
    parser.add_argument("--config", default=None, help="INI configuration file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=7, help="random seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fix = sub.add_parser("fixpoint", help="marching/shooting pipeline with cross-validation")
    p_fix.add_argument("--grid-L", dest="grid_L", type=float, default=None)
    p_fix.add_argument("--grid-N", dest="grid_N", type=int, default=None)
    p_fix.add_argument("--beta", default=None, help="comma-separated beta list")
    p_fix.add_argument("--nu", type=float, default=None, help="skip the search; use this value")
    p_fix.add_argument("--gamma", type=float, default=2.0,
                       help="dissipation exponent (evaluation-only when != 2)")
    p_fix.add_argument("--verify-only", action="store_true",
                       help="only report residuals for the given --nu")
    p_fix.set_defaults(func=cmd_fixpoint)

    p_sim = sub.add_parser("simulate", help="mild-equation blow-up scaling run")
    p_sim.add_argument("--profile", default=None, help="seed profile CSV")
    p_sim.add_argument("--nu", type=float, default=None, help="march this initial value as seed")
    p_sim.add_argument("--t-end", dest="t_end", type=float, default=None)
    p_sim.add_argument("--grid-N", dest="grid_N", type=int, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_inv = sub.add_parser("invariance", help="randomized invariance experiment")
    p_inv.add_argument("--beta", default=None, help="comma-separated beta list")
    p_inv.add_argument("--n-samples", dest="n_samples", type=int, default=None)
    p_inv.set_defaults(func=cmd_invariance)

    p_self = sub.add_parser("specfun-selftest", help="special-function oracle checks")
    p_self.set_defaults(func=cmd_specfun_selftest)

    p_rep = sub.add_parser("report", help="summarize artifacts in an output directory")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
