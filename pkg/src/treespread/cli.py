"""Command-line front end.

Subcommands: iterate, analyze, orbit, basin, simulate.  Exit codes follow a
fixed protocol so CI scripts can assert results directly:

    0  success (including converged / period2 stops)
    1  invalid configuration
    2  iteration budget exhausted, or a simulate z-score above 4
    3  legitimate absence (no orbit of the requested period)

Every output embeds the fully resolved configuration, making runs
self-describing; identical config + seed gives byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis, dynamics, mc_sim
from .dynamics import (
    DiseaseProfile,
    DynamicsError,
    ScalarMapSpec,
    dominant_profile,
    full_stepper,
    iterate,
    make_profile,
    trajectory_to_csv,
    trajectory_to_json_obj,
    uniform_profile,
    variant_stepper,
)
from .mc_sim import SimConfig, SimulationError, simulate_root
from .offspring import OffspringError, parse_offspring

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BUDGET = 2
EXIT_ABSENT = 3


class ConfigError(ValueError):
    pass


def parse_profile(text: str, k: int | None) -> DiseaseProfile:
    text = text.strip()
    if text.startswith("uniform:"):
        kk = int(text.split(":", 1)[1])
        if k is not None and k != kk:
            raise ConfigError(f"--k {k} conflicts with profile uniform:{kk}")
        return uniform_profile(kk)
    if text.startswith("dominant:"):
        i = int(text.split(":", 1)[1])
        if k is None:
            raise ConfigError("profile dominant:I needs --k")
        return dominant_profile(k, i)
    masses = [float(v) for v in text.split(",")]
    if k is not None and k != len(masses) - 1:
        raise ConfigError(f"--k {k} conflicts with explicit profile of k={len(masses) - 1}")
    return make_profile(masses)


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _resolved_config(args, fields) -> dict:
    cfg = {"subcommand": args.command}
    for name in fields:
        cfg[name] = getattr(args, name, None)
    return cfg


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_out(obj: dict, out_path: str | None) -> None:
    _emit(json.dumps(obj, indent=2, sort_keys=True) + "\n", out_path)


def cmd_iterate(args) -> int:
    dist = parse_offspring(args.offspring)
    profile = parse_profile(args.profile, args.k)
    step = (
        full_stepper(dist)
        if args.alpha is None
        else variant_stepper(dist, args.alpha)
    )
    traj = iterate(step, profile, max_iters=args.max_iters, tol=args.tol)
    cfg = _resolved_config(args, ["offspring", "k", "profile", "alpha", "tol", "max_iters", "format"])
    cfg["k"] = profile.k
    if args.format == "csv":
        body = "# config: " + json.dumps(cfg, sort_keys=True) + "\n" + trajectory_to_csv(traj)
        _emit(body, args.out)
    else:
        obj = trajectory_to_json_obj(traj)
        obj["config"] = cfg
        _json_out(obj, args.out)
    return EXIT_OK if traj.stop_reason in ("converged", "period2") else EXIT_BUDGET


def cmd_analyze(args) -> int:
    dist = parse_offspring(args.offspring)
    if args.k is None:
        raise ConfigError("analyze needs --k")
    spec = ScalarMapSpec(dist, args.k)
    report = analysis.analysis_bundle(spec, i=args.i)
    report["config"] = _resolved_config(args, ["offspring", "k", "i"])
    _json_out(report, args.out)
    return EXIT_OK


def cmd_orbit(args) -> int:
    dist = parse_offspring(args.offspring)
    if args.k is None:
        raise ConfigError("orbit needs --k")
    spec = ScalarMapSpec(dist, args.k)
    orbit = analysis.find_orbit(spec, args.period)
    cfg = _resolved_config(args, ["offspring", "k", "period"])
    if orbit is None:
        _json_out({"orbit": None, "config": cfg}, args.out)
        return EXIT_ABSENT
    obj = orbit.to_json_obj()
    obj["config"] = cfg
    _json_out(obj, args.out)
    return EXIT_OK


def cmd_basin(args) -> int:
    dist = parse_offspring(args.offspring)
    if args.k is None:
        raise ConfigError("basin needs --k")
    spec = ScalarMapSpec(dist, args.k)
    orbit = analysis.find_orbit(spec, 2)
    if orbit is None:
        print("no period-2 orbit; nothing to classify", file=sys.stderr)
        return EXIT_ABSENT
    rng = np.random.default_rng(args.seed)
    starts = (rng.random(args.starts) * (1.0 / args.k)).tolist()
    report = analysis.basin_classify(spec, starts, max_iters=args.max_iters, orbit=orbit)
    cfg = _resolved_config(args, ["offspring", "k", "starts", "seed", "max_iters"])
    body = "# config: " + json.dumps(cfg, sort_keys=True) + "\n" + report.to_csv()
    _emit(body, args.out)
    summary = report.to_json_obj()
    summary["orbit"] = orbit.to_json_obj()
    summary["config"] = cfg
    print(json.dumps(summary, indent=2, sort_keys=True), file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    dist = parse_offspring(args.offspring)
    profile = parse_profile(args.profile, args.k)
    sim_cfg = SimConfig(
        dist=dist,
        profile=profile.masses,
        height=args.height,
        trials=args.trials,
        alpha=args.alpha,
        seed=args.seed,
        node_budget=args.node_budget,
    )
    result = simulate_root(sim_cfg)
    step = (
        full_stepper(dist) if args.alpha is None else variant_stepper(dist, args.alpha)
    )
    analytic = np.asarray(profile.masses)
    for _ in range(args.height):
        analytic = step(analytic)
    z_scores = [
        (result.masses[i] - analytic[i]) / result.stderr[i] if result.stderr[i] > 0 else 0.0
        for i in range(len(analytic))
    ]
    cfg = _resolved_config(
        args, ["offspring", "k", "profile", "height", "trials", "alpha", "seed", "format"]
    )
    cfg["k"] = profile.k
    if args.format == "csv":
        lines = ["# config: " + json.dumps(cfg, sort_keys=True), "coord,analytic,empirical,stderr,z"]
        for i in range(len(analytic)):
            name = f"p_{i + 1}" if i < profile.k else "sane"
            lines.append(
                f"{name},{_fmt(analytic[i])},{_fmt(result.masses[i])},"
                f"{_fmt(result.stderr[i])},{_fmt(z_scores[i])}"
            )
        _emit("\n".join(lines) + "\n", args.out)
    else:
        obj = {
            "analytic": [float(v) for v in analytic],
            "empirical": result.to_json_obj(),
            "z_scores": z_scores,
            "config": cfg,
        }
        _json_out(obj, args.out)
    return EXIT_BUDGET if any(abs(z) > 4.0 for z in z_scores) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treespread",
        description="Competing-disease dynamics on Galton-Watson and z-ary trees",
    )
    parser.add_argument("--config", help="JSON file of default option values")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, profile=False, sim=False):
        p.add_argument("--offspring", required=True, help='"zary:Z" or JSON {"masses": [[z,q],...]}')
        p.add_argument("--k", type=int, default=None, help="number of diseases")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        if profile:
            p.add_argument(
                "--profile",
                required=True,
                help='"uniform:K", "dominant:I", or comma-separated k+1 masses',
            )
            p.add_argument("--alpha", type=float, default=None, help="variant retention probability")
            p.add_argument("--format", choices=("csv", "json"), default="json")
        if sim:
            p.add_argument("--height", type=int, required=True)
            p.add_argument("--trials", type=int, required=True)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--node-budget", type=float, default=mc_sim.DEFAULT_NODE_BUDGET)

    p = sub.add_parser("iterate", help="iterate the exact root-distribution recursion")
    common(p, profile=True)
    p.add_argument("--tol", type=float, default=dynamics.DEFAULT_TOL)
    p.add_argument("--max-iters", type=int, default=dynamics.DEFAULT_MAX_ITERS)
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("analyze", help="fixed point, bounds, spectrum, orbit conditions")
    common(p)
    p.add_argument("--i", type=int, default=None, help="dominant-disease count")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("orbit", help="locate a period-2 or period-4 orbit")
    common(p)
    p.add_argument("--period", type=int, choices=(2, 4), default=2)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("basin", help="classify random starts by their limiting orbit")
    common(p)
    p.add_argument("--starts", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.set_defaults(func=cmd_basin)

    p = sub.add_parser("simulate", help="Monte Carlo vs analytic recursion comparison")
    common(p, profile=True, sim=True)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    # a --config file supplies defaults; explicit flags win
    if "--config" in argv:
        idx = argv.index("--config")
        with open(argv[idx + 1]) as fh:
            defaults = json.load(fh)
        argv = list(argv[:idx]) + list(argv[idx + 2:])
        extra = []
        for key, value in defaults.items():
            flag = "--" + key.replace("_", "-")
            if flag not in argv and value is not None:
                extra += [flag, str(value)]
        if argv and not argv[0].startswith("-"):
            argv = [argv[0]] + extra + argv[1:]
        else:
            argv = argv + extra
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, DynamicsError, OffspringError, SimulationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
