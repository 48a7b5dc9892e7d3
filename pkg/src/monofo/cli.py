"""Command-line entry point: ``monofo {simulate,certify,sweep,steady,scenario-list}``.

Exit codes: 0 success, 1 failure or not certified, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .plant import sensitivity, sensitivity_provenance, steady_state, steady_state_provenance
from .scenarios import (SCENARIOS, ScenarioConfig, certify_scenario, default_output_dir,
                        get_scenario, run_scenario)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", choices=sorted(SCENARIOS), help="builtin scenario")
    src.add_argument("--config", type=Path, help="JSON scenario config file")
    p.add_argument("--horizon", type=float, help="override the simulation horizon")
    p.add_argument("--out", type=Path, help="output directory (default: $MONOFO_OUTPUT_DIR or ./ofo_output)")
    p.add_argument("--seed", type=int, default=0, help="seed for sampling-based checks")
    p.add_argument("--beta-u", type=float, help="override the input cost weight")
    p.add_argument("--tol", type=float, help="integrator local error tolerance")
    p.add_argument("--max-step", type=float, help="integrator maximum step")
    p.add_argument("--output-dt", type=float, help="trajectory sampling interval")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monofo", description="Online feedback optimization for monotone plants.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one closed-loop simulation")
    _add_common(sim)
    sim.add_argument("--alpha", type=float, required=True, help="controller gain")
    sim.add_argument("--plot", action="store_true", help="write a PNG of u(t) and y(t)")

    cert = sub.add_parser("certify", help="run the certification pipeline")
    _add_common(cert)

    sweep = sub.add_parser("sweep", help="simulate over a list of gains")
    _add_common(sweep)
    sweep.add_argument("--alphas", type=_floats, help="comma-separated gains (default: scenario list)")
    sweep.add_argument("--plot", action="store_true")
    sweep.add_argument("--workers", type=int, default=1, help="parallel processes for the sweep")
    sweep.add_argument("--no-certify", action="store_true", help="skip certification")

    steady = sub.add_parser("steady", help="steady-state maps at a constant input")
    _add_common(steady)
    steady.add_argument("--u", type=_floats, required=True, help="input value(s)")
    steady.add_argument("--w", type=_floats, help="disturbance value(s)")

    sub.add_parser("scenario-list", help="list builtin scenarios")
    return parser


def load_config(args) -> ScenarioConfig:
    try:
        cfg = ScenarioConfig.load(args.config) if args.config else get_scenario(args.scenario or "lti")
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot load scenario: {exc}") from exc
    changes = {}
    if args.horizon is not None:
        if not args.horizon > 0:
            raise UsageError("--horizon must be positive")
        changes["horizon"] = args.horizon
    if args.beta_u is not None:
        changes["cost"] = {**cfg.cost, "beta_u": args.beta_u}
    integ = dict(cfg.integrator)
    for flag, key in (("tol", "error_tolerance"), ("max_step", "max_step"), ("output_dt", "output_dt")):
        if getattr(args, flag) is not None:
            integ[key] = getattr(args, flag)
    changes["integrator"] = integ
    changes["certification"] = {**cfg.certification, "seed": args.seed}
    cfg = cfg.replace(**changes)
    try:
        cfg.validate()
        cfg.step_config()
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    return cfg


def _out_dir(args) -> Path:
    return args.out if args.out is not None else Path(default_output_dir())


def _vec(v) -> str:
    return np.array2string(np.asarray(v), precision=6, separator=", ")


def cmd_simulate(args) -> int:
    if not args.alpha > 0:
        raise UsageError(f"--alpha must be positive, got {args.alpha}")
    cfg = load_config(args)
    result = run_scenario(cfg, alphas=[args.alpha], run_certification=False,
                          output_dir=_out_dir(args), plot=args.plot)
    run = result.runs[float(args.alpha)]
    if not run.ok:
        print(f"simulation failed: {run.error}", file=sys.stderr)
        return EXIT_FAIL
    print(f"scenario {cfg.name}, alpha={args.alpha:g}")
    for k, seg in enumerate(result.segments):
        print(f"segment {k} [{seg.start:g}, {seg.end:g}]: u={_vec(run.segment_final_u[k])} "
              f"y={_vec(run.segment_final_y[k])} u*={_vec(seg.u_star)} |u-u*|={run.segment_errors[k]:.3e}")
    print(f"wrote {_out_dir(args)}")
    return EXIT_OK


def cmd_certify(args) -> int:
    cfg = load_config(args)
    reports = certify_scenario(cfg)
    for r in reports:
        print(r.summary())
        print()
    ok = all(r.certified for r in reports)
    print("certified" if ok else "NOT certified")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sweep(args) -> int:
    cfg = load_config(args)
    alphas = cfg.alphas if args.alphas is None else args.alphas
    if not alphas:
        raise UsageError("--alphas must list at least one gain")
    if any(not a > 0 for a in alphas):
        raise UsageError("all gains must be positive")
    result = run_scenario(cfg, alphas=alphas, run_certification=not args.no_certify,
                          output_dir=_out_dir(args), plot=args.plot, workers=args.workers)
    print(result.summary())
    finals = [r.segment_final_y[-1] for r in result.runs.values() if r.ok]
    if len(finals) > 1:
        spread = max(float(np.max(np.abs(a - b))) for a in finals for b in finals)
        print(f"largest pairwise final-output difference: {spread:.3e}")
    print(f"wrote {_out_dir(args)}")
    return EXIT_OK if all(r.ok for r in result.runs.values()) else EXIT_FAIL


def cmd_steady(args) -> int:
    cfg = load_config(args)
    box = cfg.build_box()
    u = np.asarray(args.u, dtype=float)
    if u.size != box.dimension:
        raise UsageError(f"--u needs {box.dimension} value(s)")
    if not box.contains(u):
        raise UsageError(f"u={_vec(u)} lies outside the input box [{_vec(box.lower)}, {_vec(box.upper)}]")
    plant = cfg.build_plant(args.w) if args.w is not None else cfg.build_plant()
    if args.w is not None and len(args.w) != plant.w.size:
        raise UsageError(f"--w needs {plant.w.size} value(s)")
    x = steady_state(plant, u)
    S = sensitivity(plant, u, box)
    print(f"k_x(u) = {_vec(x)}  [{steady_state_provenance(plant)}]")
    print(f"k_y(u) = {_vec(plant.g(x))}  [{steady_state_provenance(plant)}]")
    print(f"grad k_y(u) = {_vec(S)}  [{sensitivity_provenance(plant)}]")
    return EXIT_OK


def cmd_scenario_list(args) -> int:
    for name in sorted(SCENARIOS):
        cfg = SCENARIOS[name]()
        doc = (SCENARIOS[name].__doc__ or "").strip().splitlines()[0]
        print(f"{name:8s} horizon={cfg.horizon:g} alphas={cfg.alphas}  {doc}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "certify": cmd_certify, "sweep": cmd_sweep,
            "steady": cmd_steady, "scenario-list": cmd_scenario_list}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"monofo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
