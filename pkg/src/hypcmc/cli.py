"""Command line entry point: ``hypcmc solve|verify|oracle|export-mesh --config <path> [--out <dir>]``."""
import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .errors import BarrierViolation, ConfigError, EllipticityLoss, NonConvergence, ShootingFailure
from .exhaustion import exhaustion_solve, gradient_monitor
from .io import export_mesh, parse_config, write_report_csv, write_summary
from .oracles import CapSolution, equivariant_ode_solve
from .submersion import ball_alpha
from .verification import AcceptanceSuite

OUTPUT_ENV = "HYPCMC_OUTPUT_DIR"
COMMANDS = ("solve", "verify", "oracle", "export-mesh")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2

logger = logging.getLogger("hypcmc")


def output_dir(config=None, flag=None):
    """--out wins over the environment variable, which wins over output.dir."""
    if flag:
        return Path(flag)
    if os.environ.get(OUTPUT_ENV):
        return Path(os.environ[OUTPUT_ENV])
    return Path(config.output_dir if config is not None else "out")


def _step_dict(s):
    return {
        "k": s.k,
        "alpha_max": s.alpha_k,
        "rings": s.n_rings,
        "newton_iters": s.report.newton_iterations,
        "residual_inf": s.report.final_residual,
        "min_ellipticity": s.report.min_ellipticity,
        "continuation_path": s.report.continuation_path,
        "inf_u": s.inf_u,
        "sup_u": s.sup_u,
        "sup_grad_B1": s.sup_grad_B1,
        "cauchy_delta_B2": s.cauchy_delta_B2,
        "oracle_mc_max_err": s.oracle_mc_max_err,
        "boundary_deviation": s.boundary_deviation,
        "warm_start": s.started_warm,
    }


def _solve(config, out, write_table=True):
    u, rep = exhaustion_solve(
        config.trace(), config.H, config.theta, config.n_alpha, config.n_beta, config.exhaustion_config()
    )
    slack = 10 * config.tol
    grad = gradient_monitor(rep) if len(rep.steps) >= 3 else None
    verdicts = {
        "solves_converged": rep.solves_converged,
        "cauchy_converged": rep.cauchy_converged,
        "within_barrier": rep.within_barrier(slack),
        "gradient_bounded": grad.bounded if grad is not None else None,
    }
    if write_table:
        write_report_csv(rep, out / "report.csv")
    export_mesh(u, out / "surface.obj")
    summary = {
        "command": "solve" if write_table else "export-mesh",
        "config": config.as_dict(),
        "verdicts": verdicts,
        "barrier": {"lower": rep.barrier[0], "upper": rep.barrier[1]},
        "extrema": {
            "inf_u": min(s.inf_u for s in rep.steps),
            "sup_u": max(s.sup_u for s in rep.steps),
            "max_residual_inf": max(s.report.final_residual for s in rep.steps),
            "max_sup_grad_B1": max(s.sup_grad_B1 for s in rep.steps),
            "max_oracle_mc_err": max(s.oracle_mc_max_err for s in rep.steps),
            "last_cauchy_delta_B2": rep.steps[-1].cauchy_delta_B2,
        },
        "steps": [_step_dict(s) for s in rep.steps],
    }
    write_summary(summary, out / "summary.json")
    ok = verdicts["solves_converged"] and verdicts["within_barrier"] and verdicts["gradient_bounded"] is not False
    if not verdicts["cauchy_converged"]:
        logger.warning("Cauchy delta on B_2 is %.3e > %.1e at k = %d", rep.steps[-1].cauchy_delta_B2, config.cauchy_tol, config.k_max)
    return EXIT_OK if ok else EXIT_FAILED


def _verify(config, out):
    suite = AcceptanceSuite(config.n_alpha, config.n_beta)
    results = suite.results()
    for r in results:
        print(r.line())
    record = {
        "command": "verify",
        "config": config.as_dict(),
        "all_passed": all(r.passed for r in results),
        "criteria": {str(r.number): {"title": r.title, "passed": r.passed, "details": r.details} for r in results},
    }
    write_summary(record, out / "verify.json")
    return EXIT_OK if record["all_passed"] else EXIT_FAILED


def _oracle(config, out):
    c = config.trace().mean
    alpha_max = ball_alpha(config.k_max)
    prof = equivariant_ode_solve(config.theta, config.H, c, alpha_max)
    cap = CapSolution.through_ring(config.H, alpha_max, c)
    alpha = np.linspace(0.0, alpha_max, config.n_alpha)
    u_ode, u_cap = prof(alpha), cap(alpha)
    path = out / "oracle.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("alpha,u_ode,u_cap,difference\n")
        for row in zip(alpha, u_ode, u_cap, u_ode - u_cap):
            fh.write(",".join(f"{x:.12e}" for x in row) + "\n")
    diff = float(np.max(np.abs(u_ode - u_cap)))
    write_summary(
        {
            "command": "oracle",
            "config": config.as_dict(),
            "boundary_value": c,
            "alpha_max": alpha_max,
            "pole_value": prof.pole_value,
            "cap_rho0": cap.rho0,
            "max_ode_cap_difference": diff,
        },
        out / "summary.json",
    )
    return EXIT_OK


def _error_record(out, exc, command):
    rec = {"command": command, "error": type(exc).__name__, "message": str(exc)}
    for attr in ("H", "k", "key", "line"):
        if getattr(exc, attr, None) is not None:
            rec[attr] = getattr(exc, attr)
    try:
        write_summary(rec, Path(out) / "error.json")
    except OSError:
        pass
    print(f"error: {exc}", file=sys.stderr)


def run(cmd, config, out=None):
    """Execute a subcommand for a parsed config; returns the exit status."""
    out = output_dir(config, out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if cmd == "solve":
            return _solve(config, out)
        if cmd == "export-mesh":
            return _solve(config, out, write_table=False)
        if cmd == "verify":
            return _verify(config, out)
        if cmd == "oracle":
            return _oracle(config, out)
        raise ValueError(f"unknown command {cmd!r}")
    except (NonConvergence, EllipticityLoss, BarrierViolation, ShootingFailure) as exc:
        _error_record(out, exc, cmd)
        return EXIT_FAILED


def main(argv=None):
    parser = argparse.ArgumentParser(prog="hypcmc", description="CMC Killing graphs in hyperbolic 3-space")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="flat key = value configuration file")
    parser.add_argument("--out", default=None, help=f"output directory (overrides ${OUTPUT_ENV} and output.dir)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = parse_config(args.config)
    except (ConfigError, OSError) as exc:
        _error_record(output_dir(None, args.out), exc, args.command)
        return EXIT_CONFIG
    return run(args.command, config, args.out)


if __name__ == "__main__":
    sys.exit(main())
