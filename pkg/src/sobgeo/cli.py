"""Command-line front end: ``sobgeo {exp,log,epdiff,spectrum,suite}``."""

import argparse
import logging
import os
import sys

import numpy as np

from . import epdiff, geodesic, geometry, grid, io, operator
from .config import load as load_config
from .errors import (
    BlowUpError,
    ConvergenceError,
    ImmersionError,
    SobgeoError,
    TrustRegionError,
    ValidationError,
)
from .suite import run_suite

EXIT_OK = 0
EXIT_SUITE_FAILED = 1
EXIT_VALIDATION = 2
EXIT_IMMERSION = 3
EXIT_NO_CONVERGENCE = 4
EXIT_IO = 5
EXIT_TRUST_REGION = 6
EXIT_BLOW_UP = 7

EPILOG = """\
exit codes:
  0  success
  1  suite: at least one invariant failed (report still written)
  2  validation error (bad config, flags or input file content)
  3  immersion lost mid-flight, or particle crossing in the diffeomorphism solver
  4  log map did not converge (best iterate written to velocity_best.json)
  5  I/O error (missing input, unwritable output)
  6  log map target outside the trust region
  7  Eulerian solver blow-up guard tripped

Config is a JSON object with RunConfig keys; flags override it. Threads come
from --threads, else $SOBGEO_THREADS, else 1.
"""

OVERRIDES = (
    ("n", int, "grid size (odd, >= 9)"),
    ("d", int, "ambient dimension"),
    ("p", float, "operator order"),
    ("family", str, "operator family: standard | scale_invariant"),
    ("dt", float, "time step"),
    ("t_end", float, "final time"),
    ("immersion_floor", float, "relative speed floor for the immersion check"),
    ("fd_eps", float, "finite-difference step"),
    ("shooting_tol", float, "log map residual tolerance"),
    ("energy_drift_warn", float, "relative energy drift that triggers a warning"),
    ("log_dt", float, "time step used inside the log map"),
    ("trust_radius", float, "log map trust radius (relative)"),
    ("record_every", int, "store every k-th step"),
    ("tail_cutoff", int, "Fourier tail cutoff (0 means n // 3)"),
    ("u_bound", float, "Eulerian blow-up bound on |u|"),
)


def _common(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    g = parser.add_argument_group("global options")
    g.add_argument("--config", metavar="PATH", default=default, help="JSON config file")
    g.add_argument("--out", metavar="DIR", default=default, help="output directory (default: .)")
    g.add_argument("--seed", type=int, default=default, help="random seed")
    g.add_argument("--threads", type=int, default=default, help="worker threads")
    o = parser.add_argument_group("config overrides")
    for name, kind, text in OVERRIDES:
        o.add_argument("--" + name.replace("_", "-"), dest=name, type=kind, default=default, help=text)
    o.add_argument("--spectral-filter", dest="spectral_filter", action="store_true", default=default, help="filter the top sixth of Eulerian modes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sobgeo",
        description="Geodesics of fractional Sobolev metrics on immersed loops and Diff(S^1).",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, text):
        p = sub.add_parser(name, help=text, description=text, epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
        _common(p, suppress=True)
        return p

    p = add("exp", "integrate the geodesic from a loop and an initial velocity")
    p.add_argument("--curve", required=True, metavar="PATH", help="loop JSON document")
    p.add_argument("--velocity", required=True, metavar="PATH", help="velocity JSON document")

    p = add("log", "recover the initial velocity joining two loops by shooting")
    p.add_argument("--curve-a", required=True, metavar="PATH")
    p.add_argument("--curve-b", required=True, metavar="PATH")

    p = add("epdiff", "run the Lagrangian and Eulerian Diff(S^1) solvers and compare them")
    p.add_argument("--u0", required=True, metavar="PATH", help="scalar field JSON document (d = 1)")

    p = add("spectrum", "eigenvalues of P on a loop (unit circle if --curve is omitted)")
    p.add_argument("--curve", metavar="PATH")

    p = add("suite", "run the invariant battery and write a pass/fail report")
    p.add_argument("--report", metavar="PATH", help="report path (default: OUT/suite_report.json)")
    return parser


def _resolve(args):
    threads = getattr(args, "threads", None)
    if threads is None and os.environ.get("SOBGEO_THREADS"):
        try:
            threads = int(os.environ["SOBGEO_THREADS"])
        except ValueError as exc:
            raise ValidationError(f"SOBGEO_THREADS must be an integer, got {os.environ['SOBGEO_THREADS']!r}") from exc
    overrides = {name: getattr(args, name, None) for name, _, _ in OVERRIDES}
    overrides["spectral_filter"] = getattr(args, "spectral_filter", None)
    overrides["seed"] = getattr(args, "seed", None)
    overrides["threads"] = threads
    return load_config(getattr(args, "config", None), overrides)


def _out(args, name):
    return os.path.join(getattr(args, "out", None) or ".", name)


def cmd_exp(cfg, args):
    cfg.validate("loop")
    f0 = io.read_field(args.curve, cfg.n, cfg.d)
    h0 = io.read_field(args.velocity, cfg.n, cfg.d)
    geometry.speed(f0, cfg.immersion_floor)
    conf = cfg.to_dict()
    status = "ok"
    code = EXIT_OK
    try:
        traj = geodesic.exp_map(f0, h0, cfg.spec, cfg.t_end, cfg.dt, cfg.immersion_floor, cfg.energy_drift_warn, cfg.record_every)
    except ImmersionError as exc:
        traj = getattr(exc, "trajectory", None)
        if traj is None:
            raise
        status = f"immersion lost at t = {exc.time:.6g}"
        code = EXIT_IMMERSION
        print(f"sobgeo: {exc}", file=sys.stderr)
        traj.energies = traj.energies[: len(traj.states)]
    tails = geodesic.regularity_diagnostic(traj, cfg.cutoff)
    pts = [s.f for s in traj.states]
    vel = [s.ft for s in traj.states]
    io.write_jsonl(_out(args, "trajectory.jsonl"), io.trajectory_records(traj.times, pts, vel, traj.energies, tails, conf))
    io.write_csv(_out(args, "energy.csv"), ["t", "energy", "tail"], zip(traj.times, traj.energies, tails), conf)
    io.write_json(
        _out(args, "summary.json"),
        {"status": status, "max_energy_drift": traj.max_energy_drift(), "warnings": traj.warnings, "steps_recorded": len(traj.states), "config": conf},
    )
    for w in traj.warnings:
        print(f"sobgeo: warning: {w}", file=sys.stderr)
    return code


def cmd_log(cfg, args):
    cfg.validate("loop")
    fa = io.read_field(args.curve_a, cfg.n, cfg.d)
    fb = io.read_field(args.curve_b, cfg.n, cfg.d)
    conf = cfg.to_dict()
    try:
        res = geodesic.shoot(fa, fb, cfg.spec, tol=cfg.shooting_tol, dt=cfg.log_dt, radius=cfg.trust_radius, threads=cfg.threads, floor=cfg.immersion_floor)
    except TrustRegionError as exc:
        io.write_json(_out(args, "log_report.json"), {"status": "trust_region", "message": str(exc), "config": conf})
        raise
    report = {
        "status": "converged" if res.converged else "not_converged",
        "residual": res.residual,
        "tolerance": cfg.shooting_tol,
        "iterations": res.iterations,
        "fourier_modes": res.modes,
        "config": conf,
    }
    if not res.converged:
        io.write_field(_out(args, "velocity_best.json"), res.velocity, conf)
        io.write_json(_out(args, "log_report.json"), report)
        raise ConvergenceError(f"residual {res.residual:.3e} above tolerance {cfg.shooting_tol:g}", best=res)
    io.write_field(_out(args, "velocity.json"), res.velocity, conf)
    io.write_json(_out(args, "log_report.json"), report)
    return EXIT_OK


def cmd_epdiff(cfg, args):
    cfg.validate("diffeo")
    u0 = io.read_scalar(args.u0, cfg.n)
    conf = cfg.to_dict()
    spec = cfg.spec
    try:
        lag = epdiff.lagrangian_geodesic(u0, spec, cfg.t_end, cfg.dt, floor=cfg.immersion_floor, record_every=cfg.record_every)
    except SobgeoError as exc:
        exc.args = (f"[lagrangian] {exc}",)
        raise
    try:
        eul = epdiff.eulerian_solve(u0, spec, cfg.t_end, cfg.dt, cfg.u_bound, cfg.spectral_filter, cfg.record_every)
    except SobgeoError as exc:
        exc.args = (f"[eulerian] {exc}",)
        raise
    records, rows = [], []
    for i, t in enumerate(lag.times):
        u_lag = epdiff.eulerian_velocity(lag.phi[i], lag.phi_t[i])
        u_eul = eul.states[i].u
        gap = float(np.max(np.abs(u_lag - u_eul)))
        rec = {
            "t": float(t),
            "u_eulerian": u_eul.tolist(),
            "u_lagrangian": u_lag.tolist(),
            "phi": lag.phi[i].tolist(),
            "energy_lagrangian": float(lag.energies[i]),
            "energy_eulerian": float(eul.energies[i]),
            "tail_energy": grid.fourier_tail_energy(u_eul, cfg.cutoff),
            "discrepancy": gap,
        }
        if i == 0:
            rec["config"] = conf
        records.append(rec)
        rows.append((t, lag.energies[i], eul.energies[i], rec["tail_energy"], gap))
    io.write_jsonl(_out(args, "epdiff.jsonl"), records)
    io.write_csv(_out(args, "epdiff_energy.csv"), ["t", "energy_lagrangian", "energy_eulerian", "tail", "discrepancy"], rows, conf)
    io.write_json(_out(args, "summary.json"), {"discrepancy": rows[-1][-1], "config": conf})
    print(f"discrepancy {rows[-1][-1]:.3e}")
    return EXIT_OK


def cmd_spectrum(cfg, args):
    cfg.validate("loop")
    conf = cfg.to_dict()
    if args.curve:
        f = io.read_field(args.curve, cfg.n, cfg.d)
        reference = None
    else:
        f = geometry.circle(cfg.n)
        if cfg.d > 2:
            f = np.column_stack([f, np.zeros((cfg.n, cfg.d - 2))])
        reference = np.sort(operator.circle_multiplier(cfg.n, 1.0, cfg.spec))
    lam = operator.assemble(f, cfg.spec, cfg.immersion_floor).eigenvalues
    header = ["index", "eigenvalue"] + (["analytic"] if reference is not None else [])
    cols = [np.arange(cfg.n), lam] + ([reference] if reference is not None else [])
    io.write_csv(_out(args, "spectrum.csv"), header, zip(*cols), conf)
    out = {"eigenvalues": lam.tolist(), "config": conf}
    if reference is not None:
        out["max_relative_error"] = float(np.max(np.abs(lam - reference) / reference))
    io.write_json(_out(args, "spectrum.json"), out)
    return EXIT_OK


def cmd_suite(cfg, args):
    cfg.validate("loop")
    report = run_suite(cfg)
    path = args.report or _out(args, "suite_report.json")
    io.write_json(path, report)
    for r in report["results"]:
        print(f"{r['status'].upper():5s} {r['module']:20s} {r['name']}")
    if report["flagged_skips"]:
        print(f"flagged: {len(report['flagged_skips'])} checks skipped on preconditions")
    return EXIT_SUITE_FAILED if report["failed"] else EXIT_OK


COMMANDS = {"exp": cmd_exp, "log": cmd_log, "epdiff": cmd_epdiff, "spectrum": cmd_spectrum, "suite": cmd_suite}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.ERROR, format="sobgeo: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, which is already the validation code
        return int(exc.code or 0)
    try:
        cfg = _resolve(args)
        return COMMANDS[args.command](cfg, args)
    except ValidationError as exc:
        print(f"sobgeo: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ImmersionError as exc:
        print(f"sobgeo: immersion lost: {exc}", file=sys.stderr)
        return EXIT_IMMERSION
    except TrustRegionError as exc:
        print(f"sobgeo: trust region: {exc}", file=sys.stderr)
        return EXIT_TRUST_REGION
    except ConvergenceError as exc:
        print(f"sobgeo: no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except BlowUpError as exc:
        print(f"sobgeo: blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOW_UP
    except (io.FileError, OSError) as exc:
        print(f"sobgeo: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
