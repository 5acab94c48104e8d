"""Command-line front end: ``fluidem {vortex,verify,bjerknes,chsh}``.

Every run writes its artifacts plus ``manifest.json`` (resolved configuration
and SHA-256 of each artifact) into the output directory, which defaults to
``$FLUIDEM_OUT`` or ``./fluidem-out``.  Exit codes: 0 all checks pass,
1 a check or numerical step failed, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import bjerknes as bj
from . import chsh
from . import em_analogue as em
from . import field_calculus as fc
from . import suites
from .analytic_fields import FluidParams, VortexSpec, vortex_modes

ENV_OUT = "FLUIDEM_OUT"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Output helpers


class Outputs:
    """Collects artifacts written during one run and emits the manifest."""

    def __init__(self, directory: Path):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files = []

    def path(self, name) -> Path:
        self.files.append(name)
        return self.dir / name

    def json(self, name, obj):
        self.path(name).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def csv(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fc.fmt(v) if isinstance(v, float) else v for v in row])

    def manifest(self, config: dict):
        sums = {name: hashlib.sha256((self.dir / name).read_bytes()).hexdigest()
                for name in sorted(set(self.files))}
        body = {"version": __version__, "config": config, "artifacts": sums}
        (self.dir / "manifest.json").write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def _parse_tol(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--tol expects KEY=VALUE, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise UsageError(f"--tol value for {key!r} is not a number: {val!r}") from None
    try:
        return suites.resolve_tolerances(out)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _config(args, **extra) -> dict:
    # the output directory and worker count do not affect results
    skip = {"func", "out", "workers", "tol"}
    cfg = {k: v for k, v in vars(args).items() if k not in skip}
    cfg.update(extra)
    return cfg


# ---------------------------------------------------------------------------
# Subcommands


def cmd_vortex(args, out: Outputs, tol: dict) -> int:
    params = FluidParams(args.c, args.rho0)
    try:
        spec = VortexSpec(args.n, args.k_r, args.k_z, args.amplitude)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    if not args.loop_r > 0:
        raise UsageError("--loop-r must be positive")
    half = args.loop_r + 0.5
    dz = 3 * args.h
    grid = fc.GridSpec.box((-half, -half, -dz), (half, half, dz), args.h)
    snap = em.vortex_snapshot(spec, params, grid, args.loop_r, args.t, samples=args.samples)
    rho = fc.sample(vortex_modes(spec, params).value, grid, args.t)
    fc.write_binary(rho, out.path("vortex_density.fld"))
    fc.write_binary(snap.B, out.path("vortex_B.fld"))
    fc.write_csv(rho, out.path("vortex_density_z0.csv"), z_index=grid.dims[2] // 2)
    summary = snap.summary()
    summary["div_B_rel"] = summary["div_B_max"] / summary["div_B_scale"] if summary["div_B_scale"] else 0.0
    summary["spec"] = {"n": spec.n, "k_r": spec.k_r, "k_z": spec.k_z, "amplitude": spec.amplitude}
    wn = summary["winding_over_2pi"]
    checks = [
        {"name": "winding integer", "value": abs(wn - round(wn)), "bound": tol["winding_analytic"]},
        {"name": "gauss", "value": summary["div_B_rel"], "bound": tol["gauss_rel"]},
    ]
    for c in checks:
        c["passed"] = c["value"] <= c["bound"]
    summary["checks"] = checks
    out.json("vortex_summary.json", summary)
    out.manifest(_config(args, tolerances=tol))
    print(f"winding = {summary['winding']:.6f} ({wn:.9f} x 2 pi), circulation = {summary['flux']:.6g}, "
          f"div B rel = {summary['div_B_rel']:.3g}")
    return _report_checks(checks)


def _report_checks(checks) -> int:
    failed = [c for c in checks if not c["passed"]]
    for c in failed:
        print(f"FAIL {c['name']}: {c['value']:.3e} > {c['bound']:.3e}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_verify(args, out: Outputs, tol: dict) -> int:
    params = FluidParams(args.c, args.rho0)
    names = list(suites.SUITES) if args.suite == "all" else [args.suite]
    speeds = tuple(args.v) if args.v else suites.DEFAULT_SPEEDS
    if any(not 0 <= v < 1 for v in speeds):
        raise UsageError("--v values must lie in [0, 1) (units of c)")
    results = suites.run_suites(names, params, tol, speeds, args.seed)
    report = {name: {"passed": r["passed"], "checks": r["checks"]} for name, r in results.items()}
    report_all = all(r["passed"] for r in results.values())
    out.json("verify_report.json", {"passed": report_all, "suites": report})
    out.manifest(_config(args, suites=names, tolerances=tol))
    checks = []
    for name, r in results.items():
        print(f"{name:9s} {'PASS' if r['passed'] else 'FAIL'} ({len(r['checks'])} checks, "
              f"{r['seconds']:.1f} s)")
        checks += r["checks"]
    return _report_checks(checks)


def cmd_bjerknes(args, out: Outputs, tol: dict) -> int:
    params = FluidParams(args.c, args.rho0)
    if args.points < 16:
        raise UsageError(f"--points must be >= 16 for a power-law fit, got {args.points}")
    if not 0 < args.d_min < args.d_max:
        raise UsageError("need 0 < --d-min < --d-max")
    try:
        pair = bj.PulsatorPair(args.amplitude, args.omega, args.V0, args.dV, args.mode, args.psi)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(str(exc)) from None
    lam = pair.wavelength(params)
    d = np.geomspace(args.d_min * lam, args.d_max * lam, args.points)
    if math.log10(args.d_max / args.d_min) < 1.5 - 1e-12:
        raise UsageError("sweep window must span at least 1.5 decades")
    forces = bj.sweep_forces(pair, d, params, args.steps)
    closed = [bj.mean_force_closed_form(pair.at(x), params) for x in d]
    out.csv("bjerknes_sweep.csv", ["d", "d_over_lambda", "mean_force", "abs_mean_force", "closed_form"],
            [(float(x), float(x / lam), float(f), abs(float(f)), float(cf))
             for x, f, cf in zip(d, forces, closed)])
    fit = {"mode": args.mode, "psi": args.psi, "wavelength": lam,
           "window": [float(d[0]), float(d[-1])], "points": args.points,
           "force_at_unit_distance": bj.mean_force(pair.at(1.0), params, args.steps)}
    code = EXIT_OK
    try:
        fit["exponent"], fit["residual"] = bj.fit_power_law(np.column_stack([d, forces]))
    except bj.MixedSignError as exc:
        fit.update(exponent=None, residual=None, error=str(exc), sign_changes=exc.sign_changes)
        print(f"fit failed: {exc}", file=sys.stderr)
        code = EXIT_FAIL
    out.json("bjerknes_fit.json", fit)
    out.manifest(_config(args))
    if code == EXIT_OK:
        print(f"exponent = {fit['exponent']:.6f}, residual = {fit['residual']:.3g}, "
              f"F(d=1) = {fit['force_at_unit_distance']:.12g}")
    return code


def _parse_angles(text):
    if text == "canonical":
        return chsh.CANONICAL_ANGLES
    parts = text.split(",")
    if len(parts) != 4:
        raise UsageError("--angles expects 'canonical' or four comma-separated radians")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"bad --angles value {text!r}") from None


def cmd_chsh(args, out: Outputs, tol: dict) -> int:
    if args.n_trials < 1:
        raise UsageError("--n-trials must be >= 1")
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must fit in 64 bits")
    if not (args.curve or args.angles or args.phi is not None):
        raise UsageError("choose at least one of --curve, --angles, --phi")
    printed = []
    if args.phi is not None:
        tally = chsh.run_experiment(chsh.ChshConfig(0.0, args.phi, args.n_trials, args.seed),
                                    args.workers)
        body = {"phi": args.phi, "analytic": chsh.correlation_analytic(args.phi), **tally.as_dict()}
        out.json("chsh_tally.json", body)
        printed.append(f"E({args.phi:g}) = {tally.correlation:.6f} +- {tally.stderr:.2g}")
    if args.curve:
        rows = chsh.correlation_curve(args.points, args.n_trials, args.seed, args.workers)
        out.csv("chsh_curve.csv", ["phi", "E_hat", "stderr", "analytic", "n_pp", "n_pm", "n_mp", "n_mm"],
                [(phi, e, s, a, t.n_pp, t.n_pm, t.n_mp, t.n_mm) for phi, e, s, a, t in rows])
        worst = max(abs(e - a) / s if s > 0 else (0.0 if e == a else math.inf)
                    for _, e, s, a, _ in rows)
        printed.append(f"curve: {len(rows)} points, worst |E - cos 2phi| = {worst:.2f} sigma")
    if args.angles:
        angles = _parse_angles(args.angles)
        S, details = chsh.chsh_statistic(angles, args.n_trials, args.seed, args.workers)
        S_an, _ = chsh.chsh_statistic(angles)
        out.json("chsh_summary.json", {"angles": list(angles), "S": S, "S_analytic": S_an,
                                       "pairs": details})
        printed.append(f"S = {S:.6f} (analytic {S_an:.6f})")
    out.manifest(_config(args, rng=chsh.RNG_ALGORITHM))
    print("\n".join(printed))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default: ${ENV_OUT} or ./fluidem-out)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", action="append", metavar="KEY=VALUE",
                        help="override a tolerance; repeatable")
    common.add_argument("--workers", type=int, default=1, help="threads for Monte Carlo trials")
    common.add_argument("--c", type=float, default=1.0, help="sound speed")
    common.add_argument("--rho0", type=float, default=1.0, help="mean density")

    p = argparse.ArgumentParser(prog="fluidem", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("vortex", parents=[common], help="vortex field snapshot, winding and flux")
    v.add_argument("--n", type=int, required=True, help="winding number")
    v.add_argument("--k-r", type=float, default=1.0)
    v.add_argument("--k-z", type=float, default=0.0)
    v.add_argument("--amplitude", type=float, default=1.0)
    v.add_argument("--loop-r", type=float, default=2.0)
    v.add_argument("--samples", type=int, default=64, help="loop nodes")
    v.add_argument("--h", type=float, default=0.05, help="grid spacing")
    v.add_argument("--t", type=float, default=0.0, help="snapshot time")
    v.set_defaults(func=cmd_vortex)

    w = sub.add_parser("verify", parents=[common], help="run verification suites")
    w.add_argument("--suite", choices=("all",) + suites.SUITES, default="all")
    w.add_argument("--v", type=float, action="append",
                   help="boost speed in units of c (repeatable; default 0.2, 0.5, 0.8)")
    w.set_defaults(func=cmd_verify)

    b = sub.add_parser("bjerknes", parents=[common], help="mean force versus distance sweep")
    b.add_argument("--mode", choices=("aligned", "offset"), default="aligned")
    b.add_argument("--psi", type=float, default=0.0)
    b.add_argument("--d-min", type=float, default=0.1, help="in wavelengths")
    b.add_argument("--d-max", type=float, default=10.0, help="in wavelengths")
    b.add_argument("--points", type=int, default=32)
    b.add_argument("--steps", type=int, default=512, help="time samples per period")
    b.add_argument("--amplitude", type=float, default=1.0, help="source pressure amplitude")
    b.add_argument("--omega", type=float, default=1.0)
    b.add_argument("--V0", type=float, default=1.0)
    b.add_argument("--dV", type=float, default=1.0)
    b.set_defaults(func=cmd_bjerknes)

    c = sub.add_parser("chsh", parents=[common], help="line-of-force CHSH Monte Carlo")
    c.add_argument("--curve", action="store_true", help="correlation curve over [0, pi]")
    c.add_argument("--points", type=int, default=19, help="curve points")
    c.add_argument("--angles", help="'canonical' or a,a',b,b' in radians")
    c.add_argument("--phi", type=float, help="single relative angle")
    c.add_argument("--n-trials", type=int, default=100_000)
    c.set_defaults(func=cmd_chsh)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on parse errors
    out_dir = args.out or Path(os.environ.get(ENV_OUT) or "fluidem-out")
    try:
        tol = _parse_tol(args.tol)
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        try:
            FluidParams(args.c, args.rho0)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return args.func(args, Outputs(out_dir), tol)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fluidem {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"fluidem {args.command}: numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
