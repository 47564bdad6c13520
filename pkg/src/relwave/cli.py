"""Command-line front end.

Subcommands map one-to-one onto the library layers::

    transverse      wavenumbers and energies of the cross-section modes
    effective       bound states of the effective 1-d operator
    strip           squared-operator spectrum at one half-width
    verify          full thin-width verification sweep (PASS/FAIL)
    validate-curve  admissibility checks for a curvature profile

Runs are configured by flags or by a flat ``key = value`` config file
with one section per concern; see configs/ for annotated samples.  Exit
codes: 0 ok, 1 runtime error, 2 usage, 3 verification failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import asymptotics, effective, geometry, strip, transverse
from .eigensolve import lowest_eigenpairs

__all__ = ["main", "parse_profile_spec", "load_config"]

_USAGE_ERROR = 2
_RUNTIME_ERROR = 1
_VERIFY_FAIL = 3


def parse_profile_spec(spec: str) -> geometry.CurveProfile:
    """Parse 'zero', 'gaussian:a[,sigma]', 'compact:a,w' or 'file:path'."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "zero":
        return geometry.zero_curvature()
    if kind in ("gaussian", "gaussian_bump"):
        parts = [float(x) for x in rest.split(",") if x]
        if not parts:
            raise ValueError("gaussian profile needs an amplitude: gaussian:a")
        return geometry.gaussian_bump(*parts[:2])
    if kind in ("compact", "compact_bump"):
        parts = [float(x) for x in rest.split(",") if x]
        if len(parts) != 2:
            raise ValueError("compact profile needs amplitude,width")
        return geometry.compact_bump(*parts)
    if kind == "file":
        return geometry.read_profile_file(rest)
    raise ValueError(f"unknown profile spec {spec!r}")


def _profile_from_config(cfg: configparser.ConfigParser) -> geometry.CurveProfile:
    sec = cfg["profile"]
    kind = sec.get("kind", "zero").lower()
    if kind == "zero":
        return geometry.zero_curvature()
    if kind in ("gaussian", "gaussian_bump"):
        return geometry.gaussian_bump(sec.getfloat("amplitude"),
                                      sec.getfloat("sigma", 1.0))
    if kind in ("compact", "compact_bump"):
        return geometry.compact_bump(sec.getfloat("amplitude"),
                                     sec.getfloat("width"))
    if kind == "file":
        return geometry.read_profile_file(sec.get("path"))
    raise ValueError(f"unknown profile kind {kind!r} in config")


def load_config(path) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    read = cfg.read(path)
    if not read:
        raise OSError(f"config file {path} unreadable")
    return cfg


def _floats(text: str) -> list:
    return [float(x) for x in text.replace(",", " ").split()]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_transverse(args) -> int:
    if args.m < 0 or args.p_max < 1:
        print("transverse: require m >= 0 and p-max >= 1", file=sys.stderr)
        return _USAGE_ERROR
    rows = []
    for p in range(1, args.p_max + 1):
        k = transverse.transverse_root(p, args.m)
        rows.append({"p": p, "k": k, "E": math.hypot(args.m, k)})
    print(f"{'p':>3} {'k_p':>18} {'E_p':>18}")
    for row in rows:
        print(f"{row['p']:>3} {row['k']:>18.12f} {row['E']:>18.12f}")
    if args.samples:
        mode = transverse.TransverseMode.compute(1, args.m, +1)
        ts = np.linspace(-1, 1, args.samples)
        vals = mode.eval(ts)
        print("# eigenfunction samples, p=1, + branch: t u1 u2")
        for t, v in zip(ts, vals):
            print(f"{t:+.4f} {v[0].real:+.10f} {v[1].real:+.10f}")
    if args.out:
        _write_rows(rows, ["p", "k", "E"], args.out, args.format)
    return 0


def cmd_effective(args) -> int:
    profile = parse_profile_spec(args.profile)
    grid = effective.Grid1D(half_length=args.half_length, n=args.nodes)
    form = effective.assemble_qe(profile, grid)
    spec = effective.effective_spectrum(form, n_ev=args.n_ev, seed=args.seed)
    print(f"profile: {profile.name}")
    print(f"J = {spec.J}")
    for j, mu in enumerate(spec.mu, start=1):
        print(f"mu_{j} = {mu:+.12e}")
    if args.oracle == "shooting":
        if spec.J < 1:
            print("shooting oracle: no bound state to match")
        else:
            mu_shoot = effective.shooting_mu1(profile,
                                              half_length=args.half_length)
            print(f"shooting mu_1 = {mu_shoot:+.12e}")
            print(f"|difference|  = {abs(mu_shoot - spec.mu[0]):.3e}")
    if args.out:
        if args.format == "csv":
            spec.write_csv(args.out)
        else:
            spec.write_json(args.out)
    return 0


def cmd_strip(args) -> int:
    profile = parse_profile_spec(args.profile)
    disc = strip.StripDiscretization(
        epsilon=args.epsilon, m=args.m, half_length=args.half_length,
        n_s=args.n_s, backend=args.backend, n_modes=args.n_modes,
        n_t=args.n_t)
    form = strip.assemble_fqunit(profile, disc)
    res = lowest_eigenpairs(form, args.n_ev, tol=args.tol, seed=args.seed)
    thr = transverse.essential_threshold(args.m, args.epsilon)
    print(f"profile: {profile.name}  eps = {args.epsilon}  m = {args.m}  "
          f"backend = {args.backend}")
    print(f"threshold^2 = {thr**2:.12e}")
    for j, mu in enumerate(res.eigenvalues, start=1):
        print(f"mu_{j} = {mu:.12e}   residual = {res.residuals[j-1]:.2e}")
    if args.sandwich:
        rec = asymptotics.sandwich_report(profile, args.m, [args.epsilon],
                                          disc=disc, solver_tol=args.tol,
                                          seed=args.seed)
        r = rec["records"][0]
        print(f"sandwich constant c = {rec['c']:.6f}")
        for j in range(rec["j_count"]):
            print(f"  mu_{j+1}: {r['mu_minus'][j]:.9e} <= "
                  f"{r['mu_fq'][j]:.9e} <= {r['mu_plus'][j]:.9e}")
    if args.out:
        rows = [{"j": j + 1, "mu": float(res.eigenvalues[j]),
                 "residual": float(res.residuals[j])}
                for j in range(len(res.eigenvalues))]
        _write_rows(rows, ["j", "mu", "residual"], args.out, args.format)
    if args.export_matrix:
        form.export(args.export_matrix)
        print(f"stiffness written to {args.export_matrix}")
    return 0


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    profile = _profile_from_config(cfg)
    run = cfg["run"] if cfg.has_section("run") else {}
    grid = cfg["grid"] if cfg.has_section("grid") else {}
    solver = cfg["solver"] if cfg.has_section("solver") else {}
    verify = cfg["verify"] if cfg.has_section("verify") else {}
    out = cfg["output"] if cfg.has_section("output") else {}

    masses = _floats(run.get("m", "0"))
    epsilons = _floats(run.get("epsilons", "0.1 0.05 0.025 0.0125"))
    j_max = int(run.get("j_max", "1"))
    disc = strip.StripDiscretization(
        epsilon=epsilons[0], m=masses[0],
        half_length=float(grid.get("half_length", "40")),
        n_s=int(grid.get("n_s", "800")),
        n_modes=int(grid.get("n_modes", "6")))
    qe_nodes = int(grid.get("qe_nodes", "4000"))
    tol = float(solver.get("tol", "1e-9"))
    seed = int(solver.get("seed", "0"))
    slope_rtol = float(verify.get("slope_rtol", "0.05"))
    check_sandwich = str(verify.get("check_sandwich", "true")).lower() == "true"
    gap_window = float(verify.get("gap_halving_window", "0.25"))
    out_dir = Path(out.get("directory", "."))
    fmt = out.get("format", "csv")

    failures = 0
    for m in masses:
        report = asymptotics.run_epsilon_sweep(
            profile, m, epsilons, j_max=j_max, disc=disc,
            qe_nodes=qe_nodes, solver_tol=tol, seed=seed)
        if report.provenance["J"] == 0:
            below = np.nanmin(report.lambdas - report.thresholds[:, None]) \
                if np.isfinite(report.lambdas).any() else 0.0
            ok = bool(np.all(report.absorbed | ~np.isfinite(report.lambdas))) \
                or below > -1e-6 * float(np.nanmax(report.thresholds))
            print(f"[m={m:g}] no bound states expected; spectrum clear of "
                  f"threshold: {'PASS' if ok else 'FAIL'}")
            failures += 0 if ok else 1
        else:
            for j in range(min(j_max, report.provenance["J"])):
                ok = (np.isfinite(report.rel_error[j])
                      and report.rel_error[j] <= slope_rtol)
                print(f"[m={m:g}] slope j={j+1}: fitted {report.mu_hat[j]:+.6e} "
                      f"vs reference {report.reference[j]:+.6e} "
                      f"(rel err {report.rel_error[j]:.3%}): "
                      f"{'PASS' if ok else 'FAIL'}")
                failures += 0 if ok else 1
        if check_sandwich and profile.sup_kappa > 0:
            pair = sorted(epsilons, reverse=True)[:2]
            rec = asymptotics.sandwich_report(profile, m, pair, disc=disc,
                                              solver_tol=tol, seed=seed)
            g0 = rec["records"][0]["gap_1"]
            g1 = rec["records"][1]["gap_1"]
            ratio = g1 / g0
            ok = abs(ratio - 0.5) <= gap_window * 0.5
            print(f"[m={m:g}] sandwich ordered; gap ratio {ratio:.4f} "
                  f"(target 0.5): {'PASS' if ok else 'FAIL'}")
            failures += 0 if ok else 1
        name = asymptotics.default_report_name(profile.name, m, epsilons[0])
        if fmt == "json":
            name = name.replace(".csv", ".json")
        emit_path = out_dir / name
        asymptotics.emit_report(report, fmt, emit_path)
        if args.verbose:
            print(f"report written to {emit_path}")
    print("VERIFY:", "PASS" if failures == 0 else f"FAIL ({failures})")
    return 0 if failures == 0 else _VERIFY_FAIL


def cmd_validate_curve(args) -> int:
    if args.curve_file:
        samples = geometry.read_curve_file(args.curve_file)
        profile = geometry.curvature_from_parametrization(samples)
    else:
        profile = parse_profile_spec(args.profile)
    report = geometry.validate_assumptions(profile, args.epsilon,
                                           s_max=args.s_max, ds=args.ds)
    print(f"profile: {profile.name}  eps = {args.epsilon}")
    print(f"(A) curvature tail decay : {'PASS' if report.decay_ok else 'FAIL'}")
    print(f"(B) derivative bounds    : {'PASS' if report.derivatives_ok else 'FAIL'}")
    print(f"(C) tube injectivity     : {'PASS' if report.injective else 'FAIL'}")
    if not report.injective and "injectivity_reason" in report.details:
        print(f"    reason: {report.details['injectivity_reason']}")
    if args.verbose:
        print(json.dumps(report.details, indent=2, default=float))
    if args.out:
        doc = {"decay_ok": report.decay_ok,
               "derivatives_ok": report.derivatives_ok,
               "injective": report.injective,
               "details": report.details}
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2, default=float)
    return 0 if report.passed else _VERIFY_FAIL


def _write_rows(rows, cols, path, fmt) -> None:
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(rows, fh, indent=2)
    else:
        import csv as _csv
        with open(path, "w", newline="") as fh:
            writer = _csv.DictWriter(fh, fieldnames=cols)
            writer.writeheader()
            writer.writerows(rows)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relwave",
        description="Spectral toolkit for thin relativistic waveguides")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="write results to file")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--verbose", action="store_true")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("transverse", help="cross-section mode table")
    p.add_argument("--m", type=float, default=0.0)
    p.add_argument("--p-max", type=int, default=3)
    p.add_argument("--samples", type=int, default=0,
                   help="print this many eigenfunction samples")
    common(p)
    p.set_defaults(func=cmd_transverse)

    p = sub.add_parser("effective", help="effective 1-d bound states")
    p.add_argument("--profile", required=True,
                   help="zero | gaussian:a[,sigma] | compact:a,w | file:path")
    p.add_argument("--half-length", type=float, default=40.0)
    p.add_argument("--nodes", type=int, default=4000)
    p.add_argument("--n-ev", type=int, default=6)
    p.add_argument("--oracle", choices=("none", "shooting"), default="none")
    common(p)
    p.set_defaults(func=cmd_effective)

    p = sub.add_parser("strip", help="squared-operator spectrum on the strip")
    p.add_argument("--profile", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--m", type=float, default=0.0)
    p.add_argument("--half-length", type=float, default=40.0)
    p.add_argument("--n-s", type=int, default=800)
    p.add_argument("--backend", choices=("galerkin", "tensor"),
                   default="galerkin")
    p.add_argument("--n-modes", type=int, default=6)
    p.add_argument("--n-t", type=int, default=48)
    p.add_argument("--n-ev", type=int, default=6)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--sandwich", action="store_true",
                   help="also print the sandwich bracket")
    p.add_argument("--export-matrix", default=None,
                   help="write the stiffness in coordinate text format")
    common(p)
    p.set_defaults(func=cmd_strip)

    p = sub.add_parser("verify", help="thin-width verification sweep")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("validate-curve", help="admissibility checks")
    p.add_argument("--profile", default=None)
    p.add_argument("--curve-file", default=None,
                   help="text file of 's x y' samples")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--s-max", type=float, default=None)
    p.add_argument("--ds", type=float, default=0.05)
    common(p)
    p.set_defaults(func=cmd_validate_curve)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "validate-curve" and not (args.profile or args.curve_file):
        parser.error("validate-curve needs --profile or --curve-file")
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as err:
        print(f"relwave {args.command}: {err}", file=sys.stderr)
        return _RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
