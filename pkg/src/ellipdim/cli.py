"""Batch command surface: dims, verify, spectrum, profile, solve.

Every command reads a field-specification JSON file, writes CSV/JSON
artifacts into --out, and exits with a stable code: 0 all checks pass,
1 an inequality check failed, 2 usage or configuration error, 3 numerical
failure.  Identical configuration and seed produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import counting, dimension, fields, pde, spectral

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (
    pde.SolverError,
    pde.MeshQualityError,
    pde.MeshAlignmentError,
    spectral.SpectrumError,
    fields.MollifyError,
    dimension.OrthonormalizationError,
    np.linalg.LinAlgError,
)


def fmt(x):
    """Canonical float formatting: 17 significant digits."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if isinstance(v, (int, float, np.floating, np.integer)) else str(v) for v in row) + "\n")
    return path


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def parse_trace(spec):
    """Trace grammar: 'x', 'y', 'one', or 'harm:<p>:<cos|sin>'."""
    if spec == "x":
        return lambda x, y: x
    if spec == "y":
        return lambda x, y: y
    if spec in ("1", "one"):
        return lambda x, y: 1.0
    if spec.startswith("harm:"):
        parts = spec.split(":")
        if len(parts) == 3 and parts[2] in ("cos", "sin"):
            try:
                degree = int(parts[1])
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad harmonic degree in {spec!r}")
            if degree < 1:
                raise argparse.ArgumentTypeError("harmonic degree must be >= 1")
            return dimension.harmonic_trace(degree, parts[2])
    raise argparse.ArgumentTypeError(
        f"unknown trace {spec!r}; use x, y, one, or harm:<p>:<cos|sin>"
    )


def parse_floats(text):
    try:
        vals = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty float list")
    return vals


def _load_field(args):
    return fields.load_field(args.field)


def _outpath(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def cmd_dims(args):
    fieldobj = _load_field(args)
    if args.d < 0:
        raise fields.FieldSpecError("d", "degree must be nonnegative")
    config = dimension.DimConfig(mesh_h=args.h, outer_radius=args.R)
    estimates = None
    if args.d <= 4:
        estimates = dimension.estimate_dims(fieldobj, args.d, config=config)
    is_laplacian = isinstance(fieldobj, fields.IdentityField)
    rows = []
    for q in range(0, args.d + 1):
        exact = counting.cumulative_harmonic_dim(2, q) if is_laplacian else ""
        est = estimates[q].estimate if estimates is not None else ""
        flags = ";".join(estimates[q].flags) if estimates is not None else ""
        rows.append((q, exact, est, flags))
    write_csv(_outpath(args, "dims.csv"), ["d", "exact_if_laplacian", "estimated", "flags"], rows)
    report = dimension.theorem2_report(fieldobj, max(args.d, 1), config=config)
    write_json(_outpath(args, "bound_report.json"), report.to_dict())
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _margin_rows(report):
    rows = []
    for c in report.checks:
        t = c["details"].get("t", "")
        rows.append((c["name"], t, c["margin"], c["tolerance"], int(c["pass"])))
    return rows


def cmd_verify(args):
    fieldobj = _load_field(args)
    config = dimension.DimConfig(mesh_h=args.h, outer_radius=args.R)
    rows = []
    ok = True

    if args.which == "lemma1":
        basis, _ = _spectral_basis(fieldobj, args, config)
        res = dimension.lemma1_check(basis, args.t, tolerance=args.tol)
        rows.append((res.name, args.t, res.margin, res.tolerance, int(res.passed)))
        ok = res.passed
    elif args.which == "eigen28":
        specfield = fieldobj
        if not fieldobj.boundary_trace_ok:
            specfield = fields.mollify(fieldobj, 0.05, r=2.5 * args.t, r0=0.5 * args.t)
        eb = specfield.exterior_bounds(0.5 * args.t)
        lam_r0 = eb[0] if eb is not None else specfield.lam
        spec = spectral.boundary_spectrum(specfield, args.t, args.k, grid_size=args.grid)
        margins = spectral.verify_eigen_lower_bound(spec, lam_r0)
        for k, margin in enumerate(margins, start=1):
            rows.append(("eigenvalue-comparison", k, margin, args.tol, int(margin >= -args.tol)))
        ok = bool(margins.min() >= -args.tol)
    elif args.which == "growth21":
        basis = dimension.build_polynomial_basis(
            fieldobj, max(args.d, 1), config.outer_radius, target_h=config.mesh_h,
            snap_radii=tuple(np.geomspace(1.0, config.outer_radius / 2.0, 6)),
        )
        recs = dimension.gram_records(basis, np.geomspace(1.0, config.outer_radius / 2.0, 6))
        part = counting.GrowthPartition(
            tuple(range(max(args.d, 1) + 1)), tuple(2 for _ in range(max(args.d, 1)))
        )
        res = dimension.det_growth_exponent(recs, n=2, partition=part)
        rows.append(("determinant-growth", res.slope, res.margin, args.slope_tol,
                     int(res.slope <= res.budget + args.slope_tol)))
        ok = res.slope <= res.budget + args.slope_tol
    elif args.which == "integrated":
        basis, lam_upper = _spectral_basis(fieldobj, args, config)
        res = dimension.integrated_eigen_check(
            basis, args.r0, args.r, tolerance=args.tol, lambda_upper=lam_upper
        )
        rows.append((res.name, args.r, res.margin, res.tolerance, int(res.passed)))
        ok = res.passed
    else:  # theorem2
        report = dimension.theorem2_report(fieldobj, args.d, config=config)
        rows = _margin_rows(report)
        rows.append(("dim-sum", args.d, report.envelopes["dim_sum"]["bound"] - report.envelopes["dim_sum"]["lhs"],
                     0.0, int(report.envelopes["dim_sum"]["pass"])))
        write_json(_outpath(args, "bound_report.json"), report.to_dict())
        ok = report.passed

    write_csv(_outpath(args, f"verify_{args.which}.csv"),
              ["check", "param", "margin", "tolerance", "pass"], rows)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _spectral_basis(fieldobj, args, config):
    """Basis on a trace-capable field for the boundary-spectrum checks."""
    specfield = fieldobj
    if not fieldobj.boundary_trace_ok:
        specfield = fields.mollify(fieldobj, 0.05, r=config.outer_radius,
                                   r0=0.5 * config.reference_radius)
    eb = specfield.exterior_bounds(0.5 * config.reference_radius)
    lam_upper = eb[1] if eb is not None else specfield.Lam
    snaps = tuple(sorted({args.t, config.reference_radius, 2.0 * config.reference_radius,
                          getattr(args, "r0", 1.0), getattr(args, "r", 2.0)}))
    basis = dimension.build_polynomial_basis(
        specfield, max(args.d, 1), config.outer_radius, target_h=config.mesh_h,
        snap_radii=snaps,
    )
    return basis, lam_upper


def cmd_spectrum(args):
    fieldobj = _load_field(args)
    if not fieldobj.boundary_trace_ok:
        fieldobj = fields.mollify(fieldobj, 0.05, r=2.5 * args.t, r0=0.5 * args.t)
    eb = fieldobj.exterior_bounds(0.5 * args.t)
    lam_r0 = args.lambda_r0 if args.lambda_r0 is not None else (eb[0] if eb else fieldobj.lam)
    spec = spectral.boundary_spectrum(fieldobj, args.t, args.m, grid_size=args.grid)
    margins = spectral.verify_eigen_lower_bound(spec, lam_r0)
    rows = []
    for k in range(1, spec.count + 1):
        oracle = spectral.euclidean_sphere_oracle(2, args.t, k)
        rows.append((k, spec.eigenvalues[k - 1], oracle, margins[k - 1]))
    write_csv(_outpath(args, "spectrum.csv"), ["k", "eta", "oracle", "margin"], rows)
    return EXIT_OK


def cmd_profile(args):
    fieldobj = _load_field(args)
    prof = fields.ellipticity_profile(
        fieldobj, args.radii, sampling_budget=args.budget, seed=args.seed
    )
    rows = [(r, lo, hi, prof.provenance) for r, lo, hi in prof.rows()]
    write_csv(_outpath(args, "profile.csv"),
              ["r", "lambda_r", "Lambda_r", "provenance"], rows)
    write_json(_outpath(args, "profile.json"), {
        "field": fieldobj.spec_dict(),
        "lambda_inf": prof.lambda_inf,
        "Lambda_inf": prof.Lambda_inf,
        "ratio_inf": prof.ratio_inf,
        "provenance": prof.provenance,
        "seed": args.seed,
    })
    return EXIT_OK


def cmd_solve(args):
    fieldobj = _load_field(args)
    snap = tuple(args.snap) if args.snap else ()
    if isinstance(fieldobj, fields.RadialPiecewiseField):
        snap = snap + tuple(b for b in fieldobj.breaks if b < args.r)
    mesh = pde.mesh_disk(args.r, args.h, snap_radii=snap)
    sol = pde.solve_dirichlet(mesh, fieldobj, args.trace)
    paths = pde.export_solution(sol, _outpath(args, "solution"))
    payload = {
        "field": fieldobj.spec_dict(),
        "r": args.r,
        "h": mesh.h,
        "vertices": len(mesh.vertices),
        "energy": sol.energy,
        "residual": sol.residual,
        "max_principle_ok": sol.max_principle_ok,
        "files": [os.path.basename(p) for p in paths],
    }
    if args.probe is not None:
        value = sol.probe(list(args.probe))
        payload["probe"] = {"point": list(args.probe), "value": value}
        print(f"probe {args.probe} -> {fmt(value)}")
    write_json(_outpath(args, "solution.json"), payload)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ellipdim",
        description="Dimension-bound laboratory for divergence-form elliptic operators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--field", required=True, help="field-spec JSON file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--h", type=float, default=0.05, help="mesh size target")
        p.add_argument("--R", type=float, default=4.0, help="outer solve radius")

    p = sub.add_parser("dims", help="per-degree dimension table plus bound report")
    common(p)
    p.add_argument("--d", type=int, required=True)

    p = sub.add_parser("verify", help="run one named inequality-check suite")
    p.add_argument("which", choices=["lemma1", "eigen28", "growth21", "integrated", "theorem2"])
    common(p)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--r0", type=float, default=1.0)
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--slope-tol", type=float, default=0.2)

    p = sub.add_parser("spectrum", help="boundary spectrum CSV at one radius")
    common(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--grid", type=int, default=2048)
    p.add_argument("--lambda-r0", type=float, default=None)

    p = sub.add_parser("profile", help="ellipticity profile CSV")
    common(p)
    p.add_argument("--radii", type=parse_floats, default=(1.0, 2.0, 4.0, 8.0))
    p.add_argument("--budget", type=int, default=2000)

    p = sub.add_parser("solve", help="Dirichlet solve with exported solution")
    common(p)
    p.add_argument("--trace", type=parse_trace, default=parse_trace("x"))
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--probe", type=parse_floats, default=None)
    p.add_argument("--snap", type=parse_floats, default=None)
    return parser


COMMANDS = {
    "dims": cmd_dims,
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
    "profile": cmd_profile,
    "solve": cmd_solve,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except fields.FieldSpecError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
