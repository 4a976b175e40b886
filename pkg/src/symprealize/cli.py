"""Command-line front end: ``symprealize verify | realize | spray | catalog``.

Exit codes: 0 success, 1 failed check, 2 spec or usage error, 3 every
requested point left the flow domain.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from itertools import product
from pathlib import Path

import numpy as np

from .geometry import CentralDifference, JetScheme
from .holomorphic import HolomorphicRealization, build_holomorphic_omega, build_underline_J, holomorphic_bivector
from .nijenhuis import fiber_names
from .realization import NondegeneracyError, OutsideDomainError, RealizationOptions, Tolerances, realization_bivector, realize_batch
from .report import format_float, ordered_map, thread_count
from .specfile import ManifoldSpec, SpecError, catalog_document, catalog_names, load_spec
from .spray import build_spray, homogeneity_residual, trajectory
from .suites import run_suite, sample_points

EXIT_OK, EXIT_FAIL, EXIT_SPEC, EXIT_OUTSIDE = 0, 1, 2, 3


def _options(args) -> RealizationOptions:
    return RealizationOptions(quad_nodes=args.quad_nodes, rtol=args.tol_ode_rel, atol=args.tol_ode_abs)


def _parse_point(text: str, dim: int) -> np.ndarray:
    try:
        vals = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise SpecError(f"bad point {text!r}: {exc}") from exc
    if len(vals) != dim:
        raise SpecError(f"point {text!r} has {len(vals)} coordinates, expected {dim}")
    return np.asarray(vals)


def _points(args, spec: ManifoldSpec) -> np.ndarray:
    m = spec.chart_dim
    if getattr(args, "point", None):
        return np.stack([_parse_point(p, 2 * m) for p in args.point])
    if getattr(args, "grid", None):
        k = args.grid
        if k < 1:
            raise SpecError("--grid needs at least one node per axis")
        base = _parse_point(args.base, m) if args.base else np.zeros(m)
        r = args.radius if args.grid_radius is None else args.grid_radius
        axis = np.linspace(-r, r, k) if k > 1 else np.zeros(1)
        return np.array([np.concatenate([base, lam]) for lam in product(axis, repeat=m)])
    return sample_points(m, args.points, args.seed, args.radius)


def _csv_float(x: float) -> str:
    return format_float(x).strip('"')


def _write(text: str, target: str | None) -> None:
    if target in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(target).write_text(text)


# -- verify -----------------------------------------------------------------


def cmd_verify(args) -> int:
    spec = load_spec(args.spec)
    pts = _points(args, spec)
    opts = _options(args)
    scheme = JetScheme() if args.scheme == "jet" else CentralDifference(args.fd_h, args.richardson)
    start = time.perf_counter()
    report = run_suite(
        spec,
        pts,
        opts,
        Tolerances(),
        scheme,
        torsion_h=args.torsion_h,
        threads=thread_count(),
        extra_checks=not args.no_structural,
    )
    report.wall_time = time.perf_counter() - start
    report.spec_hash = spec.hash
    report.options = {
        **opts.as_dict(),
        "points": int(len(pts)),
        "seed": args.seed,
        "radius": args.radius,
        "scheme": args.scheme,
        "fd_h": args.fd_h,
        "richardson": args.richardson,
        "torsion_h": args.torsion_h,
        "structural": not args.no_structural,
    }
    _write(report.to_json(include_timing=args.timing), args.output)
    if not args.quiet:
        err = sys.stderr
        for line in report.summary_lines():
            print(line, file=err)
        for note in report.notes:
            print(note, file=err)
        print(f"{report.inside_count}/{len(report.points)} points inside U", file=err)
    if report.notes and not report.passed:
        return EXIT_FAIL
    if report.all_outside:
        return EXIT_OUTSIDE
    return EXIT_OK if report.passed else EXIT_FAIL


# -- realize ----------------------------------------------------------------


def _coord_names(spec: ManifoldSpec) -> list[str]:
    m = spec.chart_dim
    return list(spec.variables) + list(fiber_names(m))


def _matrix_header(label: str, d: int) -> list[str]:
    return [f"{label}_{a + 1}_{b + 1}" for a in range(d) for b in range(d)]


def _blocks(spec: ManifoldSpec) -> list[str]:
    if spec.kind == "poisson":
        return ["omega", "Pi"]
    if spec.kind == "poisson-nijenhuis":
        return ["omega", "omegaN", "Pi", "PiN"]
    return ["omegaR", "omegaI", "Jbar", "PiRe", "PiIm"]


def _realize_point(spec: ManifoldSpec, opts: RealizationOptions, z: np.ndarray) -> dict | None:
    try:
        if spec.kind == "holomorphic":
            hr = HolomorphicRealization(spec.holomorphic, spec.conn, opts)
            WR, WI = (a[0] for a in hr.forms(z[None]))
            Jbar = build_underline_J(WR, WI)
            Pi = holomorphic_bivector(build_holomorphic_omega(WR, WI), Jbar)
            return {"omegaR": WR, "omegaI": WI, "Jbar": Jbar, "PiRe": Pi.real, "PiIm": Pi.imag}
        xi = build_spray(spec.pi, spec.conn)
        kinds = ("omega", "twisted") if spec.kind == "poisson-nijenhuis" else ("omega",)
        res = realize_batch(xi, z[None], opts, kinds, N=spec.N)
        if not res.success:
            return None
        W = res.forms["omega"][0]
        out = {"omega": W, "Pi": realization_bivector(W)}
        if spec.kind == "poisson-nijenhuis":
            WN = res.forms["twisted"][0]
            out.update(omegaN=WN, PiN=realization_bivector(WN))
            out = {k: out[k] for k in ("omega", "omegaN", "Pi", "PiN")}
        return out
    except (OutsideDomainError, NondegeneracyError, np.linalg.LinAlgError):
        return None


def cmd_realize(args) -> int:
    spec = load_spec(args.spec)
    pts = _points(args, spec)
    opts = _options(args)
    d = 2 * spec.chart_dim
    rows = ordered_map(lambda z: _realize_point(spec, opts, z), list(pts), thread_count())
    header = _coord_names(spec)
    for label in _blocks(spec):
        header += _matrix_header(label, d)
    header.append("inside_U")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    inside = 0
    for z, row in zip(pts, rows):
        if row is None and not args.keep_outside:
            continue
        vals = [_csv_float(v) for v in z]
        for label in _blocks(spec):
            block = np.full((d, d), np.nan) if row is None else row[label]
            vals += [_csv_float(v) for v in block.reshape(-1)]
        vals.append("1" if row is not None else "0")
        inside += row is not None
        writer.writerow(vals)
    _write(buf.getvalue(), args.output)
    if not args.quiet:
        print(f"{inside}/{len(pts)} points inside U", file=sys.stderr)
    return EXIT_OK if inside else EXIT_OUTSIDE


# -- spray ------------------------------------------------------------------


def cmd_spray(args) -> int:
    spec = load_spec(args.spec)
    m = spec.chart_dim
    p0 = _parse_point(args.p0, 2 * m)
    if not 0.0 <= args.t <= 1.0:
        raise SpecError("--t must lie in [0, 1]")
    if args.samples < 2:
        raise SpecError("--samples must be at least 2")
    xi = build_spray(spec.pi, spec.conn)  # pi_I for holomorphic specs
    solver = _options(args).solver
    times = np.linspace(0.0, args.t, args.samples)
    bf = trajectory(xi, p0, times, solver)
    if not bf.success:
        print(f"flow left the domain at t={bf.failure_time} ({bf.message})", file=sys.stderr)
        return EXIT_OUTSIDE
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + _coord_names(spec))
    for t, z in zip(times, bf.z[:, 0]):
        writer.writerow([_csv_float(t)] + [_csv_float(v) for v in z])
    _write(buf.getvalue(), args.output)
    if args.check_homogeneity is not None:
        s = args.check_homogeneity
        res = homogeneity_residual(xi, p0, s, args.t if args.t > 0 else 1.0, solver)
        print(f"homogeneity residual (s={s:g}): {res:.3e}", file=sys.stderr)
        if not res <= Tolerances().homogeneity:
            return EXIT_FAIL
    return EXIT_OK


# -- catalog ----------------------------------------------------------------


def cmd_catalog(args) -> int:
    if args.show:
        sys.stdout.write(json.dumps(catalog_document(args.show), indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    if args.json:
        out = {name: catalog_document(name) for name in catalog_names()}
        sys.stdout.write(json.dumps(out, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    for name in catalog_names():
        doc = catalog_document(name)
        desc = doc.get("description", "")
        print(f"{name:18s} {doc['kind']:18s} dim={doc['dim']}  {desc}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("spec", help="spec JSON file or catalog:<name>")
    p.add_argument("--tol-ode-rel", type=float, default=1e-10, help="ODE relative tolerance")
    p.add_argument("--tol-ode-abs", type=float, default=1e-12, help="ODE absolute tolerance")
    p.add_argument("--quad-nodes", type=int, default=16, help="Gauss-Legendre nodes on [0, 1]")
    p.add_argument("--output", "-o", default=None, help="output file (default: stdout)")
    p.add_argument("--quiet", "-q", action="store_true")


def _sampling(p: argparse.ArgumentParser) -> None:
    p.add_argument("--points", type=int, default=10, help="number of sampled points")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--radius", type=float, default=0.25, help="fiber radius |l| <= r")
    p.add_argument("--point", action="append", help="explicit point x..,l.. (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symprealize", description="Symplectic realizations via Poisson sprays.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the verification suite and write a JSON report")
    _common(v)
    _sampling(v)
    v.add_argument("--scheme", choices=("fd", "jet"), default="fd", help="closedness derivative scheme")
    v.add_argument("--fd-h", type=float, default=1e-4, help="finite-difference step")
    v.add_argument("--richardson", action=argparse.BooleanOptionalAction, default=True, help="one Richardson step in FD derivatives")
    v.add_argument("--torsion-h", type=float, default=1e-3, help="FD step for the torsion of Jbar")
    v.add_argument("--no-structural", action="store_true", help="skip homogeneity, geodesic and quadrature checks")
    v.add_argument("--timing", action="store_true", help="include wall time (breaks byte determinism)")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("realize", help="export realized forms at points or on a fiber grid (CSV)")
    _common(r)
    _sampling(r)
    r.add_argument("--grid", type=int, default=None, help="K nodes per fiber axis")
    r.add_argument("--grid-radius", type=float, default=None, help="fiber grid half-width (default: --radius)")
    r.add_argument("--base", default=None, help="base point of the fiber grid (default: origin)")
    r.add_argument("--keep-outside", action="store_true", help="keep rows outside U (nan, inside_U=0)")
    r.set_defaults(func=cmd_realize)

    s = sub.add_parser("spray", help="dump a spray trajectory (CSV)")
    _common(s)
    s.add_argument("--p0", required=True, help="initial point x..,l..")
    s.add_argument("--t", type=float, default=1.0, help="final time in [0, 1]")
    s.add_argument("--samples", type=int, default=11, help="output times on [0, t]")
    s.add_argument("--check-homogeneity", type=float, default=None, metavar="S")
    s.set_defaults(func=cmd_spray)

    c = sub.add_parser("catalog", help="list built-in specs")
    c.add_argument("--json", action="store_true")
    c.add_argument("--show", default=None, metavar="NAME")
    c.set_defaults(func=cmd_catalog)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
