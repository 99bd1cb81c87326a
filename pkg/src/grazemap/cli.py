"""Command-line front end: classify, trace, render, rfm-check, reflect.

Exit codes: 0 definite pass, 1 usage or spec error, 2 inconclusive verdict,
3 definite numerical failure.  All outputs are deterministic for a fixed
config and seed; CSV files are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import grazing, reflection, svgplot
from .diffgeo import DomainExceeded, NotNormalized, UnsupportedSurface
from .phases import xi_incoming
from .specio import SpecError, parse_obstacle, parse_phase

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INCONCLUSIVE = 2
EXIT_FAIL = 3


class _Parser(argparse.ArgumentParser):
    # Spec'd exit-code convention: usage errors are 1, not argparse's 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fmt(x) -> str:
    if x is None:
        return "nan"
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="grazemap",
                     description="Reflected flow maps and grazing sets for convex obstacles")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, phase_required=True):
        p.add_argument("--obstacle", required=True, help="obstacle spec file")
        p.add_argument("--phase", required=phase_required, help="phase spec file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--s0", type=float, default=1.0, help="flow parameter bound")
        p.add_argument("--budget", type=int, default=1000, help="sample budget")
        p.add_argument("--window", type=float, default=0.3, help="tracing window half-width")
        p.add_argument("--tol", type=float, default=1e-10, help="trace tolerance")
        p.add_argument("--seed", type=int, default=42, help="sampling seed")
        p.add_argument("--format", choices=("csv", "svg", "both"), default=None)

    for name, helptext in (("classify", "grazing-set report"),
                           ("trace", "trace the grazing curve to CSV"),
                           ("render", "render the grazing curve to SVG"),
                           ("rfm-check", "verify the reflected flow map by sampling"),
                           ("reflect", "tabulate reflected covectors on a boundary grid")):
        common(sub.add_parser(name, help=helptext))
    sub.choices["render"].add_argument("--sheet", action="store_true",
                                       help="overlay the shadow-boundary sheet projection")
    return parser


def _load(args):
    obstacle = parse_obstacle(args.obstacle)
    phase = parse_phase(args.phase, dim=obstacle.dim)
    if args.tol <= 0 or args.window < 0 or args.s0 <= 0:
        raise SpecError("<flags>", 0, "tolerance, window, and s0 overrides must be positive")
    return obstacle, phase


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_classify(args) -> int:
    obstacle, phase = _load(args)
    report = grazing.gs_assumption_report(obstacle, phase, window=args.window,
                                          trace_tol=args.tol)
    lines = [f"obstacle = {args.obstacle}", f"phase = {args.phase}",
             f"order = {report.order.describe()}"]
    lines.append(f"u1ww = {'PASS' if report.u1ww.passed else 'FAIL'}"
                 if report.u1ww is not None else "u1ww = n/a")
    if report.regularity is not None:
        lines.append(f"exponent = {_fmt(report.regularity.exponent)}")
        lines.append(f"coefficient = {_fmt(report.regularity.coefficient)}")
    for sc in report.slice_counts:
        lines.append(f"slice_counts[{_fmt(sc.x2_star)}] = {sc.count_pos} {sc.count_neg}")
    for note in report.notes:
        lines.append(f"note = {note}")
    lines.append(f"verdict = {report.verdict}")
    text = "\n".join(lines) + "\n"
    (_outdir(args) / "classify_report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_INCONCLUSIVE if report.verdict == grazing.VERDICT_INCONCLUSIVE else EXIT_OK


def _trace(args, obstacle, phase):
    gf = grazing.grazing_function_for(obstacle, phase)
    return grazing.trace_grazing_curve(gf, obstacle, window=args.window, trace_tol=args.tol)


def _write_trace_csv(curve, path: Path, dim_t: int) -> None:
    cols = ["branch", "arc"] + [f"x{i + 2}" for i in range(dim_t)] + ["residual"]
    rows = [",".join(cols)]
    if curve is not None:
        for branch in curve.branches:
            for arc, vert, res in zip(branch.arc_params, branch.vertices, branch.residuals):
                fields = [str(branch.side), _fmt(arc)]
                fields += [_fmt(v) for v in vert]
                fields.append(_fmt(res))
                rows.append(",".join(fields))
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def run_trace(args, with_svg: bool = False, with_sheet: bool = False) -> int:
    obstacle, phase = _load(args)
    out = _outdir(args)
    fmt = args.format or ("svg" if with_svg else "csv")
    curve = None if args.window == 0.0 else _trace(args, obstacle, phase)
    if fmt in ("csv", "both"):
        _write_trace_csv(curve, out / "trace.csv", obstacle.dim_tangential)
    if fmt in ("svg", "both"):
        sheet = None
        if with_sheet and curve is not None:
            sheet = grazing.shadow_boundary_flowout(obstacle, phase, curve,
                                                    s_range=(0.0, args.s0), n_s=2)
        svg = svgplot.curve_svg(curve, sheet=sheet) if curve is not None else \
            svgplot.SvgCanvas(window=args.window or 1.0).render()
        (out / "trace.svg").write_text(svg, encoding="utf-8")
    return EXIT_OK


def run_rfm_check(args) -> int:
    obstacle, phase = _load(args)
    if args.budget <= 0:
        sys.stderr.write("InvalidBudget: --budget must be positive\n")
        return EXIT_USAGE
    verdict = reflection.verify_rfm(obstacle, phase, s0=args.s0, budget=args.budget,
                                    seed=args.seed)
    out = _outdir(args)
    dim_t = obstacle.dim_tangential
    cols = ["s"] + [f"x{i + 2}" for i in range(dim_t)] + ["t", "mu", "j_analytic",
                                                          "j_fd", "bound", "pass"]
    rows = [",".join(cols)]
    for s, xb, t, mu, ja, jf, bound, ok in verdict.rows:
        fields = [_fmt(s)] + [_fmt(v) for v in xb] + [_fmt(t), _fmt(mu), _fmt(ja),
                                                      _fmt(jf), _fmt(bound), str(int(ok))]
        rows.append(",".join(fields))
    (out / "rfm.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    sys.stdout.write(f"samples = {verdict.n_samples}\n")
    sys.stdout.write(f"illuminated = {verdict.n_illuminated}\n")
    sys.stdout.write(f"worst_bound_gap = {_fmt(verdict.worst_bound_gap)}\n")
    sys.stdout.write(f"worst_fd_rel_error = {_fmt(verdict.worst_fd_rel_error)}\n")
    sys.stdout.write(f"RFM {verdict.summary()}\n")
    return EXIT_OK if verdict.passed else EXIT_FAIL


def run_reflect(args) -> int:
    obstacle, phase = _load(args)
    out = _outdir(args)
    dim_t = obstacle.dim_tangential
    rng = np.random.default_rng(args.seed)
    pts = []
    while len(pts) < args.budget:
        xb = rng.uniform(-obstacle.radius, obstacle.radius, size=dim_t)
        if np.linalg.norm(xb) <= obstacle.radius:
            pts.append(xb)
    cols = ([f"x{i + 2}" for i in range(dim_t)] + ["mu", "label", "xi1_i"]
            + [f"xibar_i{i + 2}" for i in range(dim_t)] + ["xi1_r"]
            + [f"xibar_r{i + 2}" for i in range(dim_t)])
    rows = [",".join(cols)]
    for xb in pts:
        cls = reflection.classify_boundary_point(obstacle, phase, xb)
        xi = xi_incoming(phase, obstacle, xb)
        xr = reflection.reflect_direction(obstacle, xb, xi)
        fields = [_fmt(v) for v in xb] + [_fmt(cls.margin), cls.label, _fmt(xi.xi1)]
        fields += [_fmt(v) for v in xi.xibar] + [_fmt(xr.xi1)] + [_fmt(v) for v in xr.xibar]
        rows.append(",".join(fields))
    (out / "reflect.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "classify":
            return run_classify(args)
        if args.command == "trace":
            return run_trace(args)
        if args.command == "render":
            return run_trace(args, with_svg=True, with_sheet=args.sheet)
        if args.command == "rfm-check":
            return run_rfm_check(args)
        if args.command == "reflect":
            return run_reflect(args)
    except (SpecError, NotNormalized, DomainExceeded, UnsupportedSurface, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (grazing.SeedNotFound, grazing.SliceMiss, grazing.StepCollapse,
            grazing.InsufficientPoints, reflection.NoConvergence,
            reflection.GrazingSingular) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_FAIL
    parser.print_usage(sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
