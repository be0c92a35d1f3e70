"""Command-line entry point: ``harvestlab {point,sweep,region,compare}``.

Exit codes: 0 success, 2 usage or parameter error, 3 an integral did not
converge (results are still written), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path

from . import analysis, physics, plot, sweep
from .quadrature import NotConverged, QuadConfig, Strategy

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED, EXIT_IO = 0, 2, 3, 4
DEFAULT_SLICES = (0.5, 1.5, 2.5, 3.5, 4.5)

_STRATEGIES = {
    "global": Strategy.GLOBAL, "globaladaptive": Strategy.GLOBAL,
    "local": Strategy.LOCAL, "localadaptive": Strategy.LOCAL,
}


class UsageError(Exception):
    pass


def _strategy(text: str) -> Strategy:
    try:
        return _STRATEGIES[text.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown strategy {text!r} (use global or local)") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return v


def _default_workers() -> int:
    env = os.environ.get("HARVESTLAB_WORKERS")
    if not env:
        return 1
    try:
        return _positive_int(env)
    except (ValueError, argparse.ArgumentTypeError):
        raise UsageError(f"HARVESTLAB_WORKERS must be a positive integer, got {env!r}") from None


def _add_quad_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", type=_strategy, default=Strategy.GLOBAL,
                   help="global (GlobalAdaptive, default) or local (LocalAdaptive)")
    p.add_argument("--rel-tol", type=float, default=QuadConfig.rel_tol)
    p.add_argument("--abs-tol", type=float, default=QuadConfig.abs_tol)
    p.add_argument("--max-regions", type=int, default=QuadConfig.max_regions)


def _quad_config(args) -> QuadConfig:
    try:
        return QuadConfig(args.rel_tol, args.abs_tol, args.max_regions, args.strategy)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _json_float(v: float) -> float:
    # repr of a float is the shortest string that round-trips exactly.
    return float(v)


def cmd_point(args) -> int:
    physical = [args.kappa, args.L, args.omega, args.sigma]
    dimensionless = [args.c1, args.c2, args.c3]
    if any(v is not None for v in physical):
        if any(v is not None for v in dimensionless):
            raise UsageError("give either --c1/--c2/--c3 or --kappa/--L/--omega/--sigma, not both")
        if any(v is None for v in physical):
            raise UsageError("physical input needs all of --kappa, --L, --omega, --sigma")
        pp = physics.PhysicalParams(*physical)
        p = physics.to_dimensionless(pp, eta0=args.eta0)
    else:
        for name, v in zip(("c1", "c2", "c3"), dimensionless):
            if v is None:
                raise UsageError(f"missing --{name}")
        p = physics.HarvestParams(*dimensionless, eta0=args.eta0)
    cfg = _quad_config(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConverged)
        E = physics.eval_E(p, cfg)
        X = physics.eval_X(p, cfg)
    out = {
        "c1": p.c1, "c2": p.c2, "c3": p.c3, "eta0": p.eta0,
        "strategy": cfg.strategy.value,
        "E": E.value, "err_E": E.err, "converged_E": E.meta.converged,
        "X_re": X.value.real, "X_im": X.value.imag, "abs_X": abs(X.value),
        "err_X": X.err, "converged_X": X.meta.converged,
        "N": physics.negativity(E.value, X.value),
        "signed_N": physics.signed_negativity(E.value, X.value),
        "E_sp": physics.eval_E_sp(p), "X_sp": physics.eval_X_sp(p),
        "sp_entangled": physics.sp_entangled(p.c1, p.c2),
    }
    if args.json:
        print(json.dumps({k: _json_float(v) if isinstance(v, float) else v for k, v in out.items()}))
    else:
        if any(v is not None for v in physical):
            print(f"kappa={args.kappa:g} L={args.L:g} Omega={args.omega:g} sigma={args.sigma:g}")
        print(f"c1={p.c1:.6g} c2={p.c2:.6g} c3={p.c3:.6g} eta0={p.eta0:g}  [{cfg.strategy.value}]")
        print(f"E      = {E.value:.10g}  (err {E.err:.3g}, {'converged' if E.meta.converged else 'NOT converged'})")
        print(f"X      = {X.value.real:.10g} {X.value.imag:+.10g}i  (err {X.err:.3g}, "
              f"{'converged' if X.meta.converged else 'NOT converged'})")
        print(f"|X|    = {abs(X.value):.10g}")
        print(f"N      = {out['N']:.10g}  (|X| - E = {out['signed_N']:.6g})")
        print(f"E_sp   = {out['E_sp']:.6f}")
        print(f"X_sp   = {out['X_sp']:.6f}")
        print(f"stationary-phase entangled: {'yes' if out['sp_entangled'] else 'no'}")
    return EXIT_OK if E.meta.converged and X.meta.converged else EXIT_NOT_CONVERGED


def _grid_from_args(args) -> sweep.GridSpec:
    base = sweep.GridSpec.full()
    kw = {}
    for axis in ("c1", "c2", "c3"):
        for part in ("start", "stop", "step"):
            v = getattr(args, f"{axis}_{part}")
            kw[f"{axis}_{part}"] = getattr(base, f"{axis}_{part}") if v is None else v
    try:
        spec = sweep.GridSpec(**kw)
        if args.coarse > 1:
            spec = spec.coarsen(args.coarse)
        if args.c3_only is not None:
            spec = spec.with_c3(args.c3_only)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return spec


def cmd_sweep(args) -> int:
    spec = _grid_from_args(args)
    cfg = _quad_config(args)
    workers = args.workers if args.workers is not None else _default_workers()
    try:
        summary = sweep.run_sweep(spec, cfg, workers, args.out, resume=args.resume,
                                  retry=args.retry, timing=not args.no_timing)
    except sweep.SpecMismatch as exc:
        raise UsageError(f"cannot resume: {exc}") from None
    except (sweep.SinkWriteFailure, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    skipped = "all" if summary.points_done == 0 and summary.skipped else summary.skipped
    print(f"points_done = {summary.points_done}")
    print(f"points_failed = {summary.points_failed}")
    print(f"skipped = {skipped}")
    print(f"elapsed = {summary.elapsed:.2f} s")
    return EXIT_NOT_CONVERGED if summary.points_failed else EXIT_OK


def _slice_files(base_csv, base_svg, out_dir, c3: float, batch: bool):
    if not batch:
        return base_csv, base_svg
    tag = f"c3_{c3:.3f}"
    return Path(out_dir) / f"region_{tag}.csv", Path(out_dir) / f"region_{tag}.svg"


def cmd_region(args) -> int:
    try:
        records = sweep.read_records(args.records)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        style = plot.PlotStyle(args.cell_px, args.sp_color, args.numeric_color, args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    slices = args.c3 or list(DEFAULT_SLICES)
    batch = len(slices) > 1 or args.out_dir is not None
    if batch and args.out_dir is None:
        raise UsageError("several slices need --out-dir")
    if not batch and args.csv is None and args.svg is None:
        raise UsageError("give --csv and/or --svg (or --out-dir)")
    regions = []
    for c3 in slices:
        try:
            regions.append(analysis.extract_region(records, c3))
        except analysis.AnalysisError as exc:
            raise UsageError(str(exc)) from None
    try:
        if args.out_dir is not None:
            Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        for r in regions:
            csv_path, svg_path = _slice_files(args.csv, args.svg, args.out_dir, r.c3, batch)
            if csv_path is not None:
                analysis.write_region_csv(r, csv_path)
            if svg_path is not None:
                with open(svg_path, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(plot.render_region_svg(r, style))
            print(f"c3 = {r.c3:g}: numeric area {analysis.region_area(r, 'numeric'):.6g}, "
                  f"sp area {analysis.region_area(r, 'sp'):.6g}, "
                  f"jaccard {analysis.region_similarity(r.numeric_mask, r.sp_mask):.4f}")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        a = sweep.read_records(args.a)
        b = sweep.read_records(args.b)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        d = analysis.compare_strategies(a, b)
    except analysis.KeyMismatch as exc:
        raise UsageError(str(exc)) from None
    print(f"n_compared = {d.n_compared}")
    print(f"max_rel_diff_X = {d.max_rel_diff_X:.6g}  at (c1, c2, c3) = {d.worst_point}")
    print(f"max_rel_diff_N = {d.max_rel_diff_N:.6g}  at (c1, c2, c3) = {d.worst_point_N}")
    print("X: ||X_a| - |X_b|| / max(|X_a|, |X_b|);  N: |s_a - s_b| / max(|s_a|, |s_b|) with s = |X| - E")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harvestlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("point", help="evaluate E, X and the negativity at one point")
    for name in ("c1", "c2", "c3"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--kappa", type=float, help="proper acceleration")
    p.add_argument("--L", type=float, help="detector separation")
    p.add_argument("--omega", type=float, help="energy gap")
    p.add_argument("--sigma", type=float, help="window half-width")
    p.add_argument("--eta0", type=float, default=1.0)
    p.add_argument("--json", action="store_true", help="print one JSON object")
    _add_quad_flags(p)
    p.set_defaults(func=cmd_point)

    p = sub.add_parser("sweep", help="evaluate a (c1, c2, c3) grid into a CSV file")
    for axis in ("c1", "c2", "c3"):
        for part in ("start", "stop", "step"):
            p.add_argument(f"--{axis}-{part}", type=float, dest=f"{axis}_{part}")
    p.add_argument("--coarse", type=_positive_int, default=1,
                   help="keep every N-th value of each axis")
    p.add_argument("--c3-only", type=float, help="restrict the sweep to one c3 value")
    p.add_argument("--workers", type=_positive_int,
                   help="parallel worker processes (default: $HARVESTLAB_WORKERS or 1)")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--resume", action="store_true", help="skip points already in --out")
    p.add_argument("--retry", action="store_true",
                   help=f"retry non-converged integrals once with {sweep.RETRY_FACTOR}x --max-regions")
    p.add_argument("--no-timing", action="store_true", help="write wall_ns = 0 for byte-reproducible files")
    _add_quad_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("region", help="entanglement region of c3 slices as CSV and SVG")
    p.add_argument("records", help="sweep CSV")
    p.add_argument("--c3", type=float, action="append",
                   help="slice to extract (repeatable; default: 0.5 1.5 2.5 3.5 4.5)")
    p.add_argument("--csv", help="region CSV path (single slice)")
    p.add_argument("--svg", help="SVG path (single slice)")
    p.add_argument("--out-dir", help="directory for per-slice region_c3_*.csv/.svg")
    p.add_argument("--cell-px", type=_positive_int, default=plot.PlotStyle.cell_px)
    p.add_argument("--sp-color", default=plot.PlotStyle.sp_color)
    p.add_argument("--numeric-color", default=plot.PlotStyle.numeric_color)
    p.add_argument("--alpha", type=float, default=plot.PlotStyle.overlay_alpha)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("compare", help="compare two sweeps of the same grid")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, physics.InvalidParams) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
