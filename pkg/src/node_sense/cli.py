"""Command-line interface for node-sense.

Every subcommand reads CSV and writes JSON (single records) or CSV (tables)
to stdout. Exit codes: 0 success, 1 domain error (JSON line on stderr),
2 usage error.
"""
import argparse
import dataclasses
import io
import json
import logging
import math
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from src.config import config
from src.logging_config import setup_logging

from . import __version__
from . import cell_network, coverage, csv_io, curve_fit, exp_models, mc_estimation, position_prediction
from .errors import InvalidInputError, NodeSenseError
from .geometry import Point2D
from .rng import PINNED_RNG

logger = logging.getLogger("node_sense.cli")


# Argument parsing helpers

class ArgumentError(Exception):
    """A flag value failed model validation; reported as a usage error."""


def _describe(e: ValidationError) -> str:
    return "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())


def _parsed(build: Callable, *args, **kwargs):
    """Build an input model from flag values."""
    try:
        return build(*args, **kwargs)
    except ValidationError as e:
        raise ArgumentError(_describe(e)) from e


def _pair(text: str) -> Tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}")
    return x, y


def _span(text: str) -> Tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X1:X2, got {text!r}")
    return a, b


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    if args.global_seed is not None:
        return args.global_seed
    return config.sampling.default_seed


def _mc_config(args) -> mc_estimation.McConfig:
    streams = args.streams if args.streams is not None else config.sampling.default_streams
    return _parsed(mc_estimation.McConfig, samples=args.samples, seed=_resolve_seed(args), streams=streams)


def _bounded_function(args) -> mc_estimation.BoundedFunction:
    return _parsed(mc_estimation.BoundedFunction.parse, args.fn, args.b1, args.b2, args.height)


# Command handlers

def cmd_mc_pi(args):
    return mc_estimation.estimate_pi(_mc_config(args)).model_dump()


def cmd_mc_integrate(args):
    return mc_estimation.estimate_area_under_curve(_bounded_function(args), _mc_config(args)).model_dump()


def cmd_mc_nodes(args):
    return mc_estimation.estimate_nodes_in_region(
        args.total, _bounded_function(args), _mc_config(args)
    ).model_dump()


def cmd_mc_convergence(args):
    base = _resolve_seed(args)
    seeds = [base + i for i in range(args.seeds)]
    for n in args.sizes:
        _parsed(mc_estimation.McConfig, samples=n, seed=base, streams=args.streams or 1)
    rows = mc_estimation.convergence_study(args.sizes, seeds, streams=args.streams or 1)
    if args.out:
        columns = ("samples", "seed", "estimate", "abs_error", "std_error")
        csv_io.write_csv(args.out, columns, (r.model_dump() for r in rows))
        logger.info(f"Wrote {len(rows)} convergence rows to {args.out}")
    summaries = mc_estimation.summarise_convergence(rows)
    columns = ("samples", "runs", "mean_abs_error", "median_abs_error", "within_3sigma")
    return columns, [s.model_dump() for s in summaries]


def cmd_coverage(args):
    region = _parsed(coverage.CoverageRegion, center=_parsed(Point2D, x=args.center[0], y=args.center[1]),
                     radius=args.radius)
    cells = csv_io.read_cells(args.cells)
    results = coverage.classify_cells(region, cells, args.epsilon)
    rows = [{"id": cell_id, "score": m.score, "membership": m.membership.value}
            for cell_id, m in results]
    return ("id", "score", "membership"), rows


def cmd_ips(args):
    allocation = coverage.partition_ips(args.total, args.cells, args.base)
    payload = allocation.model_dump(mode="json")
    if args.blocks:
        payload["blocks"] = [
            [str(ip) for ip in coverage.cell_block(allocation, i)] for i in range(allocation.cells)
        ]
        payload["reserve"] = [str(ip) for ip in coverage.reserve_block(allocation)]
    return payload


def cmd_fit(args):
    points = csv_io.read_points(args.input)
    line = curve_fit.fit(points, curve_fit.OffsetMethod(args.method))

    if args.emit_line:
        if args.range is None:
            raise InvalidInputError("--emit-line needs --range X1:X2")
        samples = curve_fit.sample_line(line, args.range[0], args.range[1], args.steps)
        csv_io.write_csv(args.emit_line, ("x", "y"), ({"x": x, "y": y} for x, y in samples))
        logger.info(f"Wrote {len(samples)} line points to {args.emit_line}")

    reading = curve_fit.interpret_correlation(line.r)
    return {
        "method": line.method.value,
        "a": line.intercept,
        "b": None if line.vertical_line else line.slope,
        "r": line.r,
        "r2": line.r_squared,
        "se_a": line.se_a,
        "se_b": line.se_b,
        "s": line.s,
        "residual": line.residual,
        "n": line.n,
        "vertical_line": line.vertical_line,
        "strength": reading.strength.value,
        "direction": reading.direction.value,
    }


def _model_payload(model: exp_models.ExpModel) -> Dict[str, Any]:
    return {"kind": model.kind.value, "scale": model.scale, "rate": model.rate}


def cmd_exp_fit(args):
    series = csv_io.read_series(args.input)
    if args.model == "modified":
        if args.capacity is None:
            raise InvalidInputError("--model modified needs --capacity N")
        model = exp_models.fit_modified_growth(series, args.capacity)
    else:
        model = exp_models.fit_growth_decay(series)
    return _model_payload(model)


def cmd_exp_eval(args):
    model = _parsed(exp_models.ExpModel, kind=args.kind, scale=args.scale, rate=args.rate)
    return exp_models.evaluate(model, args.t)


def cmd_exp_curve(args):
    rows = []
    for rate in args.rate:
        model = _parsed(exp_models.ExpModel, kind=args.kind, scale=args.scale, rate=rate)
        for t, value in exp_models.sample_curve(model, args.t1, args.t2, args.steps):
            rows.append({"rate": rate, "t": t, "value": value})
    columns = ("rate", "t", "value")
    if args.out:
        csv_io.write_csv(args.out, columns, rows)
        logger.info(f"Wrote {len(rows)} curve points to {args.out}")
        return {"kind": args.kind, "points": len(rows), "out": args.out}
    return columns, rows


def cmd_exp_classify(args):
    result = exp_models.classify_curve(args.scale, args.rate, args.t, args.p, args.tol)
    return {"classification": result.value}


def _sample(t: float, p: float) -> position_prediction.PositionSample:
    return _parsed(position_prediction.PositionSample, t=t, p=p)


def cmd_predict_midway(args):
    s = position_prediction.predict_midway(_sample(args.t1, args.p1), _sample(args.t2, args.p2))
    return s.model_dump()


def cmd_predict_extreme(args):
    s = position_prediction.predict_extrapolated(_sample(args.t1, args.p1), _sample(args.t2, args.p2))
    return s.model_dump()


def cmd_predict_means(args):
    return position_prediction.am_hm_gm(args.t1, args.t2).model_dump()


def cmd_predict_probe(args):
    result = position_prediction.classify_probe(
        _sample(args.t1, args.p1), _sample(args.t2, args.p2), _sample(args.t3, args.p3), args.tol
    )
    return {"classification": result.value}


def cmd_sim(args):
    events = cell_network.events_from_rows(
        csv_io.read_rows(args.events, ("time", "op", "cell", "node"))
    )
    allocation = coverage.partition_ips(args.ips, args.cells, args.base)
    result = cell_network.run_script(events, allocation, args.cells)
    if args.log:
        csv_io.write_csv(args.log, cell_network.LOG_COLUMNS,
                         (cell_network.log_row(e) for e in result.log))
        logger.info(f"Wrote {len(result.log)} log rows to {args.log}")
    return {
        "events": len(result.log),
        "cells": [cell_network.state_summary(s) for s in result.states],
    }


def cmd_info(args):
    payload = dataclasses.asdict(config)
    payload["project_root"] = str(payload["project_root"])
    payload["version"] = __version__
    payload["rng"] = PINNED_RNG
    payload["issues"] = config.validate()
    return payload


# Output

def _finite(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def _render(result: Any, output: Optional[str]) -> str:
    """JSON for records, CSV for tables, unless ``output`` forces one form."""
    if isinstance(result, tuple):
        columns, rows = result
        if output == "json":
            return json.dumps(_finite(rows))
        buf = io.StringIO()
        csv_io.write_rows(buf, columns, rows)
        return buf.getvalue().rstrip("\n")
    if isinstance(result, dict):
        if output == "csv":
            buf = io.StringIO()
            flat = {k: (json.dumps(v) if isinstance(v, (list, dict)) else v)
                    for k, v in result.items()}
            csv_io.write_rows(buf, list(flat), [flat])
            return buf.getvalue().rstrip("\n")
        return json.dumps(_finite(result))
    if output == "json":
        return json.dumps(_finite({"value": result}))
    return csv_io.format_value(result)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="node-sense",
        allow_abbrev=False,
        description="Coverage estimation, curve fitting and cell simulation for dynamic networks",
    )
    parser.add_argument("--version", action="version",
                        version=f"node-sense {__version__} (rng: {PINNED_RNG})")
    parser.add_argument("--seed", dest="global_seed", type=int, default=None,
                        help="Default 64-bit seed for sampling commands")
    parser.add_argument("--output", choices=["json", "csv"], default=None,
                        help="Force JSON or CSV output")
    parser.add_argument("--quiet", action="store_true", help="Only log errors")
    parser.add_argument("--log-file", default=config.log_file, help="Also log to this file")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # mc
    mc_parser = subparsers.add_parser("mc", allow_abbrev=False, help="Monte Carlo estimation")
    mc_sub = mc_parser.add_subparsers(dest="mc_command", required=True)

    def sampling_flags(p):
        p.add_argument("--samples", type=int, required=True, help="Number of sampled points N")
        p.add_argument("--seed", type=int, default=None, help="64-bit seed")
        p.add_argument("--streams", type=int, default=None, help="Independent sub-streams")

    def function_flags(p):
        p.add_argument("--fn", required=True, help="poly:c0,c1,... or builtin:NAME")
        p.add_argument("--b1", type=float, required=True, help="Domain start")
        p.add_argument("--b2", type=float, required=True, help="Domain end")
        p.add_argument("--height", type=float, required=True, help="Height bound a")

    pi_parser = mc_sub.add_parser("pi", allow_abbrev=False, help="Estimate pi from the unit circle")
    sampling_flags(pi_parser)
    pi_parser.set_defaults(handler=cmd_mc_pi)

    integrate_parser = mc_sub.add_parser("integrate", allow_abbrev=False, help="Area under a bounded function")
    function_flags(integrate_parser)
    sampling_flags(integrate_parser)
    integrate_parser.set_defaults(handler=cmd_mc_integrate)

    nodes_parser = mc_sub.add_parser("nodes", allow_abbrev=False, help="Expected node count in the region")
    nodes_parser.add_argument("--total", type=int, required=True, help="Total nodes N_t")
    function_flags(nodes_parser)
    sampling_flags(nodes_parser)
    nodes_parser.set_defaults(handler=cmd_mc_nodes)

    conv_parser = mc_sub.add_parser("convergence", allow_abbrev=False, help="Pi error as N grows")
    conv_parser.add_argument("--sizes", type=_int_list, required=True, help="Sample sizes, e.g. 1000,10000")
    conv_parser.add_argument("--seeds", type=int, default=20, help="Seeds per size")
    conv_parser.add_argument("--seed", type=int, default=None, help="First seed")
    conv_parser.add_argument("--streams", type=int, default=None, help="Independent sub-streams")
    conv_parser.add_argument("--out", default=None, help="Write per-run rows to this CSV")
    conv_parser.set_defaults(handler=cmd_mc_convergence)

    # coverage / ips
    cov_parser = subparsers.add_parser("coverage", allow_abbrev=False, help="Classify cells against a coverage circle")
    cov_parser.add_argument("--center", type=_pair, required=True, help="Center X,Y")
    cov_parser.add_argument("--radius", type=float, required=True, help="Radius R")
    cov_parser.add_argument("--cells", required=True, help="CSV with header id,x,y")
    cov_parser.add_argument("--epsilon", type=float, default=None, help="Boundary band width")
    cov_parser.set_defaults(handler=cmd_coverage)

    ips_parser = subparsers.add_parser("ips", allow_abbrev=False, help="Split an IP range over cells")
    ips_parser.add_argument("--total", type=int, required=True, help="Available addresses m")
    ips_parser.add_argument("--cells", type=int, required=True, help="Number of cells n")
    ips_parser.add_argument("--base", default=None, help="First address of the range")
    ips_parser.add_argument("--blocks", action="store_true", help="List each cell's addresses")
    ips_parser.set_defaults(handler=cmd_ips)

    # fit
    fit_parser = subparsers.add_parser("fit", allow_abbrev=False, help="Least-squares line fit")
    fit_parser.add_argument("--method", choices=[m.value for m in curve_fit.OffsetMethod],
                            default="vertical", help="Offset method")
    fit_parser.add_argument("--input", required=True, help="CSV with header x,y")
    fit_parser.add_argument("--emit-line", default=None, help="Write sampled line points here")
    fit_parser.add_argument("--range", type=_span, default=None, help="X1:X2 for --emit-line")
    fit_parser.add_argument("--steps", type=int, default=100, help="Points for --emit-line")
    fit_parser.set_defaults(handler=cmd_fit)

    # exp
    exp_parser = subparsers.add_parser("exp", allow_abbrev=False, help="Exponential models")
    exp_sub = exp_parser.add_subparsers(dest="exp_command", required=True)
    kinds = [k.value for k in exp_models.ExpKind]

    efit = exp_sub.add_parser("fit", allow_abbrev=False, help="Fit a model to a t,y series")
    efit.add_argument("--model", choices=["growth-decay", "modified"], required=True)
    efit.add_argument("--input", required=True, help="CSV with header t,y")
    efit.add_argument("--capacity", type=float, default=None, help="Capacity N (modified model)")
    efit.set_defaults(handler=cmd_exp_fit)

    eeval = exp_sub.add_parser("eval", allow_abbrev=False, help="Evaluate a model at t")
    eeval.add_argument("--kind", choices=kinds, required=True)
    eeval.add_argument("--scale", type=float, required=True)
    eeval.add_argument("--rate", type=float, required=True)
    eeval.add_argument("--t", type=float, required=True)
    eeval.set_defaults(handler=cmd_exp_eval)

    ecurve = exp_sub.add_parser("curve", allow_abbrev=False, help="Plot data for one or more rates")
    ecurve.add_argument("--kind", choices=kinds, required=True)
    ecurve.add_argument("--scale", type=float, required=True)
    ecurve.add_argument("--rate", type=_float_list, required=True, help="Rate or comma-separated rates")
    ecurve.add_argument("--t1", type=float, required=True)
    ecurve.add_argument("--t2", type=float, required=True)
    ecurve.add_argument("--steps", type=int, required=True)
    ecurve.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    ecurve.set_defaults(handler=cmd_exp_curve)

    eclass = exp_sub.add_parser("classify", allow_abbrev=False, help="Growth or decay branch for a probe")
    eclass.add_argument("--scale", type=float, required=True, help="Baseline M")
    eclass.add_argument("--rate", type=float, required=True, help="Baseline a")
    eclass.add_argument("--t", type=float, required=True, help="Probe time")
    eclass.add_argument("--p", type=float, required=True, help="Probe position")
    eclass.add_argument("--tol", type=float, default=1e-6, help="Relative tolerance")
    eclass.set_defaults(handler=cmd_exp_classify)

    # predict
    pred_parser = subparsers.add_parser("predict", allow_abbrev=False, help="Position prediction")
    pred_sub = pred_parser.add_subparsers(dest="predict_command", required=True)

    def pair_flags(p):
        for flag in ("--t1", "--p1", "--t2", "--p2"):
            p.add_argument(flag, type=float, required=True)

    midway = pred_sub.add_parser("midway", allow_abbrev=False, help="Position at the midpoint time")
    pair_flags(midway)
    midway.set_defaults(handler=cmd_predict_midway)

    extreme = pred_sub.add_parser("extreme", allow_abbrev=False, help="Position at the next equidistant time")
    pair_flags(extreme)
    extreme.set_defaults(handler=cmd_predict_extreme)

    means = pred_sub.add_parser("means", allow_abbrev=False, help="AM, HM and GM of two instants")
    means.add_argument("--t1", type=float, required=True)
    means.add_argument("--t2", type=float, required=True)
    means.set_defaults(handler=cmd_predict_means)

    probe = pred_sub.add_parser("probe", allow_abbrev=False, help="Growth or decay branch through two samples")
    pair_flags(probe)
    probe.add_argument("--t3", type=float, required=True)
    probe.add_argument("--p3", type=float, required=True)
    probe.add_argument("--tol", type=float, default=1e-6)
    probe.set_defaults(handler=cmd_predict_probe)

    # sim
    sim_parser = subparsers.add_parser("sim", allow_abbrev=False, help="Simulate cell joins and leaves")
    sim_parser.add_argument("--events", required=True, help="CSV with header time,op,cell,node")
    sim_parser.add_argument("--ips", type=int, required=True, help="Available addresses m")
    sim_parser.add_argument("--cells", type=int, required=True, help="Number of cells n")
    sim_parser.add_argument("--base", default=None, help="First address of the range")
    sim_parser.add_argument("--log", default=None, help="Write the per-event log CSV here")
    sim_parser.set_defaults(handler=cmd_sim)

    info_parser = subparsers.add_parser("info", allow_abbrev=False, help="Show resolved configuration")
    info_parser.set_defaults(handler=cmd_info)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging("ERROR" if args.quiet else config.log_level, args.log_file)
    for issue in config.validate():
        logger.warning(f"Configuration: {issue}")
    handler: Callable = args.handler

    try:
        result = handler(args)
    except NodeSenseError as e:
        logger.debug(f"{args.command} failed: {e}")
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return 1
    except ArgumentError as e:
        print(json.dumps({"error": "invalid_argument", "message": str(e)}), file=sys.stderr)
        return 2
    except ValidationError as e:
        logger.debug(f"{args.command} produced an invalid result: {e}")
        print(json.dumps({"error": "invalid_result", "message": _describe(e)}), file=sys.stderr)
        return 1

    print(_render(result, args.output))
    return 0


if __name__ == "__main__":
    sys.exit(main())
