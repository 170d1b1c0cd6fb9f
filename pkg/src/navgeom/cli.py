"""Command line interface: ``navgeom <group> <command> ...``.

Exit status is 0 on success, 1 when a verification check fails or a
computation is refused (outside the domain, not admissible, ...), and 2 for
usage, parse, validation and I/O errors.
"""

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import fields as fl
from .curvature import curvature_profile, linear_mean_curvature, locate_zero, nonlinear_mean_curvature
from .errors import IoError, NavGeomError, ParseError, ValidationError
from .geodesics import GeodesicPath, distance_tube, geodesic, geodesic_fan, navigation_geodesic
from .metric import eval_metric
from .report import csv_text, polyline_rows, suite_rows, to_json, write_csv, write_json, write_polylines
from .scenarios import build, builtin_scenarios, emit_scenario, get_builtin, load_scenario, run_suite, scenario_to_dict
from .volume import bh_density, ht_density

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _vector(text):
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from exc


def _resolve(name):
    path = Path(name)
    if path.suffix in (".yaml", ".yml") or path.exists():
        try:
            text = path.read_text()
        except OSError as exc:
            raise IoError(f"cannot read {name}: {exc.strerror or exc}") from exc
        return load_scenario(text)
    return get_builtin(name)


def _function(setup, name):
    if name is None:
        if not setup.functions:
            raise ValidationError("function", "scenario declares no functions")
        return next(iter(setup.functions.values()))
    if name in setup.functions:
        return setup.functions[name]
    from .scenarios import parse_function

    return parse_function(name, setup.scenario.dim)


def _emit(args, payload, text):
    if args.json:
        print(to_json(payload))
    else:
        print(text)


# -- handlers ---------------------------------------------------------------


def cmd_scenario(args):
    if args.action == "list":
        items = [{"name": s.name, "dim": s.dim, "wind": s.wind, "description": s.description} for s in builtin_scenarios()]
        _emit(args, items, "\n".join(f"{i['name']:20s} n={i['dim']}  {i['wind']:28s} {i['description']}" for i in items))
        return EXIT_OK
    if not args.name:
        raise ValidationError("name", "scenario name or file required")
    s = _resolve(args.name)
    setup = build(s)
    wc = setup.metric.wind_class
    info = scenario_to_dict(s)
    info["wind_class"] = {"kind": wc.kind.value, "witness_min": wc.witness_min, "witness_max": wc.witness_max}
    if args.action == "validate":
        _emit(args, {"valid": True, **info}, f"{s.name}: valid ({wc.kind.value} wind, sup F(W) = {wc.witness_max:.6g})")
    else:
        _emit(args, info, emit_scenario(s).rstrip() + f"\n# wind class: {wc.kind.value}")
    return EXIT_OK


def cmd_eval(args):
    setup = build(_resolve(args.scenario))
    p = args.point
    if args.quantity == "metric":
        if args.vector is None:
            raise ValidationError("vector", "--vector is required")
        val = float(eval_metric(setup.metric, p, args.vector))
        _emit(args, {"value": val}, "%.17g" % val)
    elif args.quantity == "gradient":
        f = _function(setup, args.function)
        val = fl.gradient_field(setup.metric, f, p)
        _emit(args, {"gradient": val}, " ".join("%.17g" % x for x in val))
    else:
        f = _function(setup, args.function)
        val = float(fl.laplacian(setup.metric, setup.volume, f, p))
        _emit(args, {"laplacian": val}, "%.17g" % val)
    return EXIT_OK


def cmd_curvature(args):
    setup = build(_resolve(args.scenario))
    if args.kind == "nonlinear":
        f = _function(setup, args.function)
        val = float(nonlinear_mean_curvature(setup.metric, setup.volume, f, args.point))
        _emit(args, {"mean_curvature": val}, "%.17g" % val)
    elif args.kind == "linear":
        if not setup.immersions:
            raise ValidationError("immersion", "scenario declares no immersions")
        spec, imm = setup.immersions[args.immersion]
        x = imm(np.array([args.param]))
        frame = imm.frame(np.array([args.param]))
        if args.normal is not None:
            nrm = args.normal
        elif setup.scenario.dim == 2:
            t = frame[:, 0]
            nrm = np.array([-t[1], t[0]])
            if spec.startswith("circle"):
                nrm = nrm * np.sign(nrm @ x)
        else:
            raise ValidationError("normal", "--normal is required for n > 2")
        nrm = nrm / setup.base.norm(x, nrm)
        lm = linear_mean_curvature(setup.metric, imm, [args.param], nrm)
        _emit(args, {"H": lm.H, "Pi_h": lm.Pi_h, "B": lm.B}, f"H = {lm.H:.17g}  (Pi_h = {lm.Pi_h:.17g}, B = {lm.B:.17g})")
    else:
        f = _function(setup, args.function)
        radii = np.linspace(args.rmin, args.rmax, args.count)
        vals = curvature_profile(setup.metric, setup.volume, f, radii)
        zero = locate_zero(radii, vals)
        rows = [[float(r), float(v)] for r, v in zip(radii, vals)]
        if args.out:
            write_csv(["r", "mean_curvature"], rows, args.out)
        _emit(args, {"radii": radii, "values": vals, "zero": zero},
              csv_text(["r", "mean_curvature"], rows).rstrip() + (f"\n# zero near r = {zero:.12g}" if zero is not None else ""))
    return EXIT_OK


def cmd_geodesic(args):
    setup = build(_resolve(args.scenario))
    v = args.vector
    if args.unit:
        v = v / float(setup.metric.norm(args.point, v))
    if args.kind == "direct":
        path = geodesic(setup.metric, args.point, v, T=args.time, step=args.step, samples=args.samples)
    else:
        path = navigation_geodesic(setup.metric, args.point, v, T=args.time, step=args.step, samples=args.samples)
    if args.out:
        write_polylines([path], args.out)
    rows = polyline_rows([path])
    dim = len(args.point)
    _emit(args, {"t": path.t, "points": path.points, "velocities": path.velocities, "integrator": path.integrator},
          csv_text(["path", "t"] + [f"x{i}" for i in range(dim)], rows).rstrip())
    return EXIT_OK


def cmd_volume(args):
    setup = build(_resolve(args.scenario))
    target = setup.base if args.base else setup.metric
    if args.kind == "bh":
        val = float(bh_density(target, args.point))
        _emit(args, {"density": val}, "%.17g" % val)
    else:
        val, se = ht_density(target, args.point, samples=args.samples, seed=args.seed, return_error=True)
        _emit(args, {"density": float(val), "standard_error": float(se)}, f"{float(val):.17g} +- {float(se):.3g}")
    return EXIT_OK


def cmd_verify(args):
    if args.scenario in (None, "all"):
        targets = "all"
    else:
        targets = [_resolve(args.scenario)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = run_suite(targets, check_filter=args.filter, seed=args.seed, tol=args.tol)
    if args.out:
        if args.out.endswith(".csv"):
            write_csv(*suite_rows(report), args.out)
        else:
            write_json(report.as_dict(), args.out)
    lines = []
    for r in report.records:
        tag = "INFO" if r.informational else ("PASS" if r.passed else "FAIL")
        lines.append(f"{tag} {r.scenario:18s} {r.check_id:50s} measured={r.measured:.6g} expected={r.expected:.6g} tol={r.tolerance:.1e}")
    summ = report.summary
    lines.append(f"{summ['passed']}/{summ['total']} checks passed, {summ['informational']} informational")
    _emit(args, report.as_dict(), "\n".join(lines))
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_emit(args):
    s = _resolve(args.name)
    if args.kind == "scenario":
        text = emit_scenario(s)
        if args.out:
            try:
                Path(args.out).write_text(text)
            except OSError as exc:
                raise IoError(f"cannot write {args.out}: {exc.strerror or exc}") from exc
        else:
            sys.stdout.write(text)
        return EXIT_OK
    setup = build(s)
    if args.kind == "fan":
        point = args.point if args.point is not None else np.array(s.probe_point or (0.0,) * s.dim)
        paths = geodesic_fan(setup.metric, point, count=args.count, T=args.time, step=args.step)
    else:
        f = _function(setup, args.function)
        level = args.level if args.level is not None else s.levels[0]
        rays = distance_tube(setup.metric, f, level, np.linspace(0.0, args.time, 11), fiber_samples=args.count, seed=args.seed)
        paths = [GeodesicPath(r.t, r.points, r.velocities, "tube", args.step) for r in rays]
    if args.out:
        write_polylines(paths, args.out)
        print(f"wrote {len(paths)} polylines to {args.out}")
    else:
        dim = s.dim
        print(csv_text(["path", "t"] + [f"x{i}" for i in range(dim)], polyline_rows(paths)).rstrip())
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _default_seed():
    raw = os.environ.get("NAVGEOM_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine readable output")

    parser = argparse.ArgumentParser(prog="navgeom", description="Zermelo navigation geometry toolkit")
    parser.add_argument("--version", action="version", version=f"navgeom {__version__}")
    sub = parser.add_subparsers(dest="group", required=True)

    sc = sub.add_parser("scenario", parents=[common], help="list, show or validate scenarios")
    sc.add_argument("action", choices=["list", "show", "validate"])
    sc.add_argument("name", nargs="?", help="builtin name or YAML file")
    sc.set_defaults(func=cmd_scenario)

    ev = sub.add_parser("eval", parents=[common], help="evaluate metric, gradient or Laplacian")
    ev.add_argument("quantity", choices=["metric", "gradient", "laplacian"])
    ev.add_argument("scenario")
    ev.add_argument("--point", type=_vector, required=True, help="e.g. --point=0.2,0.1")
    ev.add_argument("--vector", type=_vector)
    ev.add_argument("--function")
    ev.set_defaults(func=cmd_eval)

    cu = sub.add_parser("curvature", parents=[common], help="mean curvatures and profiles")
    cu.add_argument("kind", choices=["nonlinear", "linear", "profile"])
    cu.add_argument("scenario")
    cu.add_argument("--point", type=_vector)
    cu.add_argument("--function")
    cu.add_argument("--immersion", type=int, default=0)
    cu.add_argument("--param", type=float, default=0.0)
    cu.add_argument("--normal", type=_vector)
    cu.add_argument("--rmin", type=float, default=0.1)
    cu.add_argument("--rmax", type=float, default=0.8)
    cu.add_argument("--count", type=int, default=8)
    cu.add_argument("--out")
    cu.set_defaults(func=cmd_curvature)

    ge = sub.add_parser("geodesic", parents=[common], help="integrate geodesics")
    ge.add_argument("kind", choices=["direct", "navigation"])
    ge.add_argument("scenario")
    ge.add_argument("--point", type=_vector, required=True)
    ge.add_argument("--vector", type=_vector, required=True)
    ge.add_argument("--unit", action="store_true", help="rescale the vector to unit speed")
    ge.add_argument("--time", type=float, default=1.0)
    ge.add_argument("--step", type=float, default=1e-2)
    ge.add_argument("--samples", type=int, default=10)
    ge.add_argument("--out", help="polyline CSV file")
    ge.set_defaults(func=cmd_geodesic)

    vo = sub.add_parser("volume", parents=[common], help="volume densities")
    vo.add_argument("kind", choices=["bh", "ht"])
    vo.add_argument("scenario")
    vo.add_argument("--point", type=_vector, required=True)
    vo.add_argument("--base", action="store_true", help="use the base metric instead of the Zermelo metric")
    vo.add_argument("--samples", type=int, default=200_000)
    vo.add_argument("--seed", type=int, default=_default_seed())
    vo.set_defaults(func=cmd_volume)

    ve = sub.add_parser("verify", parents=[common], help="run the verification suite")
    ve.add_argument("scenario", nargs="?", default="all")
    ve.add_argument("--filter", help="keep checks whose id contains this text")
    ve.add_argument("--seed", type=int, default=_default_seed())
    ve.add_argument("--tol", type=float, help="override every tolerance")
    ve.add_argument("--out", help="write the report (.json or .csv)")
    ve.set_defaults(func=cmd_verify)

    em = sub.add_parser("emit", parents=[common], help="write a scenario, geodesic fan or distance tube")
    em.add_argument("kind", choices=["scenario", "fan", "tube"])
    em.add_argument("name")
    em.add_argument("--out")
    em.add_argument("--point", type=_vector)
    em.add_argument("--count", type=int, default=8)
    em.add_argument("--time", type=float, default=1.0)
    em.add_argument("--step", type=float, default=1e-2)
    em.add_argument("--function")
    em.add_argument("--level", type=float)
    em.add_argument("--seed", type=int, default=_default_seed())
    em.set_defaults(func=cmd_emit)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "point", None) is None and args.group == "curvature" and args.kind == "nonlinear":
        parser.error("--point is required")
    try:
        return args.func(args)
    except (ParseError, ValidationError, IoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NavGeomError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
