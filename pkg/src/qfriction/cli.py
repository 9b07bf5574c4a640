"""Command-line front end.

Exit status: 0 success, 1 failed validation check, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .checks import run_checks
from .config import (
    SWEEP_PARAMS,
    ConfigError,
    RunConfig,
    SweepSpec,
    default_config,
    load_config,
    write_reports,
    write_table,
)
from .forces import (
    LORENTZ_GAMMA,
    LORENTZ_LAMBDA,
    ForceReport,
    MotionSpec,
    eta_curve,
    force_cavity,
    lorentz_eta,
    single_plane_f_int,
    single_plane_f_rad,
)
from .quadrature import QuadratureError
from .units import CavityGeometry, ReflectionModel, SingularResponseError, ValidationError

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="TOML run configuration")
    parser.add_argument("--out", default=default, help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default=default)
    parser.add_argument("--rel-tol", type=float, default=default)
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS if suppress else 0,
                        help="seed for randomized checks in validate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfriction", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("single", parents=[common], help="particle above a single plane")
    sub.add_parser("cavity", parents=[common], help="particle inside a two-plate cavity")
    sub.add_parser("fig3", parents=[common], help="eta_rad across the cavity vs the Lorentzian")
    sw = sub.add_parser("sweep", parents=[common], help="force reports along one parameter")
    sw.add_argument("--param", help=f"one of {', '.join(SWEEP_PARAMS)}")
    sw.add_argument("--from", dest="start", type=float)
    sw.add_argument("--to", dest="stop", type=float)
    sw.add_argument("--steps", type=int)
    sw.add_argument("--spacing", choices=("lin", "log"))
    val = sub.add_parser("validate", parents=[common], help="run the invariant suite")
    val.add_argument("--inject-fault", choices=("parity",), help=argparse.SUPPRESS)
    return parser


def _load(args, kind) -> RunConfig:
    cfg = load_config(args.config) if args.config else default_config(kind)
    if args.rel_tol is not None:
        cfg = cfg.with_(rel_tol=args.rel_tol)
        cfg.quad_spec()
    if args.format:
        cfg = cfg.with_(output_format=args.format)
    if args.out:
        cfg = cfg.with_(output_path=args.out)
    return cfg


@contextlib.contextmanager
def _output(cfg: RunConfig):
    if cfg.output_path:
        with open(cfg.output_path, "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _report(cfg: RunConfig) -> ForceReport:
    return force_cavity(cfg.geometry, cfg.particle, cfg.motion, spec=cfg.quad_spec())


def cmd_single(cfg: RunConfig) -> int:
    geom = cfg.geometry
    if not geom.single_plane:
        raise ConfigError("single needs geometry.single_plane = true")
    rep = _report(cfg)
    with _output(cfg) as out:
        write_reports([rep], cfg.output_format, out)
    p, v = cfg.particle, cfg.motion.v
    ref_int = single_plane_f_int(geom.z_a, geom.plate1.rho, p.dissipation, p.alpha0, v)
    ref_rad = single_plane_f_rad(geom.z_a, geom.plate1.rho, p.alpha0, v)
    print(f"closed form: f_int = {ref_int:.12g}, f_rad = {ref_rad:.12g}", file=sys.stderr)
    if rep.f_rad:
        print(f"sigma term {rep.rad_sigma_term:.12g}, spin term {rep.rad_spin_term:.12g}, "
              f"phi = {rep.spin_suppression:.6g}", file=sys.stderr)
    return EXIT_OK


def cmd_cavity(cfg: RunConfig) -> int:
    if cfg.geometry.single_plane:
        raise ConfigError("cavity needs a two-plate geometry (single_plane = false)")
    rep = _report(cfg)
    with _output(cfg) as out:
        write_reports([rep], cfg.output_format, out)
    return EXIT_OK


def cmd_fig3(cfg: RunConfig) -> int:
    geom = cfg.geometry
    if not geom.identical_plates:
        raise ConfigError("fig3 needs a cavity with identical plates")
    curve = eta_curve(geom, cfg.particle, cfg.motion, cfg.n_points, spec=cfg.quad_spec(),
                      guard=0.1)
    rows = [{"z_over_w": x, "eta_rad": eta,
             "lorentz_model": float(lorentz_eta(x, LORENTZ_LAMBDA, LORENTZ_GAMMA))}
            for x, eta in curve.points]
    with _output(cfg) as out:
        write_table(("z_over_w", "eta_rad", "lorentz_model"), rows, cfg.output_format, out)
    return EXIT_OK


def _swept(cfg: RunConfig, param: str, value: float) -> RunConfig:
    g = cfg.geometry
    if param == "v":
        return cfg.with_(motion=MotionSpec(value))
    if param in ("w", "rho2") and g.single_plane:
        raise ConfigError(f"cannot sweep {param} for a single plane")
    if param == "z_a":
        return cfg.with_(geometry=g.at(value))
    if param == "w":
        return cfg.with_(geometry=replace(g, half_width=value))
    if param == "rho1":
        return cfg.with_(geometry=replace(g, plate1=replace(g.plate1, rho=value)))
    if param == "rho2":
        return cfg.with_(geometry=replace(g, plate2=replace(g.plate2, rho=value)))
    if param == "r0":
        plates = {"plate1": ReflectionModel(value, g.plate1.rho)}
        if not g.single_plane:
            plates["plate2"] = ReflectionModel(value, g.plate2.rho)
        return cfg.with_(geometry=replace(g, **plates))
    raise ConfigError(f"unknown sweep parameter {param!r}")


def _sweep_point(cfg: RunConfig) -> ForceReport:
    return _report(cfg)


def cmd_sweep(cfg: RunConfig, workers: int | None = None) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep needs --param/--from/--to/--steps or a [sweep] section")
    configs = [_swept(cfg, cfg.sweep.param, x) for x in cfg.sweep.values()]
    if len(configs) < 4 or workers == 1:
        reports = [_sweep_point(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_sweep_point, configs))
    with _output(cfg) as out:
        write_reports(reports, cfg.output_format, out)
    return EXIT_OK


def cmd_validate(cfg: RunConfig, seed: int = 0, inject_fault: str | None = None) -> int:
    results = run_checks(cfg.geometry, cfg.particle, spec=cfg.quad_spec(), seed=seed,
                         inject_fault=inject_fault)
    with _output(cfg) as out:
        for r in results:
            print(r.line(), file=out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def _sweep_from_args(cfg, args):
    given = [args.param, args.start, args.stop, args.steps]
    if all(x is None for x in given) and args.spacing is None:
        return cfg
    base = cfg.sweep
    param = args.param or (base.param if base else None)
    start = args.start if args.start is not None else (base.start if base else None)
    stop = args.stop if args.stop is not None else (base.stop if base else None)
    steps = args.steps if args.steps is not None else (base.steps if base else None)
    spacing = args.spacing or (base.spacing if base else "lin")
    if None in (param, start, stop, steps):
        raise ConfigError("sweep needs --param, --from, --to and --steps")
    return cfg.with_(sweep=SweepSpec(param, start, stop, steps, spacing))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args, "single" if args.command == "single" else "cavity")
        if args.command == "single":
            return cmd_single(cfg)
        if args.command == "cavity":
            return cmd_cavity(cfg)
        if args.command == "fig3":
            return cmd_fig3(cfg)
        if args.command == "sweep":
            return cmd_sweep(_sweep_from_args(cfg, args))
        return cmd_validate(cfg, args.seed, args.inject_fault)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, SingularResponseError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
