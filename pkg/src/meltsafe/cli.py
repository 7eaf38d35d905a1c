"""Command-line interface.

Exit codes: 0 clean run, 2 safety violation detected, 3 configuration or
assumption failure, 4 numerical failure.
"""

import argparse
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_CONFIG = 3
EXIT_NUMERICAL = 4


def _print_report(report, file=None):
    file = file if file is not None else sys.stdout
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        detail = f"  ({c.detail})" if c.detail else ""
        print(f"  {status}  {c.name}  margin={c.margin:.6g}{detail}", file=file)


def _run_one(path: str, out_dir: str | None, decimate: int | None) -> int:
    from .config import load_config_file
    from .errors import AssumptionError, ConfigError, MeltsafeError
    from .scenario import run_scenario, write_report_json, write_trajectory_csv

    try:
        cfg = load_config_file(path)
    except AssumptionError as e:
        print(f"{path}: assumption failure", file=sys.stderr)
        _print_report(e.report, file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, FileNotFoundError) as e:
        print(f"{path}: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if decimate is not None:
        cfg = dataclasses.replace(cfg, decimate=decimate)
    out = Path(out_dir) if out_dir else Path(cfg.name + "_out")
    out.mkdir(parents=True, exist_ok=True)

    try:
        records, report = run_scenario(cfg)
        code = EXIT_VIOLATION if report.violations else EXIT_OK
    except MeltsafeError as e:
        records = getattr(e, "partial_records", [])
        print(f"{path}: numerical failure: {e}", file=sys.stderr)
        code = EXIT_NUMERICAL
        report = None

    write_trajectory_csv(records, out / "trajectory.csv")
    if report is not None:
        write_report_json(report, out / "report.json")
        n_viol = len(report.violations)
        print(f"{cfg.name}: {len(records)} rows, {n_viol} violations, "
              f"final s = {report.final.get('s'):.6g} m -> {out}")
    return code


def cmd_simulate(args) -> int:
    if args.jobs > 1 and len(args.config) > 1:
        codes = []
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = []
            for path in args.config:
                sub = str(Path(args.out) / Path(path).stem) if args.out else None
                futures.append(pool.submit(_run_one, path, sub, args.decimate))
            codes = [f.result() for f in futures]
        return max(codes)
    codes = []
    for path in args.config:
        sub = args.out
        if args.out and len(args.config) > 1:
            sub = str(Path(args.out) / Path(path).stem)
        codes.append(_run_one(path, sub, args.decimate))
    return max(codes)


def cmd_validate(args) -> int:
    from .config import load_config_file
    from .errors import AssumptionError, ConfigError

    try:
        cfg = load_config_file(args.config)
    except AssumptionError as e:
        print("assumptions: FAIL")
        _print_report(e.report)
        return EXIT_CONFIG
    except (ConfigError, FileNotFoundError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print("assumptions:")
    _print_report(cfg.assumption_report)
    print("gain conditions:")
    _print_report(cfg.gain_report)
    return EXIT_OK


def cmd_oracle_traveling_wave(args) -> int:
    from .core import DerivedConstants, Grid
    from .solver import (
        SolverConfig,
        TravelingWave,
        simulate,
        traveling_wave_flux,
        traveling_wave_state,
    )

    consts = DerivedConstants(alpha=args.alpha, beta=args.beta, gamma=1.0 / args.beta)
    tw = TravelingWave(v=args.v, s0=args.s0)
    print(f"{'n':>6} {'max|s - s_exact|':>18} {'final error':>14}")
    prev = None
    code = EXIT_OK
    for level in range(args.refine + 1):
        n = args.n * 2 ** level
        grid = Grid(n)
        cfg = SolverConfig(grid=grid, safety_factor=args.cfl, scheme="explicit")
        init = traveling_wave_state(tw, consts, args.k, grid, 0.0)
        flux = traveling_wave_flux(tw, consts, args.k)
        traj = simulate(init, flux, args.horizon, cfg, consts, args.k,
                        record_dt=args.horizon / 200.0)
        err = np.abs(traj.s - (tw.s0 + tw.v * traj.t))
        print(f"{n:>6} {err.max():>18.6e} {err[-1]:>14.6e}")
        if prev is not None and err.max() >= prev:
            print("warning: error did not decrease under refinement", file=sys.stderr)
            code = EXIT_NUMERICAL
        prev = err.max()
    return code


def cmd_serve(args) -> int:
    import asyncio

    from .config import load_config_file
    from .errors import AssumptionError, ConfigError
    from .service import serve_forever

    try:
        cfg = load_config_file(args.config)
    except AssumptionError as e:
        print("assumption failure:", file=sys.stderr)
        _print_report(e.report, file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, FileNotFoundError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    static = args.static
    if static is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        static = bundled if bundled.is_dir() else None
    print(f"serving on ws://{args.host}:{args.port} "
          f"(console: http://{args.host}:{args.port}/, "
          f"tcp fallback: {args.host}:{args.port + 1})")
    try:
        asyncio.run(serve_forever(cfg, args.port, timescale=args.timescale,
                                  host=args.host, static_root=static))
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meltsafe",
        description="Moving-boundary melt simulation with safety-filtered heat actuation")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run scenario configs to CSV + JSON report")
    sim.add_argument("--config", action="append", required=True,
                     help="scenario file; repeat for a batch")
    sim.add_argument("--out", default=None, help="output directory")
    sim.add_argument("--decimate", type=int, default=None,
                     help="record every k-th step (overrides config)")
    sim.add_argument("--jobs", type=int, default=1, help="parallel workers for batches")
    sim.set_defaults(func=cmd_simulate)

    val = sub.add_parser("validate", help="check assumptions and gain conditions only")
    val.add_argument("--config", required=True)
    val.set_defaults(func=cmd_validate)

    orc = sub.add_parser("oracle", help="solver accuracy oracles")
    orcsub = orc.add_subparsers(dest="oracle", required=True)
    tw = orcsub.add_parser("traveling-wave",
                           help="exact-vs-numeric interface error table")
    tw.add_argument("--v", type=float, required=True, help="front speed")
    tw.add_argument("--s0", type=float, required=True, help="initial interface")
    tw.add_argument("--alpha", type=float, default=1.0)
    tw.add_argument("--beta", type=float, default=1.0)
    tw.add_argument("--k", type=float, default=1.0)
    tw.add_argument("--n", type=int, default=50, help="coarsest grid")
    tw.add_argument("--cfl", type=float, default=0.4)
    tw.add_argument("--horizon", type=float, default=1.0)
    tw.add_argument("--refine", type=int, default=2, help="extra doubling levels")
    tw.set_defaults(func=cmd_oracle_traveling_wave)

    srv = sub.add_parser("serve", help="live operator session over WebSocket/TCP")
    srv.add_argument("--config", required=True)
    srv.add_argument("--port", type=int, default=8700)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--timescale", type=float, default=None,
                     help="simulation seconds per wall second (overrides config)")
    srv.add_argument("--static", default=None, help="console asset directory")
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
