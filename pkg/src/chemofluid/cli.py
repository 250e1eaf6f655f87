"""Command line: ``chemofluid run | check | convergence``.

Exit codes: 0 success, 1 configuration error, 2 solver error (including a
failed convergence study).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import load_config, override
from .errors import ConfigError, DomainError, SimulationError, SolverError, StateCorruptionError
from .output import write_diagnostics_csv, write_snapshot

log = logging.getLogger("chemofluid")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2


def _setup_logging(verbose: bool, logfile: str | None = None):
    root = logging.getLogger("chemofluid")
    root.setLevel(logging.INFO)
    for h in list(root.handlers):
        root.removeHandler(h)
        h.close()
    h = logging.StreamHandler(sys.stderr)
    h.setLevel(logging.INFO if verbose else logging.WARNING)
    h.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    root.addHandler(h)
    if logfile:
        fh = logging.FileHandler(logfile, mode="w", encoding="utf-8")
        fh.setFormatter(logging.Formatter("%(message)s"))
        root.addHandler(fh)


def _load(path, t_end=None):
    config = load_config(path)
    if t_end is not None:
        if not t_end > 0:
            raise ConfigError("--t-end must be positive")
        config = override(config, t_end=t_end)
    return config


def cmd_run(args) -> int:
    from .simulation import run

    os.makedirs(args.out, exist_ok=True)
    _setup_logging(args.verbose, os.path.join(args.out, "run.log"))
    if args.seed is not None:
        log.info("--seed %s accepted and ignored: the solver is deterministic", args.seed)
    config = _load(args.config, args.t_end)
    snaps = []

    def on_output(state, rec):
        if config.snapshots:
            path = os.path.join(args.out, f"snapshot_{len(snaps):04d}.vtk")
            write_snapshot(state, path)
            snaps.append(path)

    try:
        summary = run(config, on_output=on_output)
    except SimulationError as exc:
        write_snapshot(exc.state, os.path.join(args.out, "failed_state.vtk"))
        raise
    csv_path = os.path.join(args.out, "diagnostics.csv")
    write_diagnostics_csv(summary.series, csv_path)
    if config.plots:
        from .plotting import plot_diagnostics, plot_fields

        plot_diagnostics(summary.series, os.path.join(args.out, "diagnostics.png"))
        plot_fields(summary.state, os.path.join(args.out, "fields.png"))
    last = summary.series[-1]
    print(
        f"t={last.t:.6g} steps={summary.state.step_count} reason={summary.reason} "
        f"mass_n={last.mass_n:.10g} max_v={last.max_v:.6g} div_u_inf={last.div_u_inf:.3g} "
        f"wall={summary.wall_time:.2f}s"
    )
    print(f"diagnostics: {csv_path}")
    return EXIT_OK


def cmd_check(args) -> int:
    from .simulation import check_smallness

    _setup_logging(args.verbose)
    config = _load(args.config)
    r = check_smallness(config)
    print(f"K = max v0       : {r.K:.6g}")
    print(f"mass of n0       : {r.mass_n0:.6g} (threshold {r.delta_n:.6g}) -> {'ok' if r.passes_n_mass else 'exceeds'}")
    print(f"mass of v0       : {r.mass_v0:.6g} (threshold {r.delta_v:.6g}) -> {'ok' if r.passes_v_mass else 'exceeds'}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    from .oracle import convergence_order

    _setup_logging(args.verbose)
    try:
        report = convergence_order(args.problem, args.levels, args.norm)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print("level,error")
    for lv, err in zip(report.levels, report.errors):
        print(f"{lv:.17g},{err:.17g}")
    print(f"order={report.order:.4f} target={report.target} pass={report.passed} {report.diagnostic}".rstrip())
    if args.out:
        from .plotting import plot_convergence

        os.makedirs(args.out, exist_ok=True)
        plot_convergence(report, os.path.join(args.out, f"convergence_{args.problem}.png"))
    return EXIT_OK if report.passed else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chemofluid", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress and defaults to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a configuration and write diagnostics")
    r.add_argument("config")
    r.add_argument("--t-end", type=float, default=None, help="override [time] t_end")
    r.add_argument("--out", default="out", help="output directory (default: out)")
    r.add_argument("--seed", type=int, default=None, help="accepted for compatibility; ignored")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="report initial masses against the smallness thresholds")
    c.add_argument("config")
    c.set_defaults(func=cmd_check)

    v = sub.add_parser("convergence", help="run a named convergence study")
    v.add_argument("problem", choices=("uniform", "heat", "reference"))
    v.add_argument("--levels", type=float, nargs="+", default=None,
                   help="time steps (uniform, reference) or cells per side (heat)")
    v.add_argument("--norm", choices=("Linf", "L2"), default="Linf")
    v.add_argument("--out", default=None, help="directory for the error plot")
    v.set_defaults(func=cmd_convergence)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "convergence" and args.problem == "heat" and args.levels:
        args.levels = [int(x) for x in args.levels]
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, SolverError, StateCorruptionError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
