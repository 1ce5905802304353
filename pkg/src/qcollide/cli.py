"""Command-line driver.

    qcollide run          single trajectory (n, D, dD, C_S, C_R, pop_S)
    qcollide sweep        N over a 1-D or 2-D grid
    qcollide threshold    strength threshold at each T of axis1
    qcollide oracle-check compare the iterative engine with the full-chain oracle

Exit codes: 0 success, 2 config error, 3 integrity error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import sys

from .csvio import export_csv, render_csv
from .errors import ConfigError, DomainError, IntegrityError
from .measures import blp_measure
from .models import full_chain_oracle, run_model
from .sweep import parse_config, run_sweep, threshold_table, trace_threshold_curve

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRITY, EXIT_IO = 0, 2, 3, 4
ORACLE_TOL = 1e-10


def _overrides(pairs):
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _load_spec(args):
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
    return parse_config(text, _overrides(args.set))


def _emit(result, out):
    if out:
        export_csv(result, out)
    else:
        sys.stdout.write(render_csv(result))


def cmd_run(args):
    spec = _load_spec(args)
    if spec.axes:
        raise ConfigError("run takes a single parameter point; remove axis1/axis2", key="axis1")
    traj = run_model(spec.config_at())
    nm = blp_measure(traj)
    _emit(traj, args.out)
    print(f"N = {nm.N:.17g}  converged = {traj.converged}  steps = {traj.n_steps_run}",
          file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args):
    spec = _load_spec(args)
    result = run_sweep(spec, jobs=args.jobs)
    _emit(result, args.out)
    flagged = sum(1 for f in result.column("flag") if f)
    print(f"{len(result.rows)} grid points, {flagged} flagged", file=sys.stderr)
    return EXIT_OK


def cmd_threshold(args):
    spec = _load_spec(args)
    points = trace_threshold_curve(spec, jobs=args.jobs)
    _emit(threshold_table(spec, points), args.out)
    unresolved = sum(1 for p in points if not p.resolved)
    print(f"{len(points)} temperatures, {unresolved} unresolved", file=sys.stderr)
    return EXIT_OK


def cmd_oracle_check(args):
    spec = _load_spec(args)
    if spec.axes:
        raise ConfigError("oracle-check takes a single parameter point", key="axis1")
    cfg = spec.config_at()
    n = spec.oracle_steps
    ref = full_chain_oracle(cfg, n)
    got = run_model(cfg)
    worst = 0.0
    for field in ("D", "C_S", "C_R", "pop_S"):
        a = ref.column(field)
        b = got.column(field)[: len(a)]
        if len(b) < len(a):
            raise IntegrityError(f"engine stopped after {len(b) - 1} steps, oracle ran {n}")
        dev = float(abs(a - b).max())
        worst = max(worst, dev)
        print(f"{field:6s} max deviation {dev:.3e}")
    ok = worst <= ORACLE_TOL
    print(f"{'PASS' if ok else 'FAIL'}: {n} collisions, tolerance {ORACLE_TOL:g}")
    return EXIT_OK if ok else EXIT_INTEGRITY


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    common.add_argument("--out", help="CSV destination (default: stdout)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for grids")

    parser = argparse.ArgumentParser(prog="qcollide", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, text in (
        ("run", cmd_run, "simulate one trajectory"),
        ("sweep", cmd_sweep, "non-Markovianity over a parameter grid"),
        ("threshold", cmd_threshold, "trace the activation threshold versus T"),
        ("oracle-check", cmd_oracle_check, "validate against the full-chain oracle"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
