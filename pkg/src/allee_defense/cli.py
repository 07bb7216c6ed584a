"""Command-line front end.

Structured reports go to stdout as JSON, bulk numerics as CSV (stdout or
``--output``). Exit status: 0 success, 1 bad input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path

from .basin import bistability_report, compute_basin, write_basin_csv
from .bifurcation import (
    E5Vanished,
    NoSignChange,
    detect_stability_changes,
    diagram_export,
    fold_points,
    hopf_point,
    sweep,
    transcritical_point,
    transcritical_rootfind,
)
from .config import ConfigError, GridSpec, RunConfig, parse_config
from .dynamics import IntegrationError, integrate, classify_attractor, write_trajectory_csv
from .equilibria import all_equilibria
from .model import allee_regime
from .stability import MissingEquilibrium, classify

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2
COMMANDS = ("equilibria", "stability", "simulate", "sweep", "critical", "basin")


class NumericalFailure(RuntimeError):
    pass


def _json(obj, out) -> None:
    json.dump(obj, out, indent=2, allow_nan=False)
    out.write("\n")


def _cp_json(cp) -> dict:
    return {"kind": cp.kind.value, "param": cp.param_name, "value": cp.value, "method": cp.method.value}


def _attractor_json(a) -> dict:
    d = {"label": a.label}
    if hasattr(a, "state"):
        d["state"] = list(a.state)
    if hasattr(a, "period_estimate"):
        d.update(N_min=a.N_min, N_max=a.N_max, P_min=a.P_min, P_max=a.P_max,
                 period_estimate=a.period_estimate)
    if hasattr(a, "reason"):
        d["reason"] = a.reason
    return d


def cmd_equilibria(cfg: RunConfig, out, args) -> None:
    rep = all_equilibria(cfg.params)
    _json({
        "params": cfg.params.as_dict(),
        "regime": allee_regime(cfg.params).value,
        "D1": rep.D1,
        "D2": rep.D2,
        "equilibria": [{"label": e.label, "kind": e.kind.value, "N": e.N, "P": e.P} for e in rep.equilibria],
        "notes": rep.notes,
    }, out)


def cmd_stability(cfg: RunConfig, out, args) -> None:
    reports = []
    for e in all_equilibria(cfg.params).equilibria:
        s = classify(cfg.params, e)
        reports.append({
            "label": e.label,
            "N": e.N,
            "P": e.P,
            "eigenvalues": [[s.eigen.lambda1.real, s.eigen.lambda1.imag],
                            [s.eigen.lambda2.real, s.eigen.lambda2.imag]],
            "trace": s.trace,
            "det": s.det,
            "classification": s.classification.value,
            "theorem_note": s.theorem_note,
        })
    _json(reports, out)


def cmd_simulate(cfg: RunConfig, out, args) -> None:
    traj = integrate(cfg.params, cfg.initial, cfg.integrator)
    with _open_output(args.output) as fh:
        write_trajectory_csv(traj, fh)
    att = classify_attractor(cfg.params, traj)
    print(f"attractor: {att.label} ({traj.accepted_steps} accepted, {traj.rejected_steps} rejected steps)",
          file=sys.stderr)


def _need_sweep(cfg: RunConfig):
    if cfg.sweep is None:
        raise ConfigError("this command needs a [sweep] section (param, lo, hi)")
    return cfg.sweep


def cmd_sweep(cfg: RunConfig, out, args) -> None:
    sw = _need_sweep(cfg)
    records = sweep(cfg.params, sw.param, sw.lo, sw.hi, sw.steps, cfg.initial, cfg.integrator)
    crit = detect_stability_changes(records)
    with _open_output(args.output) as fh:
        diagram_export(records, crit, fh)


def cmd_critical(cfg: RunConfig, out, args) -> None:
    sw = _need_sweep(cfg)
    p, name = cfg.params, sw.param
    points, notes = [], []

    if name in ("c", "b"):
        try:
            points.append(transcritical_point(p, name))
        except MissingEquilibrium as exc:
            notes.append(f"transcritical (analytic): {exc}")
        try:
            points.append(transcritical_rootfind(p, name, (sw.lo, sw.hi)))
        except (MissingEquilibrium, NoSignChange) as exc:
            notes.append(f"transcritical (root find): {exc}")

    explicit = sw.hopf_lo is not None
    bracket = (sw.hopf_lo, sw.hopf_hi) if explicit else (sw.lo, sw.hi)
    try:
        points.append(hopf_point(p, name, bracket))
    except (NoSignChange, E5Vanished) as exc:
        if explicit:
            raise NumericalFailure(f"Hopf point on {list(bracket)}: {exc}") from exc
        notes.append(f"Hopf (root find on [{sw.lo}, {sw.hi}]): {exc}")

    points.extend(fold_points(p, name, (sw.lo, sw.hi)))
    if args.detect:
        records = sweep(p, name, sw.lo, sw.hi, sw.steps, cfg.initial, cfg.integrator, probe=False)
        points.extend(detect_stability_changes(records))
    _json({"param": name, "critical_points": [_cp_json(cp) for cp in points], "notes": notes}, out)


def cmd_basin(cfg: RunConfig, out, args) -> None:
    g = cfg.grid or GridSpec()
    grid = compute_basin(cfg.params, (g.N_lo, g.N_hi), (g.P_lo, g.P_hi), (g.nN, g.nP), cfg.integrator)
    with _open_output(args.output) as fh:
        write_basin_csv(grid, fh)
    summary = bistability_report(grid)
    shares = ", ".join(f"{k} {v:.1%}" for k, v in summary.shares.items())
    print(f"attractors: {shares}; {len(summary.boundary_cells)} boundary cells", file=sys.stderr)


HANDLERS = {
    "equilibria": cmd_equilibria,
    "stability": cmd_stability,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "critical": cmd_critical,
    "basin": cmd_basin,
}


@contextlib.contextmanager
def _open_output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, not argparse's default status 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="allee-defense",
        description="Predator-prey model with additive Allee effect and prey group defense.",
        epilog=(
            "Values given with --set override the config file, which overrides built-in defaults. "
            "Exit status: 0 success, 1 invalid input, 2 numerical failure."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "equilibria": "existence report of all equilibria (JSON)",
        "stability": "eigenvalues and local stability of each equilibrium (JSON)",
        "simulate": "integrate one trajectory from [initial] (CSV t,N,P)",
        "sweep": "bifurcation diagram over [sweep] (CSV)",
        "critical": "transcritical, Hopf and fold points for [sweep] param (JSON)",
        "basin": "basin of attraction over [grid] (CSV N0,P0,attractor_label)",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name], description=helps[name])
        sp.add_argument("config", nargs="?", help="run configuration file (omit to use --set only)")
        sp.add_argument("-s", "--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help="override a config value; a bare KEY means [model] (repeatable)")
        sp.add_argument("-o", "--output", help="CSV destination (default: stdout)")
        if name == "critical":
            sp.add_argument("--detect", action="store_true",
                            help="also report stability changes detected along the [sweep] grid")
    return parser


def run_subcommand(name: str, cfg: RunConfig, args=None, out=None) -> int:
    out = out or sys.stdout
    args = args or argparse.Namespace(output=None, detect=False)
    try:
        HANDLERS[name](cfg, out, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IntegrationError, NumericalFailure, NoSignChange, E5Vanished, MissingEquilibrium) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text, args.overrides)
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run_subcommand(args.command, cfg, args)


if __name__ == "__main__":
    sys.exit(main())
