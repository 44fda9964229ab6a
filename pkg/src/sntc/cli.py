"""Command-line front end: ``sntc run | list-systems | list-scenarios | fd-check``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .errors import ConfigurationError, InvalidConstantsError, SntcError
from .models import BUILTIN_SYSTEMS, get_system
from .scenario import OUTPUT_ROOT_ENV, bundled_scenarios, load_config, output_root, run_scenario
from .system import fd_sweep

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_TASK_FAILED = 1
EXIT_CONFIG = 2


def _constants(pairs: list[str]) -> dict[str, float]:
    out = {}
    for item in pairs:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"expected NAME=VALUE, got '{item}'")
        try:
            out[name] = float(value)
        except ValueError:
            raise ConfigurationError(f"constant '{name}' is not a number: '{value}'") from None
    return out


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.output) if args.output else output_root() / (cfg.output or cfg.name)
    report = run_scenario(cfg, out)
    width = max(len(t.id) for t in report.tasks)
    for t in report.tasks:
        line = f"{t.status.upper():7s} {t.id:{width}s} {t.type:20s} {t.elapsed:7.2f}s"
        if t.message:
            line += f"  {t.message}"
        print(line)
    for rec in report.specials:
        kind = rec["kind"]
        if kind in (None, "Fold", "Hopf", "Transcritical"):
            continue
        loc = ", ".join(f"{k}={v:.10g}" for k, v in rec["location"].items())
        print(f"special {kind:16s} {loc}  [{rec['task']}]")
    print(f"output: {out}")
    return EXIT_OK if report.ok else EXIT_TASK_FAILED


def _cmd_list_systems(args) -> int:
    for name in BUILTIN_SYSTEMS:
        s = get_system(name)
        inv = ",".join(s.state_names[i] for i in s.invariant_components) or "-"
        print(f"{name:18s} dim={s.dim} states={','.join(s.state_names)} invariant={inv} "
              f"params={','.join(s.param_names)}")
    return EXIT_OK


def _cmd_list_scenarios(args) -> int:
    for name, text in bundled_scenarios().items():
        desc = (yaml.safe_load(text) or {}).get("description", "")
        print(f"{name:22s} {' '.join(desc.split())}")
    return EXIT_OK


def _cmd_fd_check(args) -> int:
    sys_ = get_system(args.system, **_constants(args.constant))
    rep = fd_sweep(sys_, args.points, args.seed, args.tol)
    errs = " ".join(f"{k}={v:.2e}" for k, v in rep["max_errors"].items())
    print(f"{sys_.name}: {rep['points']} points, {rep['kink_skips']} kink redraws, max rel. errors {errs}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sntc", description=__doc__)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario (YAML path or bundled name)")
    p.add_argument("config")
    p.add_argument("-o", "--output", help=f"output directory (default: ${OUTPUT_ROOT_ENV}/<scenario>)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("list-systems", help="list built-in systems")
    p.set_defaults(func=_cmd_list_systems)

    p = sub.add_parser("list-scenarios", help="list bundled scenarios")
    p.set_defaults(func=_cmd_list_scenarios)

    p = sub.add_parser("fd-check", help="compare analytic derivatives with finite differences")
    p.add_argument("system")
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("-c", "--constant", action="append", default=[], metavar="NAME=VALUE",
                   help="construction constant of the system (repeatable)")
    p.set_defaults(func=_cmd_fd_check)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    # bad construction constants are user input, not a numerical failure
    except (ConfigurationError, InvalidConstantsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SntcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TASK_FAILED


if __name__ == "__main__":
    sys.exit(main())
