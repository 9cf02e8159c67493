"""``verify run`` and ``verify converge``.

Exit status: 0 when every check passes, 1 when any fails, 2 on configuration
errors.  ``$WEYLSOLITON_REPORT_DIR`` relocates relative report paths.
"""

from __future__ import annotations

import argparse
import json
import sys

from .checks import CHECKS, SUITES
from .manifest import load_manifest
from .runner import ConfigError, SuiteConfig, convergence_study, run
from .schema import write_schemas


def _common(p):
    p.add_argument("--manifest", help="JSON manifest with configuration and custom charts")
    p.add_argument("--manifold", action="append", dest="manifolds", metavar="NAME",
                   help="zoo entry, manifest chart or 'synthetic' (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--fd-order", type=int, choices=(2, 4, 6))
    p.add_argument("--fd-step", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="verify", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run identity suites")
    r.add_argument("--suite", choices=SUITES + ("all",))
    _common(r)
    r.add_argument("--points", type=int, help="points per manifold (jets for the algebraic suite)")
    r.add_argument("--tol-scale", type=float)
    r.add_argument("--tol", action="append", default=[], metavar="CHECK=VALUE", help="tolerance override")
    r.add_argument("--report", help="JSON report path")
    r.add_argument("--failures", action="store_true", help="list failing records")

    c = sub.add_parser("converge", help="step-refinement study of a differential check")
    c.add_argument("--check", required=True, choices=sorted(CHECKS))
    _common(c)
    c.add_argument("--base-step", type=float, help="coarsest step h (default 0.04)")
    c.add_argument("--json", action="store_true", help="print the table as JSON")

    sub.add_parser("list", help="list checks")
    s = sub.add_parser("schema", help="write the JSON schemas")
    s.add_argument("directory")
    return parser


def _config(args) -> SuiteConfig:
    base = load_manifest(args.manifest) if args.manifest else {}
    overrides = dict(base.get("overrides", {}))
    for item in getattr(args, "tol", []):
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"tolerance override {item!r} is not CHECK=VALUE")
        try:
            overrides[key] = float(val)
        except ValueError:
            raise ConfigError(f"tolerance override {item!r} has a non-numeric value") from None
    cli = {
        "suite": getattr(args, "suite", None),
        "manifolds": args.manifolds,
        "points": getattr(args, "points", None),
        "seed": args.seed,
        "fd_order": args.fd_order,
        "fd_step": args.fd_step,
        "tol_scale": getattr(args, "tol_scale", None),
        "report": getattr(args, "report", None),
    }
    merged = base | {k: v for k, v in cli.items() if v is not None}
    if overrides:
        merged["overrides"] = overrides
    return SuiteConfig.from_dict(merged)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for c in CHECKS.values():
                print(f"{c.check_id:<24} {c.suite:<13} {c.reference}")
            return 0
        if args.command == "schema":
            for p in write_schemas(args.directory):
                print(p)
            return 0
        config = _config(args)
        if args.command == "run":
            report = run(config)
            print(report.format_summary())
            if args.failures:
                for r in report.records:
                    if not r.passed:
                        print(f"FAIL {r.check_id} {r.manifold} {r.point} {r.residual:.3e} > {r.tolerance:.1e} {r.detail}")
            return 0 if report.passed else 1
        table = convergence_study(config, args.check, base_step=args.base_step,
                                  manifold=args.manifolds[0] if args.manifolds else None)
        print(json.dumps(table.to_dict(), indent=1) if args.json else table.format())
        return 0 if table.passed else 1
    except ConfigError as exc:
        print(f"verify: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
