"""Command-line interface.

Verbs:
  analyze   run a scenario file end to end, write report/rings/figures
  heatmap   sample a field on a polar grid, write PGM + sidecar (+ PNG)
  verify    run tagged module-invariant checks
  rings     print the per-ring density table for a scenario

Exit codes: 0 ok, 1 config error, 2 inconclusive with recorded estimator
errors, 3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .carleson import delta_table
from .config import ConfigError, load_scenario
from .errors import CompRangeError, ValidationError
from .report import HEATMAP_FIELDS, emit_heatmap, run_scenario
from .symbols import build_symbol
from .verify import ALL_TAGS, verify_suite


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--radial-order", type=int, default=None)
    p.add_argument("--angular-order", type=int, default=None)
    p.add_argument("--eps-truncation", type=float, default=None,
                   help="preimage truncation eps (roots with |z| > 1-eps dropped)")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--r", type=float, default=None, dest="bergman_radius",
                   help="Bergman radius of the density disks")
    p.add_argument("--out-dir", type=Path, default=None)


def _load(args) -> "ScenarioConfig":
    cfg = load_scenario(args.scenario)
    qfields = {}
    if args.seed is not None:
        qfields["seed"] = args.seed
    if args.eps_truncation is not None:
        qfields["eps"] = args.eps_truncation
    if args.alpha is not None:
        qfields["alpha"] = args.alpha
    if args.bergman_radius is not None:
        qfields["bergman_radius"] = args.bergman_radius
    if qfields:
        cfg = dataclasses.replace(cfg, query=dataclasses.replace(cfg.query, **qfields))
    quadfields = {}
    if args.radial_order is not None:
        quadfields["radial_order"] = args.radial_order
    if args.angular_order is not None:
        quadfields["angular_order"] = args.angular_order
    if quadfields:
        cfg = dataclasses.replace(
            cfg, quadrature=dataclasses.replace(cfg.quadrature, **quadfields))
    cfg.validate()
    return cfg


def _cmd_analyze(args) -> int:
    cfg = _load(args)
    report, code = run_scenario(cfg, out_dir=args.out_dir or Path("."))
    v = report.result.verdict
    print(f"{report.label}: {v.label} (branch {v.branch})")
    for key, rec in sorted(v.criteria.items()):
        print(f"  {key:18s} value={rec.value:<12.6g} threshold={rec.threshold:<10g} "
              f"{'pass' if rec.passed else 'fail'}")
    return code


def _cmd_heatmap(args) -> int:
    cfg = _load(args)
    paths = emit_heatmap(args.field, args.resolution, cfg,
                         args.out_dir or Path("."), png=not args.no_png)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


def _cmd_verify(args) -> int:
    tags = [t.strip() for t in args.tags.split(",")] if args.tags else ["all"]
    summary = verify_suite(tags)
    for c in summary["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['tag']:10s} "
              f"{c['name']:34s} {c['detail']}")
    print(f"{summary['passed']} passed, {summary['failed']} failed")
    if args.out:
        Path(args.out).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0 if summary["failed"] == 0 else 1


def _cmd_rings(args) -> int:
    cfg = _load(args)
    phi = build_symbol(cfg.symbol)
    q = cfg.query
    table, _ = delta_table(phi, q.bergman_radius, [q.alpha], q)
    print("mode,ring_radius,n_angles,min_ratio,stderr,argmin_angle")
    for mode, est in table.items():
        for rm in est.per_ring:
            print(f"{mode},{rm.radius},{rm.n_angles},{rm.min_ratio},"
                  f"{rm.stderr},{rm.argmin_angle}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="comprange",
        description="Closed-range analysis of composition operators on the "
                    "Dirichlet space")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("analyze", help="run a scenario and emit its report")
    p.add_argument("scenario", type=Path)
    _add_common(p)
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("heatmap", help="render a field heatmap (PGM + PNG)")
    p.add_argument("scenario", type=Path)
    p.add_argument("--field", choices=HEATMAP_FIELDS, default="n_phi")
    p.add_argument("--resolution", type=int, default=128)
    p.add_argument("--no-png", action="store_true")
    _add_common(p)
    p.set_defaults(fn=_cmd_heatmap)

    p = sub.add_parser("verify", help="run the module invariant suite")
    p.add_argument("--tags", default="all",
                   help=f"comma-separated from {', '.join(ALL_TAGS)}, or 'all'")
    p.add_argument("--out", type=Path, default=None,
                   help="write the machine-readable summary JSON here")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("rings", help="print the per-ring density table")
    p.add_argument("scenario", type=Path)
    _add_common(p)
    p.set_defaults(fn=_cmd_rings)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except CompRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
