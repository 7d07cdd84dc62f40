"""``crrbf`` command line: cluster bands, run experiments, render reports.

Exit codes: 0 success, 2 config/argument error, 3 data error,
4 some binary SVM hit its iteration cap (report still written).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .band_clustering import cluster_bands
from .dataset import DatasetError, load_dataset
from .experiment import ConfigError, ReportError, load_config, read_report, render_report, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NONCONVERGED = 0, 2, 3, 4

log = logging.getLogger("crrbf")


def cmd_cluster(args) -> int:
    try:
        ds = load_dataset(args.data)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if not 1 <= args.k <= ds.band_count:
        print(f"error: argument --k: must be in [1, {ds.band_count}] for {args.data}, got {args.k}",
              file=sys.stderr)
        return EXIT_CONFIG
    clustering = cluster_bands(ds, args.k, seed=args.seed)
    text = "".join(f"{b},{c}\n" for b, c in enumerate(clustering.assignments))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.workers is not None:
            cfg.workers = args.workers
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report, out_dir = run_experiment(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReportError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DatasetError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    log.info("wrote %s", out_dir)
    if report["nonconverged"]:
        print(f"warning: {report['nonconverged']} binary problems did not converge; "
              f"see {out_dir / 'report.txt'}", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        doc = read_report(args.report)
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(render_report(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crrbf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="K-Means band clustering; writes band_index,cluster_id")
    p.add_argument("data", help="dataset CSV (features..., label)")
    p.add_argument("--k", type=int, required=True, help="number of band clusters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("experiment", help="run a JSON-configured scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the config base seed")
    p.add_argument("--workers", type=int, help="concurrent trial/grid tasks")
    p.add_argument("--out", help="output directory (default: config output_dir)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="print tables from a stored report.json")
    p.add_argument("report")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
