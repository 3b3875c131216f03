"""Command-line entry point.

    trackscan scan app.apk --kb seed/ -o profile.json
    trackscan corpus manifest.csv --kb seed/ --genres map.csv -o out/
    trackscan kb validate seed/
    trackscan rankdist r1.csv r2.csv

Exit status: 0 on success, 1 on validation failure or a processing error,
2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .dex import RAW_SCAN, STRING_POOL
from .errors import KBError, TrackscanError
from .kb import KB_DIR_ENV, default_kb_dir, load_kb_dir, validate_kb
from .metrics import Ranking, kendall_distance, load_genre_map
from .report import analyze_corpus, scan_apk, write_report

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

_MODES = {"pool": STRING_POOL, "raw": RAW_SCAN}


def read_ranking(path: str | Path) -> Ranking:
    """First column of a CSV, most prevalent first; an ``entity`` header is skipped."""
    items = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
                continue
            items.append(row[0].strip())
    if items and items[0] in ("entity", "id"):
        items = items[1:]
    return Ranking(tuple(items))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trackscan", description="Detect tracker hosts in Android app bytecode.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    kb_help = f"KB directory (default: ${KB_DIR_ENV} or the bundled seed KB)"

    p = sub.add_parser("scan", help="profile a single APK")
    p.add_argument("apk")
    p.add_argument("--kb", help=kb_help)
    p.add_argument("--paper-compat", action="store_true",
                   help="match tracker domains with the right-boundary rule only")
    p.add_argument("--mode", choices=sorted(_MODES), default="pool")
    p.add_argument("--app-id")
    p.add_argument("--manifest-xml", help="decoded AndroidManifest.xml for permissions")
    p.add_argument("-o", "--output", help="JSON output file (default: stdout)")

    p = sub.add_parser("corpus", help="analyze a corpus manifest")
    p.add_argument("manifest")
    p.add_argument("--kb", help=kb_help)
    p.add_argument("--genres", help="genre,super_genre CSV (default: bundled grouping)")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--paper-compat", action="store_true")
    p.add_argument("--mode", choices=sorted(_MODES), default="pool")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--top-k", type=int, default=20,
                   help="ranking length for genre distances (0 = no limit)")

    p = sub.add_parser("kb", help="knowledge-base utilities")
    kb_sub = p.add_subparsers(dest="kb_command", required=True)
    v = kb_sub.add_parser("validate", help="check a KB directory")
    v.add_argument("directory")

    p = sub.add_parser("rankdist", help="Kendall tau distance between two rankings")
    p.add_argument("r1")
    p.add_argument("r2")
    return parser


def _kb(arg: str | None):
    return load_kb_dir(arg if arg else default_kb_dir())


def _cmd_scan(args: argparse.Namespace) -> int:
    kb = _kb(args.kb)
    manifest_xml = Path(args.manifest_xml).read_bytes() if args.manifest_xml else None
    profile = scan_apk(args.apk, kb, app_id=args.app_id, mode=_MODES[args.mode],
                       paper_compat=args.paper_compat, manifest_xml=manifest_xml)
    text = json.dumps(profile.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_corpus(args: argparse.Namespace) -> int:
    kb = _kb(args.kb)
    genres = load_genre_map(args.genres)
    report = analyze_corpus(args.manifest, kb, genres, mode=_MODES[args.mode],
                            paper_compat=args.paper_compat, jobs=args.jobs,
                            top_k=args.top_k or None)
    write_report(report, args.output, kb)
    print(f"{len(report.profiles)} apps profiled, {len(report.failures)} failed")
    for app_id, reason in report.failures:
        print(f"  failed: {app_id}: {reason}", file=sys.stderr)
    return EXIT_OK


def _cmd_kb_validate(args: argparse.Namespace) -> int:
    try:
        kb = load_kb_dir(args.directory, validate=False)
    except KBError as exc:
        print(exc)
        print("1 violations")
        return EXIT_FAIL
    violations = validate_kb(kb)
    for v in violations:
        print(v)
    print(f"{len(violations)} violations")
    return EXIT_FAIL if violations else EXIT_OK


def _cmd_rankdist(args: argparse.Namespace) -> int:
    d = kendall_distance(read_ranking(args.r1), read_ranking(args.r2))
    print(json.dumps({"raw_k": d.raw_k, "normalized_k": d.normalized_k,
                      "universe_size": d.universe_size}, sort_keys=True))
    return EXIT_OK


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {
        "scan": _cmd_scan,
        "corpus": _cmd_corpus,
        "kb": _cmd_kb_validate,
        "rankdist": _cmd_rankdist,
    }[args.command]
    try:
        return handler(args)
    except (TrackscanError, OSError, ValueError) as exc:
        print(f"trackscan: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
