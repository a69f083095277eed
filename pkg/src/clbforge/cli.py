"""Command-line interface.

Exit statuses: 0 success, 1 usage error, 2 pipeline error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .attack import tamper_bytes, tamper_strings
from .config import load_config
from .elf import load_image, load_sections
from .errors import ClbForgeError
from .harness import (
    aggregate_reports,
    build,
    evaluate,
    format_report_table,
    protect_tree,
    scan_report,
    scan_tree,
)
from .patcher import run_pipeline, verify
from .transformer import Keymap

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PIPELINE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def make_parser() -> _Parser:
    parser = _Parser(prog="clbforge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"clbforge {__version__}")
    parser.add_argument("--config", metavar="FILE", help="JSON config file")
    parser.add_argument("--seed", type=int, metavar="U64", help="build seed override")
    parser.add_argument("--json", action="store_true", help="emit machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="list qualified conditions in a source tree")
    p.add_argument("srcdir", type=Path)

    p = sub.add_parser("protect", help="rewrite eligible conditions into logic bombs")
    p.add_argument("srcdir", type=Path)
    p.add_argument("-o", "--out", type=Path, required=True, help="protected tree output directory")
    p.add_argument("--keymap", type=Path, required=True, help="where to write the secret keymap")
    p.add_argument("--force", action="store_true", help="allow writing into a non-empty directory")

    p = sub.add_parser("build", help="compile a source tree with the configured compiler")
    p.add_argument("srcdir", type=Path)
    p.add_argument("-o", "--out", type=Path, required=True)

    p = sub.add_parser("patch", help="patch placeholders and encrypt extracted functions")
    p.add_argument("exe", type=Path)
    p.add_argument("--keymap", type=Path, required=True)
    p.add_argument("-o", "--out", type=Path, required=True)
    p.add_argument("--report", type=Path, help="write the patch report JSON here")

    p = sub.add_parser("verify", help="re-check digests of a patched executable")
    p.add_argument("exe", type=Path)
    p.add_argument("--keymap", type=Path, required=True)
    p.add_argument("--report", type=Path)

    p = sub.add_parser("attack", help="simulate a repackaging attack")
    p.add_argument("mode", choices=["strings", "bytes"])
    p.add_argument("exe", type=Path)
    p.add_argument("-n", type=int, default=5, help="number of strings / byte flips")
    p.add_argument("-o", "--out", type=Path, help="default: <exe>.tampered")
    p.add_argument("--sections", metavar="LIST",
                   help="strings mode: comma-separated sections to restrict targets to")
    p.add_argument("--section", default=".text", help="bytes mode: section to flip in")
    p.add_argument("--avoid-report", type=Path,
                   help="bytes mode: patch report whose function spans are never flipped")
    p.add_argument("--within-clb", type=int, default=None, metavar="ID",
                   help="bytes mode: flip only inside this bomb's digest region")
    p.add_argument("--report", type=Path, help="write the tamper report JSON here")

    p = sub.add_parser("evaluate", help="run original/protected/tampered with a script")
    p.add_argument("--original", type=Path, required=True)
    p.add_argument("--protected", type=Path, required=True)
    p.add_argument("--tampered", type=Path)
    p.add_argument("--script", type=Path, required=True)
    p.add_argument("--name", help="program name for the report")
    p.add_argument("--patch-report", type=Path, help="fills bomb count and coverage")
    p.add_argument("-o", "--out", type=Path, help="write the evaluation report JSON here")

    p = sub.add_parser("report", help="aggregate *.eval.json files under a run directory")
    p.add_argument("rundir", type=Path)
    p.add_argument("-o", "--out", type=Path, help="write the aggregate JSON here")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed)
        return _dispatch(args, cfg)
    except ClbForgeError as exc:
        print(f"clbforge: error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"clbforge: error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


def _dispatch(args, cfg) -> int:
    if args.command == "scan":
        scans = scan_tree(args.srcdir, cfg)
        doc = scan_report(scans)
        if args.json:
            print(json.dumps(doc, indent=2, sort_keys=True))
        else:
            for f in doc["files"]:
                if f["error"]:
                    print(f"{f['file']}: PARSE ERROR: {f['error']}")
                    continue
                for qc in f["qcs"]:
                    status = "eligible" if qc["eligible"] else f"skip({qc['skip_reason']})"
                    print(f"{f['file']}:{qc['line']}: qc{qc['id']} in {qc['function']}"
                          f" `{qc['var']} == {qc['const']}` [{qc['const_origin']}] {status}")
            print(f"total={doc['total_qcs']} eligible={doc['eligible']} skipped={doc['skipped']}")
        parsed_any = any(f["error"] is None for f in doc["files"])
        return EXIT_OK if (parsed_any or not doc["files"]) else EXIT_PIPELINE

    if args.command == "protect":
        result = protect_tree(args.srcdir, args.out, args.keymap, cfg, force=args.force)
        count = len(result.keymap.records)
        print(f"protected {result.transformed_files} file(s); injected {count} logic bomb(s)")
        if count == 0:
            print("warning: no eligible qualified conditions; output equals input", file=sys.stderr)
        print(f"warning: keymap {args.keymap} contains secret material; keep it private",
              file=sys.stderr)
        return EXIT_OK

    if args.command == "build":
        out = build(args.srcdir, args.out, cfg)
        print(f"built {out}")
        return EXIT_OK

    if args.command == "patch":
        data = args.exe.read_bytes()
        image = load_image(data)
        keymap = Keymap.load(args.keymap)
        patched, report = run_pipeline(image, keymap, cfg.min_region_bytes)
        args.out.write_bytes(patched.data)
        args.out.chmod(0o755)
        if args.report:
            args.report.write_text(report.to_json(), encoding="ascii")
        if args.json:
            print(report.to_json(), end="")
        else:
            for e in report.entries:
                print(f"clb{e.record.clb_id} {e.record.ext_symbol}"
                      f" span=[{e.span.offset:#x},{e.span.end:#x})"
                      f" region=[{e.region.offset:#x},+{e.region.count:#x})"
                      f" digest={e.region.digest:08x} {e.direction}")
            print(f"coverage={report.coverage:.3f}")
            for w in report.warnings:
                print(f"warning: {w}", file=sys.stderr)
        return EXIT_OK

    if args.command == "verify":
        image = load_image(args.exe.read_bytes())
        keymap = Keymap.load(args.keymap)
        report = verify(image, keymap, cfg.min_region_bytes)
        if args.report:
            args.report.write_text(report.to_json(), encoding="ascii")
        if args.json:
            print(report.to_json(), end="")
        else:
            for e in report.entries:
                mark = "ok" if e.ok else f"FAIL ({e.detail})"
                print(f"clb{e.clb_id} {e.symbol}: {mark}")
        return EXIT_OK if report.all_ok else EXIT_PIPELINE

    if args.command == "attack":
        data = args.exe.read_bytes()
        if args.mode == "strings":
            within = None
            if args.sections:
                wanted = [w.strip() for w in args.sections.split(",") if w.strip()]
                matched = [s for s in load_sections(data) if s.name in wanted and s.size]
                if not matched:
                    raise ClbForgeError(f"none of the sections exist: {args.sections}")
                within = [(s.offset, s.offset + s.size) for s in matched]
            tampered, report = tamper_strings(data, cfg.seed, args.n, cfg.min_string_len,
                                              within=within)
        else:
            sections = load_sections(data)
            avoid = None
            within = None
            if args.within_clb is not None and not args.avoid_report:
                raise ClbForgeError("--within-clb needs --avoid-report for the region layout")
            if args.avoid_report:
                doc = json.loads(args.avoid_report.read_text(encoding="ascii"))
                avoid = [(c["file_offset"], c["size"]) for c in doc["clbs"]]
                if args.within_clb is not None:
                    rows = [c for c in doc["clbs"] if c["id"] == args.within_clb]
                    if not rows:
                        raise ClbForgeError(f"clb id {args.within_clb} not in {args.avoid_report}")
                    within = [(rows[0]["region_offset"],
                               rows[0]["region_offset"] + rows[0]["region_count"])]
            tampered, report = tamper_bytes(data, cfg.seed, args.n, args.section,
                                            sections, avoid=avoid, within=within)
        out = args.out or args.exe.with_name(args.exe.name + ".tampered")
        out.write_bytes(tampered)
        out.chmod(0o755)
        if args.report:
            args.report.write_text(report.to_json(), encoding="ascii")
        if args.json:
            print(report.to_json(), end="")
        else:
            print(f"tampered {len(report.entries)} site(s) -> {out}")
        return EXIT_OK

    if args.command == "evaluate":
        clb_count = 0
        coverage = 0.0
        if args.patch_report:
            doc = json.loads(args.patch_report.read_text(encoding="ascii"))
            clb_count = len(doc["clbs"])
            coverage = doc["coverage"]
        report = evaluate(args.original, args.protected, args.tampered, args.script,
                          cfg, program=args.name, clb_count=clb_count, coverage=coverage)
        if args.out:
            args.out.write_text(report.to_json(), encoding="ascii")
        if args.json:
            print(report.to_json(), end="")
        else:
            print(f"program={report.program} equivalence={report.equivalence}"
                  f" detection={report.detection} overhead={report.size_overhead_percent:.2f}%")
        return EXIT_OK

    if args.command == "report":
        doc = aggregate_reports(args.rundir)
        if args.out:
            args.out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="ascii")
        if args.json:
            print(json.dumps(doc, indent=2, sort_keys=True))
        else:
            print(format_report_table(doc), end="")
        return EXIT_OK

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
