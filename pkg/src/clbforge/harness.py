"""Pipeline orchestration: scan, protect, build, run, evaluate, aggregate.

Binaries are exercised with line-oriented input scripts (`SEND`/`EXPECT`), and
a tampered run is classified purely from its exit status, the stderr marker,
and how many inputs it had consumed when it died.
"""

from __future__ import annotations

import fnmatch
import json
import os
import select
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path

from .config import Config
from .errors import (
    AlreadyProtected,
    ClbForgeError,
    CompilerFailed,
    ExecFailure,
    HarnessError,
    RewriteAmbiguity,
)
from .lexer import tokenize
from .source_model import (
    Eligibility,
    QualifiedCondition,
    TranslationUnit,
    check_eligibility,
    collect_macros,
    find_qualified_conditions,
    parse_translation_unit,
)
from .transformer import Keymap, is_protected_source, plan_clbs, transform_unit

DETECTION_MARKER = b"TAMPERING DETECTED"

CLASS_STARTUP = "detected-at-startup"
CLASS_DURING = "detected-during-input"
CLASS_UNDETECTED = "undetected"
CLASS_CRASHED = "crashed-other"


# ---------------------------------------------------------------------------
# scanning


@dataclass
class FileScan:
    path: str  # srcdir-relative, posix style
    tu: TranslationUnit | None
    error: str | None
    qcs: list[tuple[QualifiedCondition, Eligibility]] = field(default_factory=list)


def discover_sources(srcdir: Path, cfg: Config) -> list[str]:
    found: set[str] = set()
    for pattern in cfg.include_globs:
        for p in sorted(srcdir.glob(pattern)):
            if not p.is_file():
                continue
            rel = p.relative_to(srcdir).as_posix()
            if any(fnmatch.fnmatch(rel, ex) for ex in cfg.exclude_globs):
                continue
            found.add(rel)
    return sorted(found)


def _header_macros(srcdir: Path, cfg: Config) -> dict[str, int]:
    base: dict[str, int] = {}
    for header in cfg.project_headers:
        path = srcdir / header
        if not path.is_file():
            path = Path(header)
        if not path.is_file():
            continue
        stream = tokenize(path.read_bytes(), str(path))
        tu = parse_translation_unit(stream)
        base.update(collect_macros(tu))
    return base


def scan_tree(srcdir: Path, cfg: Config) -> list[FileScan]:
    srcdir = Path(srcdir)
    if not srcdir.is_dir():
        raise HarnessError(f"source directory not found: {srcdir}")
    base_macros = _header_macros(srcdir, cfg)
    scans = []
    for rel in discover_sources(srcdir, cfg):
        data = (srcdir / rel).read_bytes()
        try:
            stream = tokenize(data, rel)
            tu = parse_translation_unit(stream)
        except ClbForgeError as exc:
            scans.append(FileScan(rel, None, str(exc)))
            continue
        tu.macros = collect_macros(tu, base_macros)
        qcs = find_qualified_conditions(tu, tu.macros, cfg)
        scans.append(FileScan(rel, tu, None, [(qc, check_eligibility(qc)) for qc in qcs]))
    return scans


def scan_report(scans: list[FileScan]) -> dict:
    files = []
    total = eligible = 0
    for s in scans:
        entry = {"file": s.path, "error": s.error, "qcs": []}
        for qc, elig in s.qcs:
            total += 1
            eligible += 1 if elig.eligible else 0
            entry["qcs"].append({
                "id": qc.qc_id,
                "function": qc.enclosing.name,
                "offset": qc.cond_span[0],
                "line": qc.tu.data.count(b"\n", 0, qc.cond_span[0]) + 1,
                "var": qc.var_expr,
                "const": qc.const_value,
                "const_origin": qc.const_origin,
                "eligible": elig.eligible,
                "skip_reason": elig.reason.value if elig.reason else None,
            })
        files.append(entry)
    return {"files": files, "total_qcs": total, "eligible": eligible,
            "skipped": total - eligible}


# ---------------------------------------------------------------------------
# protect


@dataclass
class ProtectResult:
    keymap: Keymap
    files_written: int
    transformed_files: int


def protect_tree(srcdir: Path, outdir: Path, keymap_path: Path,
                 cfg: Config, force: bool = False) -> ProtectResult:
    srcdir = Path(srcdir)
    outdir = Path(outdir)
    if outdir.exists() and any(outdir.iterdir()) and not force:
        raise HarnessError(f"output directory {outdir} is not empty (use --force)")

    scans = scan_tree(srcdir, cfg)
    failed = [s for s in scans if s.error]
    if failed:
        raise HarnessError("parse errors: " + "; ".join(f"{s.path}: {s.error}" for s in failed))
    for s in scans:
        if s.tu is not None and is_protected_source(s.tu.data):
            raise AlreadyProtected(f"{s.path} already carries protection markers")

    eligible: list[tuple[TranslationUnit, QualifiedCondition, Eligibility]] = []
    for s in scans:
        for qc, elig in s.qcs:
            if elig.eligible:
                eligible.append((s.tu, qc, elig))

    demoted: set[tuple[str, int]] = set()
    while True:
        active = [(tu, qc, e) for tu, qc, e in eligible
                  if (tu.path, qc.cond_span[0]) not in demoted]
        keymap = plan_clbs([(tu, qc) for tu, qc, _ in active], cfg.seed)
        by_record = {(r.file, r.offset): r for r in keymap.records}
        per_file: dict[str, list] = {}
        for tu, qc, e in active:
            record = by_record[(tu.path, qc.cond_span[0])]
            per_file.setdefault(tu.path, []).append((qc, record, e))
        try:
            outputs = {
                s.path: transform_unit(s.tu, per_file.get(s.path, []))
                for s in scans
            }
            break
        except RewriteAmbiguity as exc:
            # demote the offending QC to a skip and re-plan deterministically
            culprit = getattr(exc, "culprit", None)
            if culprit is None or culprit in demoted:
                raise
            demoted.add(culprit)

    written = 0
    for root, _dirs, names in os.walk(srcdir):
        for name in names:
            src = Path(root) / name
            rel = src.relative_to(srcdir).as_posix()
            dst = outdir / rel
            dst.parent.mkdir(parents=True, exist_ok=True)
            dst.write_bytes(outputs.get(rel, src.read_bytes()))
            written += 1

    keymap_path = Path(keymap_path)
    keymap_path.parent.mkdir(parents=True, exist_ok=True)
    keymap.save(keymap_path)
    return ProtectResult(keymap, written, sum(1 for p in outputs.values() if p))


# ---------------------------------------------------------------------------
# build


def build(srcdir: Path, output: Path, cfg: Config) -> Path:
    srcdir = Path(srcdir)
    inputs = [str(srcdir / rel) for rel in discover_sources(srcdir, cfg)]
    if not inputs:
        raise CompilerFailed(1, f"no C sources found under {srcdir}")
    cmd: list[str] = []
    for token in shlex.split(cfg.compiler):
        if token == "{inputs}":
            cmd.extend(inputs)
        elif token == "{flags}":
            cmd.extend(cfg.compile_flags)
        elif token == "{output}":
            cmd.append(str(output))
        else:
            cmd.append(token)
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True)
    except FileNotFoundError as exc:
        raise CompilerFailed(127, f"compiler not found: {cmd[0]} ({exc})") from exc
    if proc.returncode != 0:
        raise CompilerFailed(proc.returncode, proc.stderr or proc.stdout)
    if proc.stderr:
        print(proc.stderr, end="", flush=True)
    return Path(output)


# ---------------------------------------------------------------------------
# scripted execution


@dataclass
class RunResult:
    status: int | None
    stdout: bytes
    stderr: bytes
    consumed_inputs: int
    timed_out: bool
    script_completed: bool
    wall_seconds: float


def parse_script(text: str) -> list[tuple[str, str]]:
    steps = []
    for raw in text.splitlines():
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if line.startswith("SEND "):
            steps.append(("SEND", line[5:]))
        elif line == "SEND":
            steps.append(("SEND", ""))
        elif line.startswith("EXPECT "):
            steps.append(("EXPECT", line[7:]))
        else:
            raise HarnessError(f"bad input-script line: {raw!r}")
    return steps


def run_with_script(exe: Path, steps: list[tuple[str, str]], timeout: float) -> RunResult:
    start = time.monotonic()
    deadline = start + timeout
    try:
        proc = subprocess.Popen(
            [str(Path(exe).resolve())],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
    except OSError as exc:
        raise ExecFailure(f"cannot execute {exe}: {exc}") from exc

    out_fd = proc.stdout.fileno()
    err_fd = proc.stderr.fileno()
    os.set_blocking(out_fd, False)
    os.set_blocking(err_fd, False)
    stdout = bytearray()
    stderr = bytearray()
    eof = {out_fd: False, err_fd: False}
    consumed = 0
    timed_out = False
    completed = False

    def pump(wait: float) -> None:
        live = [fd for fd in (out_fd, err_fd) if not eof[fd]]
        if not live:
            time.sleep(min(wait, 0.01))
            return
        ready, _, _ = select.select(live, [], [], wait)
        for fd in ready:
            chunk = os.read(fd, 65536)
            if not chunk:
                eof[fd] = True
            elif fd == out_fd:
                stdout.extend(chunk)
            else:
                stderr.extend(chunk)

    try:
        search_pos = 0
        idx = 0
        failed = False
        while idx < len(steps) and not failed:
            kind, text = steps[idx]
            if kind == "SEND":
                try:
                    proc.stdin.write(text.encode() + b"\n")
                    proc.stdin.flush()
                    consumed += 1
                except (BrokenPipeError, OSError):
                    failed = True
                    break
                idx += 1
                continue
            target = text.encode()
            while True:
                pos = bytes(stdout).find(target, search_pos)
                if pos != -1:
                    search_pos = pos + len(target)
                    break
                if eof[out_fd] and proc.poll() is not None:
                    failed = True
                    break
                if time.monotonic() >= deadline:
                    timed_out = True
                    failed = True
                    break
                pump(min(0.05, max(0.0, deadline - time.monotonic())))
            idx += 1 if not failed else 0
        completed = idx >= len(steps)

        try:
            proc.stdin.close()
        except OSError:
            pass
        while not (eof[out_fd] and eof[err_fd]):
            if time.monotonic() >= deadline:
                timed_out = True
                break
            pump(min(0.05, max(0.0, deadline - time.monotonic())))
        try:
            status = proc.wait(timeout=max(0.0, deadline - time.monotonic()))
        except subprocess.TimeoutExpired:
            timed_out = True
            proc.kill()
            status = proc.wait()
        pump(0)
        pump(0)
    finally:
        for stream in (proc.stdin, proc.stdout, proc.stderr):
            try:
                stream.close()
            except OSError:
                pass
        if proc.poll() is None:
            proc.kill()
            proc.wait()
            status = proc.returncode

    return RunResult(
        status=status,
        stdout=bytes(stdout),
        stderr=bytes(stderr),
        consumed_inputs=consumed,
        timed_out=timed_out,
        script_completed=completed,
        wall_seconds=time.monotonic() - start,
    )


def classify_detection(result: RunResult, cfg: Config) -> str:
    """Pure function of (exit status, stderr marker, consumed-input count)."""
    if result.timed_out:
        return CLASS_CRASHED
    if result.status == cfg.detection_exit_status and DETECTION_MARKER in result.stderr:
        return CLASS_DURING if result.consumed_inputs >= 1 else CLASS_STARTUP
    if result.status == 0:
        return CLASS_UNDETECTED
    return CLASS_CRASHED


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class EvalReport:
    program: str
    equivalence: str  # identical | diverged
    detection: str | None
    size_overhead_percent: float
    clb_count: int
    coverage: float
    stage_seconds: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "program": self.program,
            "equivalence": self.equivalence,
            "detection": self.detection,
            "size_overhead_percent": self.size_overhead_percent,
            "clb_count": self.clb_count,
            "coverage": self.coverage,
            "stage_seconds": self.stage_seconds,
        }, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        doc = json.loads(text)
        return cls(
            program=doc["program"],
            equivalence=doc["equivalence"],
            detection=doc.get("detection"),
            size_overhead_percent=doc["size_overhead_percent"],
            clb_count=doc["clb_count"],
            coverage=doc["coverage"],
            stage_seconds=doc.get("stage_seconds", {}),
        )


def evaluate(original: Path, protected: Path, tampered: Path | None,
             script_path: Path, cfg: Config, program: str | None = None,
             clb_count: int = 0, coverage: float = 0.0) -> EvalReport:
    steps = parse_script(Path(script_path).read_text(encoding="utf-8"))
    stages = {}

    t0 = time.monotonic()
    run_orig = run_with_script(original, steps, cfg.timeout_seconds)
    stages["run_original"] = time.monotonic() - t0
    t0 = time.monotonic()
    run_prot = run_with_script(protected, steps, cfg.timeout_seconds)
    stages["run_protected"] = time.monotonic() - t0

    equivalence = "identical" if run_orig.stdout == run_prot.stdout else "diverged"

    detection = None
    if tampered is not None:
        t0 = time.monotonic()
        try:
            run_tamp = run_with_script(tampered, steps, cfg.timeout_seconds)
        except ExecFailure:
            # tampering can leave the binary unloadable (e.g. a mangled
            # interpreter path); that is an attack outcome, not a harness error
            detection = CLASS_CRASHED
        else:
            detection = classify_detection(run_tamp, cfg)
        stages["run_tampered"] = time.monotonic() - t0

    orig_size = Path(original).stat().st_size
    prot_size = Path(protected).stat().st_size
    overhead = 100.0 * (prot_size - orig_size) / orig_size if orig_size else 0.0

    return EvalReport(
        program=program or Path(original).stem,
        equivalence=equivalence,
        detection=detection,
        size_overhead_percent=overhead,
        clb_count=clb_count,
        coverage=coverage,
        stage_seconds=stages,
    )


# ---------------------------------------------------------------------------
# aggregate report


def aggregate_reports(run_dir: Path) -> dict:
    reports = []
    for path in sorted(Path(run_dir).rglob("*.eval.json")):
        reports.append(EvalReport.from_json(path.read_text(encoding="utf-8")))
    if not reports:
        raise HarnessError(f"no *.eval.json reports under {run_dir}")

    def mean(values):
        values = list(values)
        return sum(values) / len(values) if values else 0.0

    histogram: dict[str, int] = {}
    for r in reports:
        if r.detection is not None:
            histogram[r.detection] = histogram.get(r.detection, 0) + 1

    stage_names = sorted({k for r in reports for k in r.stage_seconds})
    return {
        "programs": [
            {
                "program": r.program,
                "equivalence": r.equivalence,
                "detection": r.detection,
                "size_overhead_percent": r.size_overhead_percent,
                "clb_count": r.clb_count,
                "coverage": r.coverage,
                "stage_seconds": r.stage_seconds,
            }
            for r in reports
        ],
        "aggregate": {
            "count": len(reports),
            "mean_clb_count": mean(r.clb_count for r in reports),
            "min_clb_count": min(r.clb_count for r in reports),
            "max_clb_count": max(r.clb_count for r in reports),
            "mean_size_overhead_percent": mean(r.size_overhead_percent for r in reports),
            "max_size_overhead_percent": max(r.size_overhead_percent for r in reports),
            "mean_coverage": mean(r.coverage for r in reports),
            "detection_histogram": histogram,
            "identical_equivalence": sum(1 for r in reports if r.equivalence == "identical"),
            "mean_stage_seconds": {
                name: mean(r.stage_seconds[name] for r in reports if name in r.stage_seconds)
                for name in stage_names
            },
        },
    }


def format_report_table(doc: dict) -> str:
    rows = doc["programs"]
    headers = ["program", "equiv", "detection", "overhead%", "clbs", "coverage"]
    table = [headers]
    for r in rows:
        table.append([
            r["program"],
            r["equivalence"],
            str(r["detection"]),
            f"{r['size_overhead_percent']:.2f}",
            str(r["clb_count"]),
            f"{r['coverage']:.3f}",
        ])
    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in table]
    agg = doc["aggregate"]
    lines.append("")
    lines.append(
        f"{agg['count']} programs | mean CLBs {agg['mean_clb_count']:.1f}"
        f" | mean overhead {agg['mean_size_overhead_percent']:.2f}%"
        f" | mean coverage {agg['mean_coverage']:.3f}"
    )
    lines.append(f"detection histogram: {agg['detection_histogram']}")
    return "\n".join(lines) + "\n"
