"""Post-link protection: patch placeholders, digest frontier regions, encrypt.

Processing alternates popping the lowest- and highest-address extracted
function that still awaits encryption. A low pop digests the code from the
start of .text up to the frontier of unprocessed functions; a high pop digests
from that frontier to the end of .text. Because every region excludes all
still-unprocessed functions and later steps only write inside those, every
digested byte range is final when it is hashed, and re-hashing the finished
file must reproduce every stored digest.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

from .crypto import fnv1a32, xor_cipher
from .elf import ExecutableImage, Section
from .errors import (
    AmbiguousPlaceholder,
    MissingPlaceholder,
    MissingSymbol,
    OverlappingSpans,
    PatchError,
    SpanOutsideText,
    ZeroSizeSymbol,
)
from .transformer import MAGIC_CONTROL, MAGIC_COUNT, MAGIC_OFFSET, ClbRecord, Keymap

FORWARD = "forward"
BACKWARD = "backward"


@dataclass(frozen=True)
class FunctionSpan:
    record: ClbRecord
    offset: int  # file offset
    size: int

    @property
    def end(self) -> int:
        return self.offset + self.size


@dataclass(frozen=True)
class PlaceholderSites:
    offset_site: int
    count_site: int
    control_site: int
    len_site: int


@dataclass(frozen=True)
class AtRegion:
    offset: int
    count: int
    digest: int


@dataclass
class FrontierState:
    unprocessed: list[FunctionSpan]  # sorted by offset
    text: Section

    @property
    def low(self) -> int:
        return self.unprocessed[0].offset if self.unprocessed else self.text.offset + self.text.size

    @property
    def high(self) -> int:
        return max(s.end for s in self.unprocessed) if self.unprocessed else self.text.offset

    def pop_lowest(self) -> FunctionSpan:
        return self.unprocessed.pop(0)

    def pop_highest(self) -> FunctionSpan:
        top = max(range(len(self.unprocessed)), key=lambda i: self.unprocessed[i].end)
        return self.unprocessed.pop(top)


@dataclass
class PatchEntry:
    record: ClbRecord
    span: FunctionSpan
    region: AtRegion
    direction: str


@dataclass
class PatchReport:
    entries: list[PatchEntry] = field(default_factory=list)
    coverage: float = 0.0
    text_offset: int = 0
    text_size: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "text": {"offset": self.text_offset, "size": self.text_size},
            "coverage": self.coverage,
            "warnings": self.warnings,
            "clbs": [
                {
                    "id": e.record.clb_id,
                    "symbol": e.record.ext_symbol,
                    "file_offset": e.span.offset,
                    "size": e.span.size,
                    "region_offset": e.region.offset,
                    "region_count": e.region.count,
                    "digest_hex": f"{e.region.digest:08x}",
                    "direction": e.direction,
                }
                for e in self.entries
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


@dataclass
class VerifyEntry:
    clb_id: int
    symbol: str
    ok: bool
    detail: str = ""
    region: tuple[int, int] = (0, 0)
    digest: int = 0


@dataclass
class VerifyReport:
    entries: list[VerifyEntry] = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def to_json(self) -> str:
        doc = {
            "all_ok": self.all_ok,
            "clbs": [
                {
                    "id": e.clb_id,
                    "symbol": e.symbol,
                    "ok": e.ok,
                    "detail": e.detail,
                    "region_offset": e.region[0],
                    "region_count": e.region[1],
                    "digest_hex": f"{e.digest:08x}",
                }
                for e in self.entries
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# locating


def locate_ext_functions(image: ExecutableImage, keymap: Keymap) -> list[FunctionSpan]:
    spans = []
    for record in keymap.records:
        candidates = image.symbols_named(record.ext_symbol)
        if not candidates:
            raise MissingSymbol(record.ext_symbol)
        if len(candidates) > 1:
            raise PatchError(f"symbol {record.ext_symbol} is not unique")
        sym = candidates[0]
        if sym.size == 0:
            raise ZeroSizeSymbol(record.ext_symbol)
        if not image.text.contains_addr(sym.value):
            raise SpanOutsideText(f"{record.ext_symbol} lies outside .text")
        offset = image.addr_to_offset(sym.value, image.text)
        if offset + sym.size > image.text.offset + image.text.size:
            raise SpanOutsideText(f"{record.ext_symbol} extends past .text")
        spans.append(FunctionSpan(record, offset, sym.size))

    ordered = sorted(spans, key=lambda s: s.offset)
    for a, b in zip(ordered, ordered[1:]):
        if b.offset < a.end:
            raise OverlappingSpans(
                f"{a.record.ext_symbol} and {b.record.ext_symbol} overlap"
            )
    return spans


def _find_all(data: bytes, pattern: bytes, start: int, end: int) -> list[int]:
    hits = []
    i = data.find(pattern, start, end)
    while i != -1:
        hits.append(i)
        i = data.find(pattern, i + 1, end)
    return hits


def locate_placeholders(image: ExecutableImage, span: FunctionSpan,
                        record: ClbRecord) -> PlaceholderSites:
    data = image.data
    sites = {}
    for kind, magic in (("offset", MAGIC_OFFSET), ("count", MAGIC_COUNT), ("control", MAGIC_CONTROL)):
        hits = _find_all(data, struct.pack("<I", magic), span.offset, span.end)
        if not hits:
            raise MissingPlaceholder(kind, record.ext_symbol)
        if len(hits) > 1:
            raise AmbiguousPlaceholder(kind, record.ext_symbol)
        sites[kind] = hits[0]

    callers = image.symbols_named(record.caller_symbol)
    callers = [c for c in callers if c.is_func and c.size > 0] or callers
    if not callers:
        raise MissingSymbol(record.caller_symbol)
    len_hits = []
    pattern = struct.pack("<I", record.len_magic)
    for caller in callers:
        if not image.text.contains_addr(caller.value):
            continue
        c_off = image.addr_to_offset(caller.value, image.text)
        len_hits += _find_all(data, pattern, c_off, c_off + caller.size)
    if not len_hits:
        raise MissingPlaceholder("len", record.caller_symbol)
    if len(len_hits) > 1:
        raise AmbiguousPlaceholder("len", record.caller_symbol)

    return PlaceholderSites(sites["offset"], sites["count"], sites["control"], len_hits[0])


# ---------------------------------------------------------------------------
# region selection


def select_region(frontier: FrontierState, direction: str,
                  text: Section, min_region_bytes: int = 16) -> tuple[int, int, str, bool]:
    """(offset, count, effective direction, warned) for the next digest region."""
    t0 = text.offset
    t1 = text.offset + text.size
    forward = (t0, frontier.low - t0)
    backward = (frontier.high, t1 - frontier.high)
    primary, alt = (forward, backward) if direction == FORWARD else (backward, forward)
    primary_dir = direction
    alt_dir = BACKWARD if direction == FORWARD else FORWARD
    if primary[1] >= min_region_bytes:
        return primary[0], primary[1], primary_dir, False
    if alt[1] >= min_region_bytes:
        return alt[0], alt[1], alt_dir, False
    if alt[1] > primary[1]:
        return alt[0], alt[1], alt_dir, True
    return primary[0], primary[1], primary_dir, True


def plan_processing(text: Section, spans: list[FunctionSpan],
                    min_region_bytes: int = 16) -> list[tuple[FunctionSpan, str, int, int, bool]]:
    """Deterministic processing schedule: (span, direction, offset, count, warned)."""
    frontier = FrontierState(sorted(spans, key=lambda s: s.offset), text)
    schedule = []
    pick_low = True
    while frontier.unprocessed:
        want = FORWARD if pick_low else BACKWARD
        offset, count, used, warned = select_region(frontier, want, text, min_region_bytes)
        span = frontier.pop_lowest() if pick_low else frontier.pop_highest()
        schedule.append((span, used, offset, count, warned))
        pick_low = not pick_low
    return schedule


# ---------------------------------------------------------------------------
# pipeline


def patch_lengths(buf: bytearray, spans: list[FunctionSpan],
                  sites: dict[int, PlaceholderSites]) -> None:
    """Phase A: write each extracted function's true size over its len magic."""
    for span in spans:
        site = sites[span.record.clb_id].len_site
        buf[site:site + 4] = struct.pack("<I", span.size)


def run_pipeline(image: ExecutableImage, keymap: Keymap,
                 min_region_bytes: int = 16) -> tuple[ExecutableImage, PatchReport]:
    """All-or-nothing: any locate failure aborts before a single byte changes."""
    spans = locate_ext_functions(image, keymap)
    sites = {s.record.clb_id: locate_placeholders(image, s, s.record) for s in spans}

    for span in spans:
        len_site = sites[span.record.clb_id].len_site
        for other in spans:
            if other.offset <= len_site < other.end:
                raise PatchError(
                    f"len placeholder of clb {span.record.clb_id} lies inside {other.record.ext_symbol}"
                )

    buf = bytearray(image.data)
    patch_lengths(buf, spans, sites)

    report = PatchReport(text_offset=image.text.offset, text_size=image.text.size)
    covered: list[tuple[int, int]] = []
    for span, direction, offset, count, warned in plan_processing(
            image.text, spans, min_region_bytes):
        digest = fnv1a32(bytes(buf[offset:offset + count]))
        if warned:
            report.warnings.append(
                f"clb {span.record.clb_id}: both regions below {min_region_bytes} bytes"
            )
        site = sites[span.record.clb_id]
        buf[site.offset_site:site.offset_site + 4] = struct.pack("<I", offset)
        buf[site.count_site:site.count_site + 4] = struct.pack("<I", count)
        buf[site.control_site:site.control_site + 4] = struct.pack("<I", digest)
        buf[span.offset:span.end] = xor_cipher(bytes(buf[span.offset:span.end]), span.record.key)
        report.entries.append(PatchEntry(span.record, span, AtRegion(offset, count, digest), direction))
        covered.append((offset, offset + count))

    report.coverage = _union_size(covered) / image.text.size if image.text.size else 0.0
    return image.with_data(bytes(buf)), report


def _union_size(ranges: list[tuple[int, int]]) -> int:
    total = 0
    last_end = None
    for start, end in sorted(r for r in ranges if r[1] > r[0]):
        if last_end is None or start >= last_end:
            total += end - start
            last_end = end
        elif end > last_end:
            total += end - last_end
            last_end = end
    return total


# ---------------------------------------------------------------------------
# verification


def verify(image: ExecutableImage, keymap: Keymap,
           min_region_bytes: int = 16) -> VerifyReport:
    """Check a patched image: stored digests must match the final file bytes.

    Regions are re-derived from the schedule (pure), but every digest is
    recomputed from the file as it is now, which is exactly the finality claim.
    """
    report = VerifyReport()
    try:
        spans = locate_ext_functions(image, keymap)
    except PatchError as exc:
        for record in keymap.records:
            report.entries.append(VerifyEntry(record.clb_id, record.ext_symbol, False, str(exc)))
        return report

    schedule = {s.record.clb_id: (d, o, c) for s, d, o, c, _ in
                plan_processing(image.text, spans, min_region_bytes)}

    for span in sorted(spans, key=lambda s: s.record.clb_id):
        record = span.record
        direction, offset, count = schedule[record.clb_id]
        digest = fnv1a32(image.data[offset:offset + count])
        decrypted = xor_cipher(image.data[span.offset:span.end], record.key)

        problems = []
        for kind, value in (("offset", offset), ("count", count), ("control", digest)):
            if struct.pack("<I", value) not in decrypted:
                problems.append(f"{kind} value not present in decrypted body")
        for kind, magic in (("offset", MAGIC_OFFSET), ("count", MAGIC_COUNT), ("control", MAGIC_CONTROL)):
            if struct.pack("<I", magic) in decrypted:
                problems.append(f"{kind} magic still present after patching")

        report.entries.append(VerifyEntry(
            record.clb_id, record.ext_symbol,
            ok=not problems,
            detail="; ".join(problems),
            region=(offset, count),
            digest=digest,
        ))
    return report
