"""Simulated repackaging attacks on compiled binaries.

String mode mirrors the classic repackaging move: find printable runs and
replace a random set of them with a same-length defacement. Byte mode is a
stronger raw-flip variant for coverage measurement. Both preserve file size,
and the report is enough to reconstruct the original file exactly.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field

from .errors import NotEnoughStrings, UnknownSection

DEFAULT_REPLACEMENT = b"RIOT has been repackaged!"

_PRINTABLE_RUN = re.compile(rb"[\x20-\x7e]+")


@dataclass(frozen=True)
class StringSite:
    offset: int
    length: int
    data: bytes


@dataclass
class TamperEntry:
    offset: int
    original: bytes
    new: bytes


@dataclass
class TamperReport:
    mode: str
    seed: int
    entries: list[TamperEntry] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "mode": self.mode,
            "seed": self.seed,
            "changes": [
                {"offset": e.offset, "original_hex": e.original.hex(), "new_hex": e.new.hex()}
                for e in self.entries
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def find_strings(data: bytes, min_len: int = 8) -> list[StringSite]:
    """Maximal printable ASCII runs of at least min_len bytes, in offset order."""
    sites = []
    for m in _PRINTABLE_RUN.finditer(data):
        if m.end() - m.start() >= min_len:
            sites.append(StringSite(m.start(), m.end() - m.start(), m.group()))
    return sites


def tamper_strings(data: bytes, seed: int, n: int, min_len: int = 8,
                   replacement: bytes = DEFAULT_REPLACEMENT,
                   within: list[tuple[int, int]] | None = None) -> tuple[bytes, TamperReport]:
    """within: optional file ranges restricting the target pool, e.g. the
    payload sections of an ELF so the attack defaces program content rather
    than loader metadata that would keep the binary from starting at all."""
    sites = find_strings(data, min_len)
    if within is not None:
        sites = [s for s in sites
                 if any(a <= s.offset and s.offset + s.length <= b for a, b in within)]
    if n > len(sites):
        raise NotEnoughStrings(f"requested {n} strings, found {len(sites)}")
    rng = random.Random(seed)
    chosen = sorted(rng.sample(range(len(sites)), n))
    out = bytearray(data)
    report = TamperReport("strings", seed)
    for idx in chosen:
        site = sites[idx]
        new = replacement[:site.length].ljust(site.length, b" ")
        out[site.offset:site.offset + site.length] = new
        report.entries.append(TamperEntry(site.offset, site.data, new))
    return bytes(out), report


def tamper_bytes(data: bytes, seed: int, n: int, section_name: str,
                 sections, avoid: list[tuple[int, int]] | None = None,
                 within: list[tuple[int, int]] | None = None) -> tuple[bytes, TamperReport]:
    """Flip n single bytes (XOR 0xFF) inside the named section.

    avoid: (offset, size) file ranges never touched, e.g. encrypted function
    spans, so a detection is attributable to a digest mismatch rather than to
    garbage decrypted code. within: restrict flips to these file ranges.
    """
    sec = next((s for s in sections if s.name == section_name), None)
    if sec is None:
        raise UnknownSection(section_name)
    lo, hi = sec.offset, sec.offset + sec.size

    def allowed(off: int) -> bool:
        if not lo <= off < hi:
            return False
        if avoid and any(a <= off < a + s for a, s in avoid):
            return False
        if within is not None and not any(a <= off < b for a, b in within):
            return False
        return True

    candidates = [off for off in range(lo, hi) if allowed(off)]
    if len(candidates) < n:
        raise NotEnoughStrings(f"only {len(candidates)} flippable bytes available")
    rng = random.Random(seed)
    chosen = sorted(rng.sample(candidates, n)) if n else []
    out = bytearray(data)
    report = TamperReport("bytes", seed)
    for off in chosen:
        original = bytes([out[off]])
        out[off] ^= 0xFF
        report.entries.append(TamperEntry(off, original, bytes([out[off]])))
    return bytes(out), report
