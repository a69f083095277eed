"""Rewrite eligible qualified conditions into encrypted logic bombs.

Per condition: the equality becomes a salted-hash comparison, the then-branch
body moves into an extracted function that opens with the self-checksum call
and three placeholder magics, and the call site decrypts the extracted
function exactly once before jumping into it. The secret material for the
post-compile patching step is collected into a keymap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .crypto import CIPHER_ID, HASH_ID, cond_hash, derive_salt, key_bytes
from .errors import OverlappingEdits, RewriteAmbiguity, TooManyClbs
from .source_model import Eligibility, QualifiedCondition, TranslationUnit

MAGIC_OFFSET = 0x0FF53701
MAGIC_COUNT = 0xB17E5010
MAGIC_CONTROL = 0x89ABCDEF
LEN_MAGIC_BASE = 0xC0DE0000

PROTECTED_MARKER = b"clbforge-protected"
EMIT_PREFIX = "__clb_"

_RUNTIME_PATH = Path(__file__).parent / "runtime" / "clb_runtime.c"


def runtime_support_text() -> bytes:
    return _RUNTIME_PATH.read_bytes()


def is_protected_source(data: bytes) -> bool:
    return PROTECTED_MARKER in data or EMIT_PREFIX.encode() in data


@dataclass
class ClbRecord:
    clb_id: int
    file: str
    offset: int  # byte offset of the condition in the original source
    caller_symbol: str
    ext_symbol: str
    key: int  # the QC constant, signed 32-bit
    salt: bytes
    hconst: int
    len_magic: int

    def __post_init__(self):
        if self.hconst != cond_hash(self.key, self.salt):
            raise ValueError(f"inconsistent record {self.clb_id}: hconst does not match key/salt")


@dataclass
class Keymap:
    version: str
    hash_id: str
    cipher_id: str
    seed: int
    records: list[ClbRecord] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "version": self.version,
            "config": {"hash": self.hash_id, "cipher": self.cipher_id, "seed": self.seed},
            "clbs": [
                {
                    "id": r.clb_id,
                    "file": r.file,
                    "offset": r.offset,
                    "caller": r.caller_symbol,
                    "ext_symbol": r.ext_symbol,
                    "key_hex": key_bytes(r.key).hex(),
                    "salt_hex": r.salt.hex(),
                    "hconst_hex": f"{r.hconst:08x}",
                    "len_magic_hex": f"{r.len_magic:08x}",
                }
                for r in self.records
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Keymap":
        doc = json.loads(text)
        km = cls(
            version=doc["version"],
            hash_id=doc["config"]["hash"],
            cipher_id=doc["config"]["cipher"],
            seed=doc["config"]["seed"],
        )
        for c in doc["clbs"]:
            key = int.from_bytes(bytes.fromhex(c["key_hex"]), "little")
            key = ((key & 0xFFFFFFFF) ^ 0x80000000) - 0x80000000
            km.records.append(ClbRecord(
                clb_id=c["id"],
                file=c["file"],
                offset=c["offset"],
                caller_symbol=c["caller"],
                ext_symbol=c["ext_symbol"],
                key=key,
                salt=bytes.fromhex(c["salt_hex"]),
                hconst=int(c["hconst_hex"], 16),
                len_magic=int(c["len_magic_hex"], 16),
            ))
        return km

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="ascii")

    @classmethod
    def load(cls, path) -> "Keymap":
        return cls.from_json(Path(path).read_text(encoding="ascii"))


@dataclass(frozen=True)
class SourceEdit:
    file: str
    start: int
    end: int
    replacement: bytes


def plan_clbs(eligible: list[tuple[TranslationUnit, QualifiedCondition]], seed: int) -> Keymap:
    if len(eligible) >= 65536:
        raise TooManyClbs(f"{len(eligible)} logic bombs exceed the 16-bit id space")
    ordered = sorted(eligible, key=lambda pair: (pair[0].path, pair[1].cond_span[0]))
    km = Keymap(version=__version__, hash_id=HASH_ID, cipher_id=CIPHER_ID, seed=seed)
    for clb_id, (tu, qc) in enumerate(ordered):
        salt = derive_salt(seed, clb_id)
        km.records.append(ClbRecord(
            clb_id=clb_id,
            file=tu.path,
            offset=qc.cond_span[0],
            caller_symbol=qc.enclosing.name,
            ext_symbol=f"{EMIT_PREFIX}ext_{clb_id}_{qc.enclosing.name}",
            key=qc.const_value,
            salt=salt,
            hconst=cond_hash(qc.const_value, salt),
            len_magic=LEN_MAGIC_BASE | clb_id,
        ))
    return km


def rewrite_condition(qc: QualifiedCondition, record: ClbRecord) -> SourceEdit:
    salt_word = int.from_bytes(record.salt, "little")
    text = f"clb_hash({qc.var_expr}, 0x{salt_word:08x}u) == 0x{record.hconst:08x}u"
    return SourceEdit(qc.tu.path, qc.cond_span[0], qc.cond_span[1], text.encode("ascii"))


def extract_body(qc: QualifiedCondition, record: ClbRecord,
                 eligibility: Eligibility) -> tuple[bytes, SourceEdit, bytes]:
    """Build the extracted function, the call-site edit, and the prototype."""
    if not eligibility.eligible:
        raise RewriteAmbiguity(f"QC {qc.qc_id} in {qc.tu.path} is not eligible")

    body = _indirect_body(qc, eligibility)
    cid = record.clb_id

    params = ", ".join(f"{v.type_text} *{EMIT_PREFIX}p_{v.name}" for v in qc.free_vars)
    signature = f"void {record.ext_symbol}({params or 'void'})"
    ext_fun = (
        f"__attribute__((noinline, used)) {signature}\n"
        f"{{\n"
        f"    volatile unsigned {EMIT_PREFIX}off_{cid} = 0x{MAGIC_OFFSET:08x}u;\n"
        f"    volatile unsigned {EMIT_PREFIX}cnt_{cid} = 0x{MAGIC_COUNT:08x}u;\n"
        f"    volatile unsigned {EMIT_PREFIX}ctl_{cid} = 0x{MAGIC_CONTROL:08x}u;\n"
        f"    clb_at_check({EMIT_PREFIX}off_{cid}, {EMIT_PREFIX}cnt_{cid}, {EMIT_PREFIX}ctl_{cid});\n"
    ).encode("ascii") + body + b"\n}\n"

    args = ", ".join(f"&({v.name})" for v in qc.free_vars)
    call_site = (
        f" static int {EMIT_PREFIX}done_{cid} = 0;"
        f" volatile unsigned {EMIT_PREFIX}len_{cid} = 0x{record.len_magic:08x}u;"
        f" if (!{EMIT_PREFIX}done_{cid}) {{"
        f" clb_decrypt((void *)&{record.ext_symbol}, (unsigned *)&({qc.var_expr}),"
        f" {EMIT_PREFIX}len_{cid});"
        f" {EMIT_PREFIX}done_{cid} = 1;"
        f" }}"
        f" {record.ext_symbol}({args}); "
    )
    call_edit = SourceEdit(qc.tu.path, qc.body_span[0], qc.body_span[1], call_site.encode("ascii"))
    prototype = f"{signature};\n".encode("ascii")
    return ext_fun, call_edit, prototype


def _indirect_body(qc: QualifiedCondition, eligibility: Eligibility) -> bytes:
    """Original body bytes with every free-variable use routed through its pointer."""
    data = qc.tu.data
    lo, hi = qc.body_span
    out = bytearray()
    pos = lo
    for start, end, name in sorted(eligibility.occurrences):
        if start < pos or end > hi:
            raise RewriteAmbiguity(f"occurrence of {name} outside body span")
        out += data[pos:start]
        out += f"(*{EMIT_PREFIX}p_{name})".encode("ascii")
        pos = end
    out += data[pos:hi]
    return bytes(out)


def inject_runtime_support(tu: TranslationUnit) -> SourceEdit:
    return SourceEdit(tu.path, 0, 0, runtime_support_text() + b"\n")


def apply_edits(data: bytes, edits: list[SourceEdit]) -> bytes:
    ordered = sorted(edits, key=lambda e: (e.start, e.end))
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start < prev.end or (cur.start == prev.start and prev.start == prev.end and cur.start == cur.end):
            raise OverlappingEdits(
                f"edits [{prev.start},{prev.end}) and [{cur.start},{cur.end}) overlap"
            )
    out = bytearray(data)
    for e in sorted(ordered, key=lambda e: (e.start, e.end), reverse=True):
        out[e.start:e.end] = e.replacement
    return bytes(out)


def transform_unit(tu: TranslationUnit,
                   planned: list[tuple[QualifiedCondition, ClbRecord, Eligibility]]) -> bytes:
    """Apply all bombs of one translation unit; returns the protected source."""
    if not planned:
        return tu.data
    # insertions at the same byte position must merge into one edit
    inserts: dict[int, list[bytes]] = {0: [runtime_support_text() + b"\n"]}
    edits: list[SourceEdit] = []
    ext_defs: list[bytes] = []
    seen_protos: set[str] = set()

    for qc, record, elig in sorted(planned, key=lambda p: p[0].cond_span[0]):
        try:
            ext_fun, call_edit, prototype = extract_body(qc, record, elig)
        except RewriteAmbiguity as exc:
            exc.culprit = (tu.path, qc.cond_span[0])
            raise
        edits.append(rewrite_condition(qc, record))
        edits.append(call_edit)
        ext_defs.append(ext_fun)
        if record.ext_symbol not in seen_protos:
            seen_protos.add(record.ext_symbol)
            inserts.setdefault(qc.enclosing.span[0], []).append(prototype)

    inserts.setdefault(len(tu.data), []).append(b"\n" + b"\n".join(ext_defs))
    for pos, texts in inserts.items():
        edits.append(SourceEdit(tu.path, pos, pos, b"".join(texts)))
    return apply_edits(tu.data, edits)
