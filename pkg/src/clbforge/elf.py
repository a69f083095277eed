"""Minimal 64-bit little-endian ELF reader.

Only what post-link patching needs: section headers, the symbol table, and the
virtual-address to file-offset mapping of the executable code section. Anything
outside that supported shape is a hard error, not a degraded mode.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import NotElf, PatchError, SymbolsRequired, UnsupportedClassOrEndianness

ELF_MAGIC = b"\x7fELF"
SHT_SYMTAB = 2
SHT_NOBITS = 8
SHF_EXECINSTR = 0x4
STT_FUNC = 2


@dataclass(frozen=True)
class Section:
    index: int
    name: str
    sh_type: int
    flags: int
    addr: int
    offset: int
    size: int
    link: int

    @property
    def executable(self) -> bool:
        return bool(self.flags & SHF_EXECINSTR)

    def contains_addr(self, vaddr: int) -> bool:
        return self.addr <= vaddr < self.addr + self.size


@dataclass(frozen=True)
class Symbol:
    name: str
    value: int  # virtual address
    size: int
    shndx: int
    info: int

    @property
    def is_func(self) -> bool:
        return (self.info & 0xF) == STT_FUNC


@dataclass
class ExecutableImage:
    data: bytes
    sections: list[Section]
    symbols: list[Symbol]
    text: Section

    def section_by_name(self, name: str) -> Section | None:
        for s in self.sections:
            if s.name == name:
                return s
        return None

    def symbols_named(self, name: str) -> list[Symbol]:
        return [s for s in self.symbols if s.name == name]

    def addr_to_offset(self, vaddr: int, section: Section) -> int:
        if not section.contains_addr(vaddr):
            raise PatchError(f"address {vaddr:#x} outside section {section.name}")
        return vaddr - section.addr + section.offset

    def with_data(self, data: bytes) -> "ExecutableImage":
        """Same layout over patched bytes (patching never moves sections)."""
        if len(data) != len(self.data):
            raise PatchError("patched image changed size")
        return ExecutableImage(data, self.sections, self.symbols, self.text)


def load_sections(data: bytes) -> list[Section]:
    """Section headers only; works on stripped binaries (attack surface parsing)."""
    sections, _text = _parse_sections(data)
    return sections


def load_image(data: bytes) -> ExecutableImage:
    sections, text = _parse_sections(data)

    def cstr(table: bytes, off: int) -> str:
        end = table.find(b"\x00", off)
        if end == -1:
            end = len(table)
        return table[off:end].decode("latin-1")

    symtab = next((s for s in sections if s.sh_type == SHT_SYMTAB), None)
    if symtab is None:
        raise SymbolsRequired("no symbol table; build with symbols or pass an unstripped binary")
    if symtab.link >= len(sections):
        raise PatchError("symbol table has a bad string table link")
    strtab_sec = sections[symtab.link]
    strtab = data[strtab_sec.offset:strtab_sec.offset + strtab_sec.size]

    symbols = []
    count = symtab.size // 24
    for i in range(count):
        off = symtab.offset + i * 24
        st_name, st_info, _st_other, st_shndx = struct.unpack_from("<IBBH", data, off)
        st_value, st_size = struct.unpack_from("<QQ", data, off + 8)
        name = cstr(strtab, st_name)
        if name:
            symbols.append(Symbol(name, st_value, st_size, st_shndx, st_info))

    return ExecutableImage(bytes(data), sections, symbols, text)


def _parse_sections(data: bytes) -> tuple[list[Section], Section]:
    if len(data) < 64 or data[:4] != ELF_MAGIC:
        raise NotElf("not an ELF file")
    ei_class, ei_data = data[4], data[5]
    if ei_class != 2 or ei_data != 1:
        raise UnsupportedClassOrEndianness(
            f"only 64-bit little-endian ELF is supported (class={ei_class}, data={ei_data})"
        )
    e_shoff, = struct.unpack_from("<Q", data, 0x28)
    e_shentsize, e_shnum, e_shstrndx = struct.unpack_from("<HHH", data, 0x3A)
    if e_shoff == 0 or e_shnum == 0:
        raise PatchError("ELF has no section headers")
    if e_shentsize != 64:
        raise PatchError(f"unexpected section header entry size {e_shentsize}")
    if e_shoff + e_shnum * 64 > len(data):
        raise PatchError("section header table out of bounds")

    raw = []
    for i in range(e_shnum):
        off = e_shoff + i * 64
        sh_name, sh_type = struct.unpack_from("<II", data, off)
        sh_flags, sh_addr, sh_offset, sh_size = struct.unpack_from("<QQQQ", data, off + 8)
        sh_link, = struct.unpack_from("<I", data, off + 40)
        raw.append((sh_name, sh_type, sh_flags, sh_addr, sh_offset, sh_size, sh_link))

    if e_shstrndx >= e_shnum:
        raise PatchError("bad section name string table index")
    shstr_off, shstr_size = raw[e_shstrndx][4], raw[e_shstrndx][5]
    shstr = data[shstr_off:shstr_off + shstr_size]

    def cstr(table: bytes, off: int) -> str:
        end = table.find(b"\x00", off)
        if end == -1:
            end = len(table)
        return table[off:end].decode("latin-1")

    sections = [
        Section(i, cstr(shstr, r[0]), r[1], r[2], r[3], r[4], r[5], r[6])
        for i, r in enumerate(raw)
    ]

    text = None
    for s in sections:
        if s.name == ".text" and s.sh_type != SHT_NOBITS:
            text = s
            break
    if text is None:
        raise PatchError("no .text section")
    return sections, text
