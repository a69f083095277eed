"""Hash, cipher, and salt derivation shared by the toolchain and the injected C runtime.

The C helpers compiled into protected firmware must produce bit-identical
results; the shared golden-vector file is the cross-boundary contract.
"""

from __future__ import annotations

import struct

FNV_OFFSET_BASIS = 0x811C9DC5
FNV_PRIME = 0x01000193

HASH_ID = "fnv1a32"
CIPHER_ID = "xor32"


def fnv1a32_update(data: bytes, h: int) -> int:
    """Fold data into a running FNV-1a state (32-bit)."""
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & 0xFFFFFFFF
    return h


def fnv1a32(data: bytes) -> int:
    """FNV-1a 32-bit digest of data."""
    return fnv1a32_update(data, FNV_OFFSET_BASIS)


def key_bytes(value: int) -> bytes:
    """4-byte little-endian encoding of a 32-bit key (the QC constant)."""
    return struct.pack("<I", value & 0xFFFFFFFF)


def cond_hash(x: int, salt: bytes) -> int:
    """Hash of a condition operand: digest of salt followed by the LE value bytes.

    The stored comparison constant of a logic bomb is cond_hash(const, salt).
    """
    if len(salt) != 4:
        raise ValueError("salt must be exactly 4 bytes")
    return fnv1a32_update(key_bytes(x), fnv1a32_update(salt, FNV_OFFSET_BASIS))


def xor_cipher(data: bytes, key: int) -> bytes:
    """XOR data with the repeating 4-byte key; its own inverse."""
    kb = key_bytes(key)
    return bytes(b ^ kb[i & 3] for i, b in enumerate(data))


def derive_salt(seed: int, clb_id: int) -> bytes:
    """Deterministic per-bomb 4-byte salt from the build seed and bomb id."""
    digest = fnv1a32(struct.pack("<QI", seed & 0xFFFFFFFFFFFFFFFF, clb_id & 0xFFFFFFFF))
    return struct.pack("<I", digest)


# --- golden-vector file -------------------------------------------------------
#
# Plain text, one vector per line: hex-input algorithm hex-output.
# An empty input is written as "-".

def write_golden_vectors(path, vectors: list[tuple[bytes, str, int]]) -> None:
    lines = []
    for data, algorithm, digest in vectors:
        hex_in = data.hex() if data else "-"
        lines.append(f"{hex_in} {algorithm} {digest:08x}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_golden_vectors(path) -> list[tuple[bytes, str, int]]:
    vectors = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            hex_in, algorithm, hex_out = line.split()
            data = b"" if hex_in == "-" else bytes.fromhex(hex_in)
            vectors.append((data, algorithm, int(hex_out, 16)))
    return vectors
