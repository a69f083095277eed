import random
import struct
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clbforge.crypto import (
    cond_hash,
    derive_salt,
    fnv1a32,
    key_bytes,
    read_golden_vectors,
    write_golden_vectors,
    xor_cipher,
)


def reference_fnv1a32(data: bytes) -> int:
    """Independent oracle: the textbook loop, kept separate from the package."""
    h = 0x811C9DC5
    for b in data:
        h = ((h ^ b) * 0x01000193) & 0xFFFFFFFF
    return h


def test_known_vectors():
    assert fnv1a32(b"") == 0x811C9DC5
    assert fnv1a32(b"a") == 0xE40C292C
    assert fnv1a32(b"foobar") == 0xBF9CF968


def test_matches_reference_on_random_inputs():
    rng = random.Random(1)
    for _ in range(50):
        data = rng.randbytes(rng.randrange(0, 64))
        assert fnv1a32(data) == reference_fnv1a32(data)


@given(st.binary(max_size=256))
def test_matches_reference_property(data):
    assert fnv1a32(data) == reference_fnv1a32(data)


def test_cond_hash_is_salt_then_value():
    assert cond_hash(0, b"\x00" * 4) == reference_fnv1a32(bytes(8))
    assert cond_hash(5, bytes([0xAA, 0xBB, 0xCC, 0xDD])) == reference_fnv1a32(
        bytes([0xAA, 0xBB, 0xCC, 0xDD, 0x05, 0, 0, 0])
    )


def test_cond_hash_negative_value_uses_twos_complement():
    assert cond_hash(-1, b"\x01\x02\x03\x04") == reference_fnv1a32(
        b"\x01\x02\x03\x04" + b"\xff\xff\xff\xff"
    )


def test_cond_hash_rejects_bad_salt():
    with pytest.raises(ValueError):
        cond_hash(1, b"\x00" * 3)


def test_key_bytes_round_trip():
    assert key_bytes(5) == b"\x05\x00\x00\x00"
    assert key_bytes(-1) == b"\xff\xff\xff\xff"
    for v in (0, 1, -5, 0x7FFFFFFF, -0x80000000):
        back = int.from_bytes(key_bytes(v), "little")
        assert back == v & 0xFFFFFFFF


def test_xor_hand_oracle():
    data = bytes([0x01, 0x02, 0x03, 0x04, 0x05])
    key = int.from_bytes(bytes([0xAA, 0xBB, 0xCC, 0xDD]), "little")
    assert xor_cipher(data, key) == bytes([0xAB, 0xB9, 0xCF, 0xD9, 0xAF])


def test_xor_zero_key_is_identity():
    data = bytes(range(256))
    assert xor_cipher(data, 0) == data


@given(st.binary(max_size=512), st.integers(min_value=-(2**31), max_value=2**31 - 1))
def test_xor_involution(data, key):
    assert xor_cipher(xor_cipher(data, key), key) == data


def test_derive_salt_deterministic_and_distinct():
    assert derive_salt(0, 0) == derive_salt(0, 0)
    assert len(derive_salt(0, 0)) == 4
    assert derive_salt(0, 0) == struct.pack("<I", reference_fnv1a32(bytes(12)))
    assert derive_salt(0, 0) != derive_salt(0, 1)
    assert derive_salt(0, 1) != derive_salt(1, 1)


@given(st.integers(min_value=0, max_value=2**64 - 1), st.integers(min_value=0, max_value=2**32 - 1))
def test_derive_salt_matches_reference(seed, clb_id):
    expected = reference_fnv1a32(struct.pack("<QI", seed, clb_id))
    assert derive_salt(seed, clb_id) == struct.pack("<I", expected)


def test_shared_golden_file_agrees_with_toolchain():
    """The committed cross-boundary vector file must match this implementation."""
    shared = Path(__file__).parent.parent / "firmware" / "golden" / "fnv_vectors.txt"
    if not shared.is_file():
        pytest.skip("shared golden-vector file not present")
    vectors = read_golden_vectors(shared)
    assert len(vectors) >= 23
    for data, algorithm, digest in vectors:
        assert algorithm == "fnv1a32"
        assert fnv1a32(data) == digest
        if len(data) == 8:
            salt, value = data[:4], int.from_bytes(data[4:], "little")
            assert cond_hash(value, salt) == digest


def test_golden_vector_file_round_trip(tmp_path):
    rng = random.Random(7)
    vectors = [(b"", "fnv1a32", fnv1a32(b""))]
    for _ in range(10):
        data = rng.randbytes(rng.randrange(1, 32))
        vectors.append((data, "fnv1a32", fnv1a32(data)))
    path = tmp_path / "vectors.txt"
    write_golden_vectors(path, vectors)
    loaded = read_golden_vectors(path)
    assert loaded == vectors
    for data, _alg, digest in loaded:
        assert reference_fnv1a32(data) == digest
