import pytest
from hypothesis import given
from hypothesis import strategies as st

from clbforge.attack import find_strings, tamper_bytes, tamper_strings
from clbforge.elf import load_image
from clbforge.errors import NotEnoughStrings, UnknownSection

from fixture_elf import make_patch_fixture


class TestFindStrings:
    def test_finds_known_string(self):
        blob = b"\x00\x01RIOT native interrupts/signals initialized\x00\x02"
        sites = find_strings(blob, 8)
        assert len(sites) == 1
        assert sites[0].data == b"RIOT native interrupts/signals initialized"
        assert sites[0].offset == 2

    def test_all_binary_empty(self):
        assert find_strings(bytes(range(0, 31)) * 8, 8) == []

    def test_threshold_excludes_short_runs(self):
        blob = b"\x00abcdefg\x00abcdefgh\x00"
        sites = find_strings(blob, 8)
        assert [s.data for s in sites] == [b"abcdefgh"]

    def test_runs_are_maximal_and_ordered(self):
        blob = b"\xffhello world\xff\x00goodbye cruel world\x01"
        sites = find_strings(blob, 8)
        assert [s.data for s in sites] == [b"hello world", b"goodbye cruel world"]
        assert sites[0].offset < sites[1].offset


class TestTamperStrings:
    BLOB = b"\x00" + b"first message here\x00" + b"\x7f\x80" + b"second message text\x00" + b"\x02"

    def test_zero_is_identity(self):
        out, report = tamper_strings(self.BLOB, seed=1, n=0)
        assert out == self.BLOB
        assert report.entries == []

    def test_same_seed_same_result(self):
        a, ra = tamper_strings(self.BLOB, seed=7, n=1)
        b, rb = tamper_strings(self.BLOB, seed=7, n=1)
        assert a == b
        assert ra.to_json() == rb.to_json()

    def test_replacement_padded_to_length(self):
        out, report = tamper_strings(self.BLOB, seed=3, n=2)
        assert len(out) == len(self.BLOB)
        for e in report.entries:
            assert len(e.original) == len(e.new)
            assert e.new.startswith(b"RIOT has been repackaged!"[:len(e.new)])

    def test_not_enough_strings(self):
        with pytest.raises(NotEnoughStrings):
            tamper_strings(self.BLOB, seed=1, n=5)

    def test_report_restores_original(self):
        out, report = tamper_strings(self.BLOB, seed=9, n=2)
        restored = bytearray(out)
        for e in report.entries:
            restored[e.offset:e.offset + len(e.original)] = e.original
        assert bytes(restored) == self.BLOB

    @given(st.binary(min_size=64, max_size=512), st.integers(0, 2**32 - 1))
    def test_size_preserved(self, blob, seed):
        sites = find_strings(blob, 8)
        n = min(len(sites), 2)
        out, _ = tamper_strings(blob, seed=seed, n=n)
        assert len(out) == len(blob)

    def test_within_ranges_restrict_target_pool(self):
        window = (1, 1 + len(b"first message here"))
        out, report = tamper_strings(self.BLOB, seed=4, n=1, within=[window])
        assert len(report.entries) == 1
        assert report.entries[0].offset == 1
        with pytest.raises(NotEnoughStrings):
            tamper_strings(self.BLOB, seed=4, n=2, within=[window])

    def test_within_excludes_straddling_sites(self):
        # a window cutting a string in half leaves no whole site inside it
        window = (1, 8)
        with pytest.raises(NotEnoughStrings):
            tamper_strings(self.BLOB, seed=4, n=1, within=[window])


class TestTamperBytes:
    def test_flips_inside_section(self):
        elf, keymap, layout = make_patch_fixture(2, seed=21)
        image = load_image(elf)
        out, report = tamper_bytes(elf, seed=5, n=3, section_name=".text",
                                   sections=image.sections)
        assert len(out) == len(elf)
        assert len(report.entries) == 3
        lo = image.text.offset
        hi = lo + image.text.size
        for e in report.entries:
            assert lo <= e.offset < hi
            assert out[e.offset] == elf[e.offset] ^ 0xFF

    def test_zero_identity(self):
        elf, _, _ = make_patch_fixture(1, seed=22)
        image = load_image(elf)
        out, report = tamper_bytes(elf, seed=5, n=0, section_name=".text",
                                   sections=image.sections)
        assert out == elf and report.entries == []

    def test_same_seed_same_flips(self):
        elf, _, _ = make_patch_fixture(1, seed=23)
        image = load_image(elf)
        a, ra = tamper_bytes(elf, seed=8, n=4, section_name=".text", sections=image.sections)
        b, rb = tamper_bytes(elf, seed=8, n=4, section_name=".text", sections=image.sections)
        assert a == b and ra.to_json() == rb.to_json()

    def test_unknown_section(self):
        elf, _, _ = make_patch_fixture(1, seed=24)
        image = load_image(elf)
        with pytest.raises(UnknownSection):
            tamper_bytes(elf, seed=1, n=1, section_name=".nope", sections=image.sections)

    def test_avoid_spans_respected(self):
        elf, keymap, layout = make_patch_fixture(2, seed=25)
        image = load_image(elf)
        avoid = [layout.file_span(f) for f in layout.ext_funs]
        out, report = tamper_bytes(elf, seed=3, n=20, section_name=".text",
                                   sections=image.sections, avoid=avoid)
        for e in report.entries:
            assert not any(a <= e.offset < a + s for a, s in avoid)

    def test_within_ranges_respected(self):
        elf, _, layout = make_patch_fixture(1, seed=26)
        image = load_image(elf)
        lo = image.text.offset
        window = [(lo + 4, lo + 24)]
        out, report = tamper_bytes(elf, seed=3, n=5, section_name=".text",
                                   sections=image.sections, within=window)
        for e in report.entries:
            assert window[0][0] <= e.offset < window[0][1]
