import pytest
from hypothesis import given
from hypothesis import strategies as st

from clbforge.config import Config
from clbforge.crypto import cond_hash, derive_salt
from clbforge.errors import OverlappingEdits, TooManyClbs
from clbforge.lexer import tokenize
from clbforge.source_model import (
    check_eligibility,
    collect_macros,
    find_qualified_conditions,
    parse_translation_unit,
)
from clbforge.transformer import (
    Keymap,
    SourceEdit,
    apply_edits,
    extract_body,
    is_protected_source,
    plan_clbs,
    rewrite_condition,
    runtime_support_text,
    transform_unit,
)

EXAMPLE = b"""\
#define CONST 7

int funA(int val);

void funB(int val) {
    int a = 0;
    a = funA(val);
    if (a == CONST) {
        int res = funA(val);
        printf("The result is %d\\n", res);
    }
}
"""


def scan(src: bytes, path="main.c"):
    tu = parse_translation_unit(tokenize(src, path))
    tu.macros = collect_macros(tu)
    qcs = find_qualified_conditions(tu, tu.macros, Config())
    return tu, [(qc, check_eligibility(qc)) for qc in qcs]


def planned(src: bytes, seed=0, path="main.c"):
    tu, pairs = scan(src, path)
    eligible = [(qc, e) for qc, e in pairs if e.eligible]
    km = plan_clbs([(tu, qc) for qc, _ in eligible], seed)
    return tu, [(qc, rec, e) for (qc, e), rec in zip(eligible, km.records)], km


class TestPlan:
    def test_empty(self):
        km = plan_clbs([], seed=1)
        assert km.records == []

    def test_example_record(self):
        _, items, km = planned(EXAMPLE, seed=5)
        assert len(km.records) == 1
        rec = km.records[0]
        assert rec.key == 7
        assert rec.salt == derive_salt(5, 0)
        assert rec.hconst == cond_hash(7, derive_salt(5, 0))
        assert rec.ext_symbol == "__clb_ext_0_funB"
        assert rec.caller_symbol == "funB"
        assert rec.len_magic == 0xC0DE0000

    def test_deterministic_keymap(self):
        _, _, km1 = planned(EXAMPLE, seed=9)
        _, _, km2 = planned(EXAMPLE, seed=9)
        assert km1.to_json() == km2.to_json()

    def test_ordering_by_path_then_offset(self):
        tu_b, pairs_b = scan(b"void f(int a) { if (a == 1) { a = 0; } }", path="b.c")
        tu_a, pairs_a = scan(b"void g(int a) { if (a == 2) { a = 0; } }", path="a.c")
        km = plan_clbs([(tu_b, pairs_b[0][0]), (tu_a, pairs_a[0][0])], seed=0)
        assert [r.file for r in km.records] == ["a.c", "b.c"]
        assert [r.clb_id for r in km.records] == [0, 1]

    def test_too_many(self):
        tu, pairs = scan(b"void f(int a) { if (a == 1) { a = 0; } }")
        with pytest.raises(TooManyClbs):
            plan_clbs([(tu, pairs[0][0])] * 65536, seed=0)

    def test_keymap_round_trip(self, tmp_path):
        _, _, km = planned(EXAMPLE, seed=3)
        path = tmp_path / "keymap.json"
        km.save(path)
        loaded = Keymap.load(path)
        assert loaded.to_json() == km.to_json()
        assert loaded.records[0].salt == km.records[0].salt
        assert loaded.records[0].key == km.records[0].key

    def test_corrupted_keymap_rejected(self, tmp_path):
        import json
        _, _, km = planned(EXAMPLE, seed=3)
        doc = json.loads(km.to_json())
        doc["clbs"][0]["hconst_hex"] = "00000000"
        with pytest.raises(ValueError):
            Keymap.from_json(json.dumps(doc))


class TestRewriteCondition:
    def test_form(self):
        tu, items, _ = planned(EXAMPLE)
        qc, rec, _ = items[0]
        edit = rewrite_condition(qc, rec)
        salt_word = int.from_bytes(rec.salt, "little")
        assert edit.replacement == (
            f"clb_hash(a, 0x{salt_word:08x}u) == 0x{rec.hconst:08x}u".encode()
        )
        assert (edit.start, edit.end) == qc.cond_span

    def test_reversed_operands_normalized(self):
        tu, items, _ = planned(b"void f(int a) { if (7 == a) { a = 0; } }")
        qc, rec, _ = items[0]
        edit = rewrite_condition(qc, rec)
        assert edit.replacement.startswith(b"clb_hash(a, ")

    def test_hconst_literal_round_trips(self):
        _, items, _ = planned(EXAMPLE)
        qc, rec, _ = items[0]
        edit = rewrite_condition(qc, rec)
        literal = edit.replacement.rsplit(b"== ", 1)[1]
        assert int(literal.rstrip(b"u"), 16) == rec.hconst


class TestExtractBody:
    def test_example_shape(self):
        _, items, _ = planned(EXAMPLE)
        qc, rec, elig = items[0]
        ext, call_edit, proto = extract_body(qc, rec, elig)
        assert b"void __clb_ext_0_funB(int *__clb_p_val)" in ext
        assert b"volatile unsigned __clb_off_0 = 0x0ff53701u;" in ext
        assert b"volatile unsigned __clb_cnt_0 = 0xb17e5010u;" in ext
        assert b"volatile unsigned __clb_ctl_0 = 0x89abcdefu;" in ext
        assert b"clb_at_check(__clb_off_0, __clb_cnt_0, __clb_ctl_0);" in ext
        assert b"funA((*__clb_p_val))" in ext
        assert b"__attribute__((noinline, used))" in ext
        assert proto == b"void __clb_ext_0_funB(int *__clb_p_val);\n"

    def test_call_site(self):
        _, items, _ = planned(EXAMPLE)
        qc, rec, elig = items[0]
        _, call_edit, _ = extract_body(qc, rec, elig)
        text = call_edit.replacement
        assert b"clb_decrypt((void *)&__clb_ext_0_funB, (unsigned *)&(a), __clb_len_0)" in text
        assert b"volatile unsigned __clb_len_0 = 0xc0de0000u;" in text
        assert b"__clb_ext_0_funB(&(val));" in text
        assert b"__clb_done_0" in text
        assert (call_edit.start, call_edit.end) == qc.body_span

    def test_zero_free_vars(self):
        _, items, _ = planned(b"int g;\nvoid f(int a) { if (a == 3) { g = 1; } }")
        qc, rec, elig = items[0]
        ext, call_edit, proto = extract_body(qc, rec, elig)
        assert b"(void)\n" in ext
        assert rec.ext_symbol.encode() + b"();" in call_edit.replacement


class TestApplyEdits:
    def test_no_edits_identity(self):
        assert apply_edits(b"hello", []) == b"hello"

    def test_mid_file_replacement_preserves_rest(self):
        out = apply_edits(b"aaa<old>bbb", [SourceEdit("f", 3, 8, b"<new!>")])
        assert out == b"aaa<new!>bbb"

    def test_overlap_rejected(self):
        with pytest.raises(OverlappingEdits):
            apply_edits(b"0123456789", [
                SourceEdit("f", 0, 5, b"x"),
                SourceEdit("f", 4, 6, b"y"),
            ])

    def test_same_point_double_insert_rejected(self):
        with pytest.raises(OverlappingEdits):
            apply_edits(b"ab", [SourceEdit("f", 1, 1, b"x"), SourceEdit("f", 1, 1, b"y")])

    def test_insert_and_replace_at_same_start(self):
        out = apply_edits(b"abcd", [SourceEdit("f", 1, 3, b"XY"), SourceEdit("f", 1, 1, b"_")])
        assert out == b"a_XYd"

    @given(st.binary(min_size=8, max_size=64), st.data())
    def test_bytes_outside_spans_preserved(self, data, draw):
        cuts = sorted(draw.draw(st.sets(st.integers(0, len(data)), min_size=2, max_size=6)))
        spans = list(zip(cuts, cuts[1:]))[::2]  # disjoint [start, end) pairs
        edits = [SourceEdit("f", a, b, b"@" * draw.draw(st.integers(0, 5)))
                 for a, b in spans]
        out = apply_edits(data, edits)
        expected = bytearray(data)
        for e in sorted(edits, key=lambda e: (e.start, e.end), reverse=True):
            expected[e.start:e.end] = e.replacement
        assert out == bytes(expected)
        # prefix before the first edit and suffix after the last survive verbatim
        if spans:
            assert out[:spans[0][0]] == data[:spans[0][0]]
            tail = len(data) - spans[-1][1]
            if tail:
                assert out[-tail:] == data[-tail:]


class TestTransformUnit:
    def test_helpers_injected_once_for_many_bombs(self):
        src = b"""\
void f(int a) {
    if (a == 1) { a = 10; }
    if (a == 2) { a = 20; }
    if (a == 3) { a = 30; }
}
"""
        tu, items, _ = planned(src)
        assert len(items) == 3
        out = transform_unit(tu, items)
        assert out.count(b"static unsigned clb_hash(unsigned x, unsigned salt)") == 1
        assert out.count(b"static void clb_decrypt(void *fun, unsigned *key, unsigned len)") == 1
        assert out.count(b"static void clb_at_check(unsigned offset, unsigned count, unsigned control)") == 1
        assert out.count(b"__clb_ext_0_f") >= 2  # prototype + definition + call site
        assert out.count(b"clb_at_check(__clb_off_") == 3

    def test_zero_bombs_no_edit(self):
        tu, items, _ = planned(b"void f(int a) { a++; }")
        assert items == []
        assert transform_unit(tu, items) == tu.data

    def test_marker_detected_on_output(self):
        tu, items, _ = planned(EXAMPLE)
        out = transform_unit(tu, items)
        assert is_protected_source(out)
        assert not is_protected_source(EXAMPLE)

    def test_original_bytes_outside_spans_preserved(self):
        tu, items, _ = planned(EXAMPLE)
        out = transform_unit(tu, items)
        assert b"a = funA(val);" in out  # untouched statement survives verbatim
        assert b"#define CONST 7" in out

    def test_runtime_template_fixed_signatures(self):
        text = runtime_support_text()
        assert b"static unsigned clb_hash(unsigned x, unsigned salt)" in text
        assert b"static void clb_decrypt(void *fun, unsigned *key, unsigned len)" in text
        assert b"static void clb_at_check(unsigned offset, unsigned count, unsigned control)" in text
