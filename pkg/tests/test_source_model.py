import pytest

from clbforge.config import Config
from clbforge.errors import UnbalancedBraces
from clbforge.lexer import tokenize
from clbforge.source_model import (
    SkipReason,
    VarKind,
    check_eligibility,
    collect_macros,
    find_qualified_conditions,
    parse_translation_unit,
)

EXAMPLE = b"""\
#define CONST 7

int funA(int val);

void funB(int val) {
    int a = 0;
    a = funA(val);
    /* QC */
    if (a == CONST) {
        int res = funA(val);
        printf("The result is %d\\n", res);
    }
}
"""


def parse(src: bytes, path="test.c"):
    tu = parse_translation_unit(tokenize(src, path))
    tu.macros = collect_macros(tu)
    return tu


def scan(src: bytes, **cfg_kwargs):
    tu = parse(src)
    return tu, find_qualified_conditions(tu, tu.macros, Config(**cfg_kwargs))


class TestParse:
    def test_example_function_and_declarations(self):
        tu = parse(EXAMPLE)
        assert [f.name for f in tu.functions] == ["funB"]
        fn = tu.functions[0]
        assert [(p.name, p.kind) for p in fn.params] == [("val", VarKind.SCALAR_INT)]
        local_a = next(d for d in fn.locals_ if d.name == "a")
        assert local_a.kind == VarKind.SCALAR_INT
        assert fn.body_span[0] > fn.span[0]
        assert fn.body_span[1] < fn.span[1]

    def test_declarations_only_file(self):
        tu = parse(b"int f(int);\nextern int g;\nstruct s { int x; };\n")
        assert tu.functions == []

    def test_unknown_aggregate_local_degrades(self):
        tu = parse(b"void f(void) { struct pt p; p.x = 1; }\n")
        assert [f.name for f in tu.functions] == ["f"]
        p = next(d for d in tu.functions[0].locals_ if d.name == "p")
        assert p.kind == VarKind.OTHER

    def test_multi_declarator_is_unknown(self):
        tu = parse(b"void f(void) { int a, b; }\n")
        kinds = {d.name: d.kind for d in tu.functions[0].locals_}
        assert kinds == {"a": VarKind.OTHER, "b": VarKind.OTHER}

    def test_pointer_param_is_address_valued(self):
        tu = parse(b"void f(char *s, int n) { }\n")
        kinds = {p.name: p.kind for p in tu.functions[0].params}
        assert kinds == {"s": VarKind.ADDRESS, "n": VarKind.SCALAR_INT}

    def test_unbalanced_braces_rejected(self):
        with pytest.raises(UnbalancedBraces):
            parse(b"void f(void) { if (1) { }\n")
        with pytest.raises(UnbalancedBraces):
            parse(b"void f(void) { } }\n")

    def test_functions_sorted_and_non_overlapping(self):
        tu = parse(b"void a(void){}\nvoid b(void){}\nvoid c(void){}\n")
        spans = [f.span for f in tu.functions]
        assert spans == sorted(spans)
        for (s1, e1), (s2, _e2) in zip(spans, spans[1:]):
            assert e1 <= s2


class TestMacros:
    def test_object_like_integer(self):
        tu = parse(b"#define CONST 7\n")
        assert collect_macros(tu) == {"CONST": 7}

    def test_function_like_ignored(self):
        tu = parse(b"#define F(x) x+1\n")
        assert collect_macros(tu) == {}

    def test_redefinition_drops(self):
        tu = parse(b"#define A 1\n#define A 2\n")
        assert "A" not in collect_macros(tu)

    def test_expression_values(self):
        tu = parse(b"#define X (1 << 4)\n#define Y 0x10 + 2\n#define NEG -3\n")
        assert collect_macros(tu) == {"X": 16, "Y": 18, "NEG": -3}

    def test_non_integer_ignored(self):
        tu = parse(b'#define S "str"\n#define F 1.5\n#define REF OTHER\n')
        assert collect_macros(tu) == {}

    def test_value_wraps_to_signed_32(self):
        tu = parse(b"#define BIG 0xffffffff\n")
        assert collect_macros(tu) == {"BIG": -1}


class TestQualifiedConditions:
    def test_example_qc(self):
        tu, qcs = scan(EXAMPLE)
        assert len(qcs) == 1
        qc = qcs[0]
        assert qc.var_expr == "a"
        assert qc.const_value == 7
        assert qc.const_origin == "macro"
        assert not qc.has_else
        assert tu.data[qc.cond_span[0]:qc.cond_span[1]] == b"a == CONST"

    def test_non_equality_and_non_constant_excluded(self):
        _, qcs = scan(b"void f(int a, int b) { if (a < 5) { } if (a == b) { } }\n")
        assert qcs == []

    def test_reversed_operands(self):
        _, qcs = scan(b"void f(int a) { if (5 == a) { a = 1; } }\n")
        assert len(qcs) == 1
        assert qcs[0].var_expr == "a"
        assert qcs[0].const_value == 5

    def test_nested_qc_excluded_outermost_wins(self):
        src = b"""
void f(int a, int b) {
    if (a == 1) {
        if (b == 2) { b = 3; }
    }
}
"""
        _, qcs = scan(src)
        assert len(qcs) == 1
        assert qcs[0].const_value == 1

    def test_sequential_ids_in_source_order(self):
        src = b"void f(int a) { if (a == 1) { a = 0; } if (a == 2) { a = 0; } }\n"
        _, qcs = scan(src)
        assert [q.qc_id for q in qcs] == [0, 1]
        assert [q.const_value for q in qcs] == [1, 2]

    def test_min_key_bits_filter(self):
        src = b"void f(int a) { if (a == 3) { a = 0; } if (a == 0x1234) { a = 0; } }\n"
        _, qcs = scan(src, min_key_bits=8)
        assert [q.const_value for q in qcs] == [0x1234]

    def test_preprocessor_conditional_in_body_rejected(self):
        src = b"""
void f(int a) {
    if (a == 1) {
#ifdef DEBUG
        a = 2;
#endif
    }
}
"""
        _, qcs = scan(src)
        assert qcs == []

    def test_unbraced_then_branch_not_qualified(self):
        _, qcs = scan(b"void f(int a) { if (a == 1) a = 2; }\n")
        assert qcs == []

    def test_else_branch_recorded(self):
        _, qcs = scan(b"void f(int a) { if (a == 1) { a = 2; } else { a = 3; } }\n")
        assert len(qcs) == 1
        assert qcs[0].has_else

    def test_else_if_chains_both_found(self):
        src = b"void f(int a) { if (a == 1) { a = 2; } else if (a == 3) { a = 4; } }\n"
        _, qcs = scan(src)
        assert [q.const_value for q in qcs] == [1, 3]

    def test_constant_matches_macro_table(self):
        src = b"#define MODE 0x2002\nvoid f(int m) { if (m == MODE) { m = 0; } }\n"
        tu, qcs = scan(src)
        assert qcs[0].const_value == tu.macros["MODE"]

    def test_negative_literal_constant(self):
        _, qcs = scan(b"void f(int a) { if (a == -5) { a = 0; } }\n")
        assert len(qcs) == 1
        assert qcs[0].const_value == -5

    def test_parenthesized_operands(self):
        _, qcs = scan(b"void f(int a) { if ((a) == (7)) { a = 0; } }\n")
        assert len(qcs) == 1
        assert qcs[0].var_expr == "a"
        assert qcs[0].const_value == 7

    def test_member_lvalue_accepted(self):
        src = b"struct s { int op; };\nvoid f(struct s *m) { if (m->op == 3) { use(m); } }\n"
        _, qcs = scan(src)
        assert len(qcs) == 1
        assert qcs[0].var_expr == "m->op"

    def test_determinism(self):
        a = scan(EXAMPLE)[1]
        b = scan(EXAMPLE)[1]
        assert [(q.qc_id, q.cond_span, q.const_value) for q in a] == \
               [(q.qc_id, q.cond_span, q.const_value) for q in b]


class TestEligibility:
    def eligibility(self, src, index=0):
        _, qcs = scan(src)
        assert len(qcs) > index
        return qcs[index], check_eligibility(qcs[index])

    def test_example_eligible_with_free_val(self):
        _, qcs = scan(EXAMPLE)
        qc = qcs[0]
        result = check_eligibility(qc)
        assert result.eligible
        assert [v.name for v in qc.free_vars] == ["val"]

    def test_return_in_body_escapes(self):
        qc, res = self.eligibility(b"void f(int a) { if (a == 1) { return; } }\n")
        assert not res.eligible
        assert res.reason == SkipReason.CONTROL_FLOW_ESCAPE

    def test_unknown_kind_variable_unsupported(self):
        src = b"void f(int a) { struct pt p; if (a == 1) { use(p); } }\n"
        qc, res = self.eligibility(src)
        assert not res.eligible
        assert res.reason == SkipReason.UNSUPPORTED_VARIABLE

    def test_break_inside_contained_loop_allowed(self):
        src = b"""
void f(int a) {
    if (a == 1) {
        int i;
        for (i = 0; i < 3; i++) { if (i == a) { break; } }
        while (a) { a--; continue; }
    }
}
"""
        _, qcs = scan(src)
        assert len(qcs) == 1  # the inner `i == a` compares two variables
        res = check_eligibility(qcs[0])
        assert res.eligible, res.reason

    def test_escaping_break_rejected(self):
        src = b"void f(int a) { while (a) { if (a == 1) { break; } } }\n"
        qc, res = self.eligibility(src)
        assert not res.eligible
        assert res.reason == SkipReason.CONTROL_FLOW_ESCAPE

    def test_goto_to_internal_label_allowed(self):
        src = b"""
void f(int a) {
    if (a == 1) {
        goto done;
done:
        a = 0;
    }
}
"""
        qc, res = self.eligibility(src)
        assert res.eligible, res.reason

    def test_goto_escaping_rejected(self):
        src = b"""
void f(int a) {
out:
    a++;
    if (a == 1) { goto out; }
}
"""
        qc, res = self.eligibility(src)
        assert not res.eligible
        assert res.reason == SkipReason.CONTROL_FLOW_ESCAPE

    def test_label_targeted_from_outside_rejected(self):
        src = b"""
void f(int a) {
    if (a == 1) {
inside:
        a = 0;
    }
    goto inside;
}
"""
        qc, res = self.eligibility(src)
        assert not res.eligible
        assert res.reason == SkipReason.LABEL_TARGETED_FROM_OUTSIDE

    def test_shadowed_free_variable_is_ambiguous(self):
        src = b"""
void f(int a, int v) {
    if (a == 1) {
        v = 2;
        { int v = 3; use(v); }
    }
}
"""
        qc, res = self.eligibility(src)
        assert not res.eligible
        assert res.reason == SkipReason.REWRITE_AMBIGUITY

    def test_narrow_key_variable_unsupported(self):
        qc, res = self.eligibility(b"void f(char c) { if (c == 65) { c = 0; } }\n")
        assert not res.eligible
        assert res.reason == SkipReason.UNSUPPORTED_VARIABLE

    def test_file_scope_symbols_left_alone(self):
        src = b"int g;\nvoid f(int a) { if (a == 1) { g = helper(g); } }\n"
        qc, res = self.eligibility(src)
        assert res.eligible
        assert qc.free_vars == []

    def test_occurrences_cover_every_use(self):
        src = b"void f(int a, int v) { if (a == 1) { v = v + use(&v); } }\n"
        qc, res = self.eligibility(src)
        assert res.eligible
        assert [o[2] for o in res.occurrences] == ["v", "v", "v"]


from hypothesis import given
from hypothesis import strategies as st

from clbforge.errors import ClbForgeError

C_ISH = st.text(
    alphabet="abxy_01 \t\n{}()[];,=*&<>!#\"'/\\.-+interchvodsfwgl",
    max_size=300,
)


@given(C_ISH)
def test_parser_never_crashes_on_garbage(text):
    """Anything tokenizable either parses or is rejected with a typed error."""
    src = text.encode()
    try:
        tu = parse_translation_unit(tokenize(src, "<fuzz>"))
        macros = collect_macros(tu)
        for qc in find_qualified_conditions(tu, macros, Config()):
            check_eligibility(qc)
    except ClbForgeError:
        pass
