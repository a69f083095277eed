"""Light structural model of a C translation unit.

Only what qualified-condition detection needs is parsed: function boundaries,
parameter and local declarations, object-like integer macros, and `if`
statements with equality conditions. Everything else is opaque token runs, and
any construct the parser does not fully understand degrades to an explicit
unknown instead of a wrong answer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import UnbalancedBraces
from .lexer import Token, TokenStream, tokenize

KEYWORDS = {
    b"auto", b"break", b"case", b"char", b"const", b"continue", b"default",
    b"do", b"double", b"else", b"enum", b"extern", b"float", b"for", b"goto",
    b"if", b"inline", b"int", b"long", b"register", b"restrict", b"return",
    b"short", b"signed", b"sizeof", b"static", b"struct", b"switch",
    b"typedef", b"union", b"unsigned", b"void", b"volatile", b"while",
    b"_Bool", b"_Atomic", b"__restrict", b"__restrict__", b"__inline",
    b"__inline__", b"__attribute__", b"__extension__", b"__volatile__",
    b"__asm__", b"asm",
}

TYPE_KEYWORDS = {
    b"void", b"char", b"short", b"int", b"long", b"float", b"double",
    b"signed", b"unsigned", b"_Bool",
}

INT_TYPE_TOKENS = {
    b"char", b"short", b"int", b"long", b"signed", b"unsigned", b"_Bool",
}

INT_TYPEDEFS = {
    b"int8_t", b"uint8_t", b"int16_t", b"uint16_t", b"int32_t", b"uint32_t",
    b"int64_t", b"uint64_t", b"intptr_t", b"uintptr_t", b"size_t", b"ssize_t",
    b"ptrdiff_t", b"off_t",
}

# Types safe to read a 4-byte little-endian key through: at least 32 bits wide.
WIDE_INT_TYPEDEFS = {
    b"int32_t", b"uint32_t", b"int64_t", b"uint64_t", b"intptr_t",
    b"uintptr_t", b"size_t", b"ssize_t", b"ptrdiff_t", b"off_t",
}

QUALIFIERS = {b"const", b"volatile", b"restrict", b"_Atomic", b"__restrict", b"__restrict__"}
STORAGE = {b"static", b"extern", b"auto", b"register", b"typedef", b"inline", b"__inline", b"__inline__"}

CONDITIONAL_DIRECTIVES = {b"if", b"ifdef", b"ifndef", b"elif", b"else", b"endif"}


class VarKind(enum.Enum):
    SCALAR_INT = "scalar-int"
    ADDRESS = "address-valued"
    OTHER = "other/unknown"


class SkipReason(enum.Enum):
    CONTROL_FLOW_ESCAPE = "ControlFlowEscape"
    UNSUPPORTED_VARIABLE = "UnsupportedVariable"
    LABEL_TARGETED_FROM_OUTSIDE = "LabelTargetedFromOutside"
    REWRITE_AMBIGUITY = "RewriteAmbiguity"


@dataclass
class VarDecl:
    name: str
    decl_span: tuple[int, int]
    kind: VarKind
    type_text: str = ""
    block_span: tuple[int, int] = (0, 0)  # byte range the declaration is visible in
    is_param: bool = False
    wide_int: bool = False  # >= 32 bits, safe as a decryption key source


@dataclass
class FunctionDef:
    name: str
    span: tuple[int, int]
    body_span: tuple[int, int]  # interior of the outermost braces
    params: list[VarDecl]
    locals_: list[VarDecl]
    body_tok_range: tuple[int, int] = (0, 0)  # token indices inside the body

    def visible_decls(self) -> list[VarDecl]:
        return self.params + self.locals_


@dataclass
class TranslationUnit:
    path: str
    data: bytes
    stream: TokenStream
    functions: list[FunctionDef]
    macros: dict[str, int] = field(default_factory=dict)


@dataclass
class QualifiedCondition:
    qc_id: int
    tu: TranslationUnit
    enclosing: FunctionDef
    cond_span: tuple[int, int]  # the condition expression, inside the parens
    var_expr: str
    const_value: int  # normalized to signed 32-bit
    const_origin: str  # "literal" | "macro"
    body_span: tuple[int, int]  # interior of the then-branch braces
    has_else: bool
    free_vars: list[VarDecl] = field(default_factory=list)
    # token indices: (cond_first, cond_last_excl), (body_first, body_last_excl)
    cond_tok_range: tuple[int, int] = (0, 0)
    body_tok_range: tuple[int, int] = (0, 0)


@dataclass
class Eligibility:
    eligible: bool
    reason: SkipReason | None = None
    # byte offsets of every free-variable use, keyed for the rewriter
    occurrences: list[tuple[int, int, str]] = field(default_factory=list)


# ---------------------------------------------------------------------------
# parsing


def parse_translation_unit(stream: TokenStream) -> TranslationUnit:
    toks = stream.tokens
    depth = 0
    functions: list[FunctionDef] = []
    decl_anchor = 0  # token index where the current top-level declaration begins
    i = 0
    n = len(toks)
    while i < n:
        tok = toks[i]
        if tok.kind in ("comment", "directive"):
            if depth == 0 and decl_anchor == i:
                decl_anchor = i + 1
            i += 1
            continue
        if tok.kind == "punct":
            if tok.text == b"{":
                depth += 1
            elif tok.text == b"}":
                depth -= 1
                if depth < 0:
                    raise UnbalancedBraces(f"{stream.path}: unexpected '}}' at byte {tok.start}")
                if depth == 0:
                    decl_anchor = i + 1
            elif tok.text == b";" and depth == 0:
                decl_anchor = i + 1
            i += 1
            continue
        if depth == 0 and tok.kind == "ident" and tok.text not in KEYWORDS:
            fn, next_i = _try_function(stream, i, decl_anchor)
            if fn is not None:
                functions.append(fn)
                i = next_i
                decl_anchor = i
                depth = 0
                continue
        i += 1
    if depth != 0:
        raise UnbalancedBraces(f"{stream.path}: {depth} unclosed brace(s) at end of file")
    functions.sort(key=lambda f: f.span[0])
    return TranslationUnit(stream.path, stream.data, stream, functions)


def _next_code(toks: list[Token], i: int) -> int:
    n = len(toks)
    while i < n and toks[i].kind in ("comment", "directive"):
        i += 1
    return i


def _match_punct(toks: list[Token], i: int, opener: bytes, closer: bytes) -> int:
    """Index of the token closing the group opened at i, or -1."""
    depth = 0
    n = len(toks)
    while i < n:
        t = toks[i]
        if t.kind == "punct":
            if t.text == opener:
                depth += 1
            elif t.text == closer:
                depth -= 1
                if depth == 0:
                    return i
        i += 1
    return -1


def _try_function(stream: TokenStream, name_i: int, decl_anchor: int):
    """Recognize `ident ( params ) [attrs] { body }` starting at name_i."""
    toks = stream.tokens
    n = len(toks)
    j = _next_code(toks, name_i + 1)
    if j >= n or toks[j].text != b"(":
        return None, name_i
    rparen = _match_punct(toks, j, b"(", b")")
    if rparen == -1:
        return None, name_i
    k = _next_code(toks, rparen + 1)
    # allow attribute-ish trailers: identifiers and balanced paren groups
    while k < n:
        t = toks[k]
        if t.kind == "ident":
            k = _next_code(toks, k + 1)
            continue
        if t.text == b"(":
            close = _match_punct(toks, k, b"(", b")")
            if close == -1:
                return None, name_i
            k = _next_code(toks, close + 1)
            continue
        break
    if k >= n or toks[k].text != b"{":
        return None, name_i
    rbrace = _match_punct(toks, k, b"{", b"}")
    if rbrace == -1:
        raise UnbalancedBraces(
            f"{stream.path}: unterminated body of '{toks[name_i].text.decode('latin-1')}'"
        )

    start_i = _next_code(toks, decl_anchor)
    if start_i > name_i:
        start_i = name_i
    span = (toks[start_i].start, toks[rbrace].end)
    body_span = (toks[k].end, toks[rbrace].start)
    name = toks[name_i].text.decode("latin-1")
    params = _parse_params(toks, j + 1, rparen, span)
    fn = FunctionDef(name, span, body_span, params, [], body_tok_range=(k + 1, rbrace))
    fn.locals_ = _scan_locals(stream, fn)
    return fn, rbrace + 1


def _parse_params(toks: list[Token], start: int, end: int, fn_span) -> list[VarDecl]:
    groups: list[list[Token]] = [[]]
    depth = 0
    for t in toks[start:end]:
        if t.kind in ("comment", "directive"):
            continue
        if t.kind == "punct":
            if t.text in (b"(", b"["):
                depth += 1
            elif t.text in (b")", b"]"):
                depth -= 1
            elif t.text == b"," and depth == 0:
                groups.append([])
                continue
        groups[-1].append(t)
    params = []
    for g in groups:
        if not g or (len(g) == 1 and g[0].text in (b"void", b"...")):
            continue
        decl = _classify_declarator(g, is_param=True)
        if decl is not None:
            decl.block_span = fn_span
            decl.is_param = True
            params.append(decl)
    return params


def _classify_declarator(toks: list[Token], is_param: bool) -> VarDecl | None:
    """Classify one declarator's tokens; anything not fully understood is OTHER."""
    toks = [t for t in toks if t.kind not in ("comment", "directive")]
    if not toks:
        return None
    span = (toks[0].start, toks[-1].end)

    i = 0
    n = len(toks)
    type_toks: list[bytes] = []
    qual_toks: list[bytes] = []  # carried into type_text, ignored for kind
    has_register = False
    understood = True
    while i < n and toks[i].kind == "ident":
        text = toks[i].text
        if text in STORAGE:
            if text == b"register":
                has_register = True
            i += 1
            continue
        if text in QUALIFIERS:
            qual_toks.append(text)
            i += 1
            continue
        if text in (b"struct", b"union", b"enum"):
            understood = False
            type_toks.append(text)
            i += 1
            if i < n and toks[i].kind == "ident":
                type_toks.append(toks[i].text)
                i += 1
            break
        if text in TYPE_KEYWORDS or text in INT_TYPEDEFS:
            type_toks.append(text)
            i += 1
            continue
        if not type_toks and i + 1 < n and (toks[i + 1].kind == "ident" or toks[i + 1].text == b"*"):
            # unknown typedef name in type position
            type_toks.append(text)
            understood = False
            i += 1
            continue
        break

    if not type_toks:
        return None

    stars = 0
    while i < n and toks[i].text in (b"*",) or (i < n and toks[i].kind == "ident" and toks[i].text in QUALIFIERS):
        if toks[i].text == b"*":
            stars += 1
        i += 1

    if i >= n or toks[i].kind != "ident" or toks[i].text in KEYWORDS:
        return None
    name = toks[i].text.decode("latin-1")
    i += 1

    array_suffix = False
    trailing_junk = False
    while i < n:
        if toks[i].text == b"[":
            depth = 0
            while i < n:
                if toks[i].text == b"[":
                    depth += 1
                elif toks[i].text == b"]":
                    depth -= 1
                    if depth == 0:
                        break
                i += 1
            i += 1
            array_suffix = True
            continue
        trailing_junk = True
        break

    type_text = " ".join(t.decode("latin-1") for t in qual_toks + type_toks) \
        + (" " + "*" * stars if stars else "")

    if trailing_junk or has_register or not understood:
        kind = VarKind.OTHER
    elif array_suffix:
        # parameter arrays decay to pointers; local arrays keep sizeof/&-of
        # semantics that extraction cannot preserve
        kind = VarKind.ADDRESS if is_param else VarKind.OTHER
    elif stars > 0:
        kind = VarKind.ADDRESS
    elif all(t in INT_TYPE_TOKENS or t in INT_TYPEDEFS for t in type_toks):
        kind = VarKind.SCALAR_INT
    else:
        kind = VarKind.OTHER

    wide = _is_wide_int(type_toks) and stars == 0 and not array_suffix
    return VarDecl(name, span, kind, type_text, wide_int=wide)


def _is_wide_int(type_toks: list[bytes]) -> bool:
    toks = set(type_toks)
    if toks & {b"char", b"short", b"_Bool", b"float", b"double", b"void",
               b"int8_t", b"uint8_t", b"int16_t", b"uint16_t"}:
        return False
    if toks & WIDE_INT_TYPEDEFS:
        return True
    return bool(toks & {b"int", b"long"}) or toks == {b"unsigned"} or toks == {b"signed"}


def _scan_locals(stream: TokenStream, fn: FunctionDef) -> list[VarDecl]:
    toks = stream.tokens
    lo, hi = fn.body_tok_range
    decls: list[VarDecl] = []

    # brace pair map for block scoping
    blocks: dict[int, int] = {}  # open-brace offset -> end of its block
    stack_idx: list[int] = []
    for i in range(lo, hi):
        t = toks[i]
        if t.text == b"{":
            stack_idx.append(t.start)
        elif t.text == b"}":
            if stack_idx:
                blocks[stack_idx.pop()] = t.end

    i = lo
    stmt_start = True
    open_offsets: list[int] = []
    while i < hi:
        t = toks[i]
        if t.kind in ("comment", "directive"):
            i += 1
            continue
        if t.text == b"{":
            open_offsets.append(t.start)
            stmt_start = True
            i += 1
            continue
        if t.text == b"}":
            if open_offsets:
                open_offsets.pop()
            stmt_start = True
            i += 1
            continue
        if t.text == b";":
            stmt_start = True
            i += 1
            continue
        if stmt_start and t.kind == "ident" and t.text == b"for":
            j = _next_code(toks, i + 1)
            if j < hi and toks[j].text == b"(":
                init_start = j + 1
                stmt_end = _for_statement_end(toks, i, hi)
                scope = (t.start, stmt_end)
                end_i = _collect_declaration(stream, toks, init_start, hi, scope, decls)
                i = end_i if end_i > init_start else init_start
                stmt_start = False
                continue
        if stmt_start and t.kind == "ident" and _starts_declaration(toks, i, hi):
            scope_open = open_offsets[-1] if open_offsets else None
            if scope_open is not None and scope_open in blocks:
                scope = (scope_open, blocks[scope_open])
            else:
                scope = fn.body_span
            end_i = _collect_declaration(stream, toks, i, hi, scope, decls)
            if end_i > i:
                i = end_i
                stmt_start = True
                continue
        stmt_start = False
        i += 1
    return decls


def _for_statement_end(toks: list[Token], for_i: int, hi: int) -> int:
    """Byte offset where the for statement (header + body) ends."""
    j = _next_code(toks, for_i + 1)
    rparen = _match_punct(toks, j, b"(", b")")
    if rparen == -1 or rparen >= hi:
        return toks[hi - 1].end
    k = _next_code(toks, rparen + 1)
    if k < hi and toks[k].text == b"{":
        close = _match_punct(toks, k, b"{", b"}")
        if close != -1 and close < hi:
            return toks[close].end
    depth = 0
    while k < hi:
        t = toks[k]
        if t.text in (b"(", b"[", b"{"):
            depth += 1
        elif t.text in (b")", b"]", b"}"):
            depth -= 1
        elif t.text == b";" and depth == 0:
            return t.end
        k += 1
    return toks[hi - 1].end


def _starts_declaration(toks: list[Token], i: int, hi: int) -> bool:
    t = toks[i]
    if t.text in STORAGE or t.text in QUALIFIERS or t.text in TYPE_KEYWORDS \
            or t.text in INT_TYPEDEFS or t.text in (b"struct", b"union", b"enum"):
        return True
    if t.text in KEYWORDS:
        return False
    # unknown-typedef heuristic: `name ident ...` where the pair is followed
    # by something declaration-like
    j = _next_code(toks, i + 1)
    if j < hi and (toks[j].kind == "ident" and toks[j].text not in KEYWORDS or toks[j].text == b"*"):
        k = _next_code(toks, j + 1)
        if k < hi and toks[k].text in (b";", b"=", b",", b"[") or (j < hi and toks[j].text == b"*"):
            return toks[j].text != b"*" or _looks_like_ptr_decl(toks, j, hi)
    return False


def _looks_like_ptr_decl(toks: list[Token], star_i: int, hi: int) -> bool:
    j = _next_code(toks, star_i + 1)
    while j < hi and toks[j].text == b"*":
        j = _next_code(toks, j + 1)
    if j >= hi or toks[j].kind != "ident" or toks[j].text in KEYWORDS:
        return False
    k = _next_code(toks, j + 1)
    return k < hi and toks[k].text in (b";", b"=", b",", b"[")


def _collect_declaration(stream, toks: list[Token], i: int, hi: int, scope, decls: list[VarDecl]) -> int:
    """Parse one declaration statement; append VarDecls; return token index past ';'."""
    # gather tokens to the terminating ';' at nest level 0
    parts: list[Token] = []
    j = i
    depth = 0
    while j < hi:
        t = toks[j]
        if t.kind in ("comment", "directive"):
            j += 1
            continue
        if t.text in (b"(", b"[", b"{"):
            depth += 1
        elif t.text in (b")", b"]", b"}"):
            if depth == 0 and t.text == b")":
                break  # for-init declarations stop at the header's ')'
            depth -= 1
        elif t.text == b";" and depth == 0:
            j += 1
            break
        parts.append(t)
        j += 1

    if not parts:
        return j

    # split off the shared type prefix, then declarators by top-level commas
    declarators: list[list[Token]] = [[]]
    depth = 0
    for t in parts:
        if t.text in (b"(", b"[", b"{"):
            depth += 1
        elif t.text in (b")", b"]", b"}"):
            depth -= 1
        elif t.text == b"," and depth == 0:
            declarators.append([])
            continue
        declarators[-1].append(t)

    prefix: list[Token] = []
    first = declarators[0]
    k = 0
    while k < len(first) and first[k].kind == "ident" and (
        first[k].text in STORAGE or first[k].text in QUALIFIERS
        or first[k].text in TYPE_KEYWORDS or first[k].text in INT_TYPEDEFS
        or first[k].text in (b"struct", b"union", b"enum")
        or (k == 0 and first[k].text not in KEYWORDS)
    ):
        prefix.append(first[k])
        k += 1
        if prefix and prefix[-1].text in (b"struct", b"union", b"enum"):
            if k < len(first) and first[k].kind == "ident":
                prefix.append(first[k])
                k += 1
            break
    if not prefix:
        return j
    declarators[0] = first[len(prefix):]

    multi = len(declarators) > 1
    for d_toks in declarators:
        # drop initializer
        cut = len(d_toks)
        depth = 0
        for idx, t in enumerate(d_toks):
            if t.text in (b"(", b"[", b"{"):
                depth += 1
            elif t.text in (b")", b"]", b"}"):
                depth -= 1
            elif t.text == b"=" and depth == 0:
                cut = idx
                break
        decl = _classify_declarator(prefix + d_toks[:cut], is_param=False)
        if decl is None:
            # salvage the name so free-variable analysis still sees it
            names = [t for t in d_toks[:cut] if t.kind == "ident" and t.text not in KEYWORDS]
            if names:
                decl = VarDecl(names[0].text.decode("latin-1"),
                               (names[0].start, names[0].end), VarKind.OTHER)
            else:
                continue
        if multi:
            decl.kind = VarKind.OTHER
            decl.wide_int = False
        decl.block_span = scope
        decls.append(decl)
    return j


# ---------------------------------------------------------------------------
# macros


def collect_macros(tu: TranslationUnit, base: dict[str, int] | None = None) -> dict[str, int]:
    table: dict[str, int] = dict(base) if base else {}
    poisoned: set[str] = set()
    for tok in tu.stream.tokens:
        if tok.kind != "directive":
            continue
        name, value, is_define, is_undef = _parse_define(tok.text)
        if is_undef and name:
            table.pop(name, None)
            poisoned.add(name)
            continue
        if not is_define or name is None:
            continue
        if name in table or name in poisoned:
            table.pop(name, None)
            poisoned.add(name)
            continue
        if value is not None:
            table[name] = value
        else:
            poisoned.add(name)
    return table


def _parse_define(text: bytes):
    """Return (name, value, is_define, is_undef) for a directive token."""
    body = text[1:].replace(b"\\\r\n", b" ").replace(b"\\\n", b" ").strip()
    if body.startswith(b"undef"):
        rest = body[len(b"undef"):].strip()
        parts = rest.split()
        return (parts[0].decode("latin-1") if parts else None), None, False, True
    if not body.startswith(b"define"):
        return None, None, False, False
    rest = body[len(b"define"):]
    if not rest or rest[0:1] not in (b" ", b"\t"):
        return None, None, False, False
    rest = rest.lstrip()
    i = 0
    while i < len(rest) and rest[i] in b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_":
        i += 1
    if i == 0:
        return None, None, False, False
    name = rest[:i].decode("latin-1")
    if rest[i:i + 1] == b"(":  # function-like
        return None, None, False, False
    value = _eval_int_expr(rest[i:])
    return name, value, True, False


def _eval_int_expr(text: bytes) -> int | None:
    """Evaluate an integer constant expression of literals; None if not one."""
    try:
        stream = tokenize(text)
    except Exception:
        return None
    toks = [t for t in stream.tokens if t.kind not in ("comment",)]
    if not toks:
        return None
    try:
        value, pos = _eval_ternary(toks, 0)
    except _EvalError:
        return None
    if pos != len(toks):
        return None
    if not (-(1 << 31) <= value < (1 << 32)):
        return None
    return ((value & 0xFFFFFFFF) ^ 0x80000000) - 0x80000000


class _EvalError(Exception):
    pass


_BINOPS = [
    (b"||",), (b"&&",), (b"|",), (b"^",), (b"&",),
    (b"==", b"!="), (b"<", b">", b"<=", b">="),
    (b"<<", b">>"), (b"+", b"-"), (b"*", b"/", b"%"),
]


def _eval_ternary(toks, pos):
    value, pos = _eval_binary(toks, pos, 0)
    if pos < len(toks) and toks[pos].text == b"?":
        a, pos = _eval_ternary(toks, pos + 1)
        if pos >= len(toks) or toks[pos].text != b":":
            raise _EvalError
        b, pos = _eval_ternary(toks, pos + 1)
        value = a if value else b
    return value, pos


def _eval_binary(toks, pos, level):
    if level >= len(_BINOPS):
        return _eval_unary(toks, pos)
    ops = _BINOPS[level]
    value, pos = _eval_binary(toks, pos, level + 1)
    while pos < len(toks) and toks[pos].kind == "punct" and toks[pos].text in ops:
        op = toks[pos].text
        rhs, pos = _eval_binary(toks, pos + 1, level + 1)
        value = _apply(op, value, rhs)
    return value, pos


def _apply(op, a, b):
    if op == b"||":
        return 1 if (a or b) else 0
    if op == b"&&":
        return 1 if (a and b) else 0
    if op in (b"/", b"%") and b == 0:
        raise _EvalError
    table = {
        b"|": lambda: a | b, b"^": lambda: a ^ b, b"&": lambda: a & b,
        b"==": lambda: int(a == b), b"!=": lambda: int(a != b),
        b"<": lambda: int(a < b), b">": lambda: int(a > b),
        b"<=": lambda: int(a <= b), b">=": lambda: int(a >= b),
        b"<<": lambda: a << b if 0 <= b < 64 else _raise(),
        b">>": lambda: a >> b if 0 <= b < 64 else _raise(),
        b"+": lambda: a + b, b"-": lambda: a - b,
        b"*": lambda: a * b, b"/": lambda: int(a / b) if (a < 0) != (b < 0) and a % b else a // b,
        b"%": lambda: a - b * (int(a / b) if (a < 0) != (b < 0) and a % b else a // b),
    }
    return table[op]()


def _raise():
    raise _EvalError


def _eval_unary(toks, pos):
    if pos >= len(toks):
        raise _EvalError
    t = toks[pos]
    if t.kind == "punct":
        if t.text == b"-":
            v, pos = _eval_unary(toks, pos + 1)
            return -v, pos
        if t.text == b"+":
            return _eval_unary(toks, pos + 1)
        if t.text == b"~":
            v, pos = _eval_unary(toks, pos + 1)
            return ~v, pos
        if t.text == b"!":
            v, pos = _eval_unary(toks, pos + 1)
            return (0 if v else 1), pos
        if t.text == b"(":
            v, pos = _eval_ternary(toks, pos + 1)
            if pos >= len(toks) or toks[pos].text != b")":
                raise _EvalError
            return v, pos + 1
        raise _EvalError
    if t.kind == "num":
        v = parse_int_literal(t.text)
        if v is None:
            raise _EvalError
        return v, pos + 1
    raise _EvalError


def parse_int_literal(text: bytes) -> int | None:
    """Value of a C integer literal token, or None for floats/garbage."""
    s = text.rstrip(b"uUlL")
    if not s:
        return None
    try:
        if s.lower().startswith(b"0x"):
            return int(s, 16)
        if s.lower().startswith(b"0b"):
            return int(s, 2)
        if s.startswith(b"0") and len(s) > 1:
            return int(s, 8)
        if b"." in s or b"e" in s.lower():
            return None
        return int(s, 10)
    except ValueError:
        return None


# ---------------------------------------------------------------------------
# qualified conditions


def find_qualified_conditions(tu: TranslationUnit, macros: dict[str, int], cfg) -> list[QualifiedCondition]:
    toks = tu.stream.tokens
    found: list[QualifiedCondition] = []
    for fn in tu.functions:
        lo, hi = fn.body_tok_range
        i = lo
        while i < hi:
            t = toks[i]
            if t.kind == "ident" and t.text == b"if":
                qc = _try_qc(tu, fn, i, hi, macros, cfg)
                if qc is not None:
                    found.append(qc)
            i += 1

    # outermost wins: drop QCs nested inside another QC's then-branch
    outer: list[QualifiedCondition] = []
    for qc in found:
        nested = any(
            other is not qc
            and other.body_span[0] <= qc.cond_span[0] < other.body_span[1]
            for other in found
        )
        if not nested:
            outer.append(qc)
    outer.sort(key=lambda q: q.cond_span[0])
    for idx, qc in enumerate(outer):
        qc.qc_id = idx
    return outer


def _try_qc(tu, fn, if_i, hi, macros, cfg) -> QualifiedCondition | None:
    toks = tu.stream.tokens
    j = _next_code(toks, if_i + 1)
    if j >= hi or toks[j].text != b"(":
        return None
    rparen = _match_punct(toks, j, b"(", b")")
    if rparen == -1 or rparen >= hi:
        return None
    k = _next_code(toks, rparen + 1)
    if k >= hi or toks[k].text != b"{":
        return None  # unbraced then-branch: not qualified
    rbrace = _match_punct(toks, k, b"{", b"}")
    if rbrace == -1 or rbrace >= hi:
        return None

    cond = [t for t in toks[j + 1:rparen] if t.kind not in ("comment", "directive")]
    if any(t.kind == "directive" for t in toks[j + 1:rparen]):
        return None
    parsed = _parse_equality(cond, macros)
    if parsed is None:
        return None
    var_toks, const_value, const_origin = parsed

    if cfg is not None and getattr(cfg, "min_key_bits", 0):
        if (const_value & 0xFFFFFFFF).bit_length() < cfg.min_key_bits:
            return None

    # no preprocessor conditionals may intersect the statement
    for t in toks[if_i:rbrace + 1]:
        if t.kind == "directive" and _directive_word(t.text) in CONDITIONAL_DIRECTIVES:
            return None

    e = _next_code(toks, rbrace + 1)
    has_else = e < len(toks) and toks[e].kind == "ident" and toks[e].text == b"else"

    var_expr = tu.data[var_toks[0].start:var_toks[-1].end].decode("latin-1")
    return QualifiedCondition(
        qc_id=-1,
        tu=tu,
        enclosing=fn,
        cond_span=(cond[0].start, cond[-1].end),
        var_expr=var_expr,
        const_value=const_value,
        const_origin=const_origin,
        body_span=(toks[k].end, toks[rbrace].start),
        has_else=has_else,
        cond_tok_range=(j + 1, rparen),
        body_tok_range=(k + 1, rbrace),
    )


def _directive_word(text: bytes) -> bytes:
    body = text[1:].lstrip()
    i = 0
    while i < len(body) and body[i:i + 1].isalpha():
        i += 1
    return body[:i]


def _parse_equality(cond: list[Token], macros: dict[str, int]):
    """Split `lhs == rhs` and return (lvalue tokens, const value, origin)."""
    eq_positions = []
    depth = 0
    for idx, t in enumerate(cond):
        if t.kind == "punct":
            if t.text in (b"(", b"["):
                depth += 1
            elif t.text in (b")", b"]"):
                depth -= 1
            elif t.text == b"==" and depth == 0:
                eq_positions.append(idx)
    if len(eq_positions) != 1:
        return None
    lhs = cond[:eq_positions[0]]
    rhs = cond[eq_positions[0] + 1:]

    for a, b in ((lhs, rhs), (rhs, lhs)):
        const = _const_operand(a, macros)
        if const is None:
            continue
        lval = _lvalue_operand(b)
        if lval is None:
            continue
        value, origin = const
        return lval, value, origin
    return None


def _const_operand(toks: list[Token], macros: dict[str, int]):
    toks = _strip_parens(toks)
    neg = False
    if len(toks) >= 2 and toks[0].text == b"-":
        neg = True
        toks = toks[1:]
    if len(toks) != 1:
        return None
    t = toks[0]
    value = None
    origin = None
    if t.kind == "num":
        value = parse_int_literal(t.text)
        origin = "literal"
    elif t.kind == "ident" and t.text.decode("latin-1") in macros:
        value = macros[t.text.decode("latin-1")]
        origin = "macro"
    if value is None:
        return None
    if neg:
        value = -value
    if not (-(1 << 31) <= value < (1 << 32)):
        return None
    value = ((value & 0xFFFFFFFF) ^ 0x80000000) - 0x80000000
    return value, origin


def _lvalue_operand(toks: list[Token]):
    toks = _strip_parens(toks)
    if not toks or toks[0].kind != "ident" or toks[0].text in KEYWORDS:
        return None
    i = 1
    n = len(toks)
    while i < n:
        t = toks[i]
        if t.text in (b".", b"->"):
            if i + 1 >= n or toks[i + 1].kind != "ident":
                return None
            i += 2
            continue
        if t.text == b"[":
            depth = 0
            while i < n:
                if toks[i].text == b"[":
                    depth += 1
                elif toks[i].text == b"]":
                    depth -= 1
                    if depth == 0:
                        break
                i += 1
            if i >= n:
                return None
            i += 1
            continue
        return None
    return toks


def _strip_parens(toks: list[Token]):
    while len(toks) >= 2 and toks[0].text == b"(" and toks[-1].text == b")":
        depth = 0
        wraps = True
        for idx, t in enumerate(toks):
            if t.text == b"(":
                depth += 1
            elif t.text == b")":
                depth -= 1
                if depth == 0 and idx != len(toks) - 1:
                    wraps = False
                    break
        if not wraps:
            break
        toks = toks[1:-1]
    return toks


# ---------------------------------------------------------------------------
# eligibility


def check_eligibility(qc: QualifiedCondition) -> Eligibility:
    toks = qc.tu.stream.tokens
    lo, hi = qc.body_tok_range

    if not _control_flow_contained(toks, lo, hi):
        return Eligibility(False, SkipReason.CONTROL_FLOW_ESCAPE)

    labels = _label_definitions(toks, lo, hi)
    for g_i in range(*qc.enclosing.body_tok_range):
        t = toks[g_i]
        if t.kind == "ident" and t.text == b"goto" and not (lo <= g_i < hi):
            j = _next_code(toks, g_i + 1)
            if j < len(toks) and toks[j].kind == "ident" and toks[j].text.decode("latin-1") in labels:
                return Eligibility(False, SkipReason.LABEL_TARGETED_FROM_OUTSIDE)

    inner_decl_names = {
        d.name for d in qc.enclosing.locals_
        if qc.body_span[0] <= d.decl_span[0] < qc.body_span[1]
    }
    visible = _decls_in_scope(qc)

    shadowed = inner_decl_names & set(visible)
    occurrences: list[tuple[int, int, str]] = []
    free: dict[str, VarDecl] = {}

    for i in range(lo, hi):
        t = toks[i]
        if t.kind != "ident" or t.text in KEYWORDS:
            continue
        name = t.text.decode("latin-1")
        prev = _prev_code(toks, i, lo)
        if prev is not None and toks[prev].text in (b".", b"->"):
            continue
        if prev is not None and toks[prev].kind == "ident" and toks[prev].text in (b"struct", b"union", b"enum", b"goto"):
            continue
        nxt = _next_code(toks, i + 1)
        if nxt < hi and toks[nxt].text == b":" and (
            prev is None or toks[prev].text in (b";", b"{", b"}", b":")
        ):
            continue  # label definition
        if _is_decl_name_position(qc, t):
            continue
        if name in shadowed:
            return Eligibility(False, SkipReason.REWRITE_AMBIGUITY)
        if name in inner_decl_names:
            continue
        if name in visible:
            decl = visible[name]
            if decl.kind not in (VarKind.SCALAR_INT, VarKind.ADDRESS):
                return Eligibility(False, SkipReason.UNSUPPORTED_VARIABLE)
            free[name] = decl
            occurrences.append((t.start, t.end, name))
        # anything else is a file-scope symbol, left untouched

    # the condition variable feeds the 4-byte decryption key read
    key_decl = _resolve_simple_var(qc)
    if key_decl is not None and not key_decl.wide_int:
        return Eligibility(False, SkipReason.UNSUPPORTED_VARIABLE)

    qc.free_vars = sorted(free.values(), key=lambda d: d.name)
    return Eligibility(True, occurrences=occurrences)


def _prev_code(toks, i, lo):
    j = i - 1
    while j >= lo:
        if toks[j].kind not in ("comment", "directive"):
            return j
        j -= 1
    return None


def _decls_in_scope(qc: QualifiedCondition) -> dict[str, VarDecl]:
    """Params and locals visible at the QC, innermost declaration winning."""
    at = qc.cond_span[0]
    visible: dict[str, VarDecl] = {}
    best_block: dict[str, int] = {}
    for d in qc.enclosing.params:
        visible[d.name] = d
        best_block[d.name] = -1
    for d in qc.enclosing.locals_:
        if d.decl_span[1] <= at and d.block_span[0] <= at < d.block_span[1]:
            depth_key = d.block_span[0]
            if d.name not in visible or depth_key >= best_block.get(d.name, -1):
                visible[d.name] = d
                best_block[d.name] = depth_key
    return visible


def _resolve_simple_var(qc: QualifiedCondition) -> VarDecl | None:
    name = qc.var_expr.strip()
    if not name.isidentifier():
        return None  # compound lvalue; resolved member types are unknown anyway
    return _decls_in_scope(qc).get(name)


def _is_decl_name_position(qc: QualifiedCondition, tok: Token) -> bool:
    for d in qc.enclosing.locals_:
        if d.decl_span[0] <= tok.start < d.decl_span[1]:
            return True
    return False


def _label_definitions(toks, lo, hi) -> set[str]:
    labels = set()
    for i in range(lo, hi):
        t = toks[i]
        if t.kind != "ident" or t.text in KEYWORDS:
            continue
        nxt = _next_code(toks, i + 1)
        prev = _prev_code(toks, i, lo)
        if nxt < hi and toks[nxt].text == b":" and (
            prev is None or toks[prev].text in (b";", b"{", b"}", b":")
        ):
            labels.add(t.text.decode("latin-1"))
    return labels


def _control_flow_contained(toks, lo, hi) -> bool:
    """True iff no return/goto/break/continue escapes the body range."""
    labels = _label_definitions(toks, lo, hi)
    state = {"ok": True}

    def walk(i: int, end: int, loop_depth: int) -> None:
        while i < end and state["ok"]:
            t = toks[i]
            if t.kind in ("comment", "directive"):
                i += 1
                continue
            if t.kind == "ident":
                text = t.text
                if text == b"return":
                    state["ok"] = False
                    return
                if text == b"goto":
                    j = _next_code(toks, i + 1)
                    if j >= end or toks[j].kind != "ident" or toks[j].text.decode("latin-1") not in labels:
                        state["ok"] = False
                        return
                    i = j + 1
                    continue
                if text in (b"break", b"continue") and loop_depth == 0:
                    state["ok"] = False
                    return
                if text in (b"for", b"while"):
                    j = _next_code(toks, i + 1)
                    if j < end and toks[j].text == b"(":
                        rp = _match_punct(toks, j, b"(", b")")
                        if rp == -1 or rp >= end:
                            i += 1
                            continue
                        i = _walk_statement(_next_code(toks, rp + 1), end, loop_depth + 1)
                        continue
                if text == b"switch":
                    j = _next_code(toks, i + 1)
                    if j < end and toks[j].text == b"(":
                        rp = _match_punct(toks, j, b"(", b")")
                        if rp != -1 and rp < end:
                            i = _walk_statement(_next_code(toks, rp + 1), end, loop_depth + 1)
                            continue
                if text == b"do":
                    i = _walk_statement(_next_code(toks, i + 1), end, loop_depth + 1)
                    continue
            i += 1

    def _walk_statement(i: int, end: int, loop_depth: int) -> int:
        """Walk one statement starting at i; return index past it."""
        if i >= end:
            return i
        t = toks[i]
        if t.text == b"{":
            close = _match_punct(toks, i, b"{", b"}")
            if close == -1 or close > end:
                return end
            walk(i + 1, close, loop_depth)
            return close + 1
        if t.kind == "ident" and t.text in (b"for", b"while", b"switch"):
            j = _next_code(toks, i + 1)
            if j < end and toks[j].text == b"(":
                rp = _match_punct(toks, j, b"(", b")")
                if rp != -1 and rp < end:
                    bump = 1 if t.text != b"if" else 0
                    return _walk_statement(_next_code(toks, rp + 1), end, loop_depth + bump)
        if t.kind == "ident" and t.text == b"do":
            after = _walk_statement(_next_code(toks, i + 1), end, loop_depth + 1)
            # consume trailing while (...) ;
            j = _next_code(toks, after)
            if j < end and toks[j].kind == "ident" and toks[j].text == b"while":
                k = _next_code(toks, j + 1)
                if k < end and toks[k].text == b"(":
                    rp = _match_punct(toks, k, b"(", b")")
                    if rp != -1 and rp < end:
                        j = _next_code(toks, rp + 1)
                        if j < end and toks[j].text == b";":
                            return j + 1
            return after
        if t.kind == "ident" and t.text == b"if":
            j = _next_code(toks, i + 1)
            if j < end and toks[j].text == b"(":
                rp = _match_punct(toks, j, b"(", b")")
                if rp != -1 and rp < end:
                    after = _walk_statement(_next_code(toks, rp + 1), end, loop_depth)
                    k = _next_code(toks, after)
                    if k < end and toks[k].kind == "ident" and toks[k].text == b"else":
                        return _walk_statement(_next_code(toks, k + 1), end, loop_depth)
                    return after
        # expression statement: scan to ';' at nest 0, checking keywords
        depth = 0
        while i < end:
            t = toks[i]
            if t.kind == "ident":
                if t.text == b"return":
                    state["ok"] = False
                    return end
                if t.text in (b"break", b"continue") and loop_depth == 0:
                    state["ok"] = False
                    return end
                if t.text == b"goto":
                    j = _next_code(toks, i + 1)
                    if j >= end or toks[j].kind != "ident" or toks[j].text.decode("latin-1") not in labels:
                        state["ok"] = False
                        return end
            if t.text in (b"(", b"[", b"{"):
                depth += 1
            elif t.text in (b")", b"]", b"}"):
                depth -= 1
            elif t.text == b";" and depth == 0:
                return i + 1
            i += 1
        return end

    walk(lo, hi, 0)
    return state["ok"]
