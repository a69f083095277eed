"""Exception hierarchy for the whole toolchain.

Every error a pipeline stage can raise derives from ClbForgeError so the CLI
can map any failure to exit status 2.
"""


class ClbForgeError(Exception):
    """Base class for all toolchain errors."""


# --- lexing / parsing -------------------------------------------------------

class LexError(ClbForgeError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnterminatedLiteral(LexError):
    def __init__(self, offset: int):
        super().__init__("unterminated string or character literal", offset)


class UnterminatedComment(LexError):
    def __init__(self, offset: int):
        super().__init__("unterminated block comment", offset)


class UnbalancedBraces(ClbForgeError):
    """The translation unit never closes (or over-closes) a brace; file rejected."""


# --- transformation ----------------------------------------------------------

class TransformError(ClbForgeError):
    pass


class TooManyClbs(TransformError):
    pass


class OverlappingEdits(TransformError):
    pass


class RewriteAmbiguity(TransformError):
    """An identifier occurrence in a QC body cannot be confidently classified."""


class AlreadyProtected(TransformError):
    """Input source carries the protection marker; re-protecting is refused."""


# --- binary patching ---------------------------------------------------------

class PatchError(ClbForgeError):
    pass


class NotElf(PatchError):
    pass


class UnsupportedClassOrEndianness(PatchError):
    pass


class SymbolsRequired(PatchError):
    """The executable has no symbol table; the patcher cannot locate functions."""


class MissingSymbol(PatchError):
    def __init__(self, name: str):
        super().__init__(f"symbol not found: {name}")
        self.name = name


class ZeroSizeSymbol(PatchError):
    def __init__(self, name: str):
        super().__init__(f"symbol has zero size: {name}")
        self.name = name


class OverlappingSpans(PatchError):
    pass


class SpanOutsideText(PatchError):
    pass


class MissingPlaceholder(PatchError):
    def __init__(self, kind: str, symbol: str):
        super().__init__(f"placeholder {kind} not found in scan range of {symbol}")
        self.kind = kind
        self.symbol = symbol


class AmbiguousPlaceholder(PatchError):
    def __init__(self, kind: str, symbol: str):
        super().__init__(f"placeholder {kind} occurs more than once in scan range of {symbol}")
        self.kind = kind
        self.symbol = symbol


# --- attack simulation -------------------------------------------------------

class AttackError(ClbForgeError):
    pass


class NotEnoughStrings(AttackError):
    pass


class UnknownSection(AttackError):
    def __init__(self, name: str):
        super().__init__(f"section not found: {name}")
        self.name = name


# --- harness -----------------------------------------------------------------

class HarnessError(ClbForgeError):
    pass


class CompilerFailed(HarnessError):
    def __init__(self, status: int, diagnostics: str):
        super().__init__(f"compiler exited with status {status}:\n{diagnostics}")
        self.status = status
        self.diagnostics = diagnostics


class ExecFailure(HarnessError):
    pass
