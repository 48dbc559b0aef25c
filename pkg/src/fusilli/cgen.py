"""C99 renderer for emit units, plus the no-calls/no-allocations scanner.

The renderer is a pure function of the unit: byte-identical output across
runs.  Emitted translation units have no includes and must compile cleanly at
maximum warning level; `STRICT_CFLAGS` below is what the test suite enforces.

Type mapping: int -> int, bool -> int (0/1), float -> double, arrays -> a
(elem *name, int name_len) parameter pair.  Mutable cells become locals
declared with their initializer; shared intermediates become const locals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .backend import (
    BOOL,
    FLOAT,
    INT,
    UNIT,
    And,
    Arith,
    ArrGet,
    ArrLen,
    ArrSet,
    ArrT,
    Assign,
    Block,
    Cmp,
    CodegenError,
    Cond,
    DeclVar,
    EmitUnit,
    For,
    If,
    LetBind,
    LetUse,
    Lit,
    Node,
    Nop,
    Or,
    Not,
    ParamUse,
    ReadVar,
    SemType,
    SeqExpr,
    While,
    validate_unit,
)

STRICT_CFLAGS = ["-std=c99", "-Wall", "-Wextra", "-Wpedantic", "-Werror"]

_ARITH_SYM = {"add": "+", "sub": "-", "mul": "*", "div": "/", "mod": "%"}
_CMP_SYM = {"lt": "<", "leq": "<=", "gt": ">", "geq": ">=", "eq": "==", "neq": "!="}


@dataclass(frozen=True)
class CSrc:
    """A complete single-function translation unit."""

    text: str
    fn_name: str
    signature: str


def _ctype(typ: SemType) -> str:
    if typ == INT or typ == BOOL:
        return "int"
    if typ == FLOAT:
        return "double"
    if typ == UNIT:
        return "void"
    raise CodegenError(f"no direct C type for {typ}")


def _float_lit(v: float) -> str:
    s = repr(v)
    if "." not in s and "e" not in s and "inf" not in s and "nan" not in s:
        s += ".0"
    return s


def _int_lit(v: int) -> str:
    if v == -(2**31):
        return "(-2147483647 - 1)"  # INT_MIN has no literal form in C
    return str(v)


class _Renderer:
    def __init__(self) -> None:
        self.lines: list[str] = []
        self.depth = 0

    def line(self, text: str) -> None:
        self.lines.append("  " * self.depth + text)

    # -- expressions ---------------------------------------------------------

    def expr(self, node: Node) -> str:
        """Render with enough parentheses to be warning-free and unambiguous:
        every non-atomic subexpression is parenthesized by its consumer."""
        return self._e(node, top=True)

    def _sub(self, node: Node) -> str:
        text = self._e(node, top=False)
        return text if self._atomic(node) else f"({text})"

    @staticmethod
    def _atomic(node: Node) -> bool:
        if isinstance(node, (ParamUse, LetUse, ReadVar, ArrLen, ArrGet)):
            return True
        if isinstance(node, Lit):
            return not (node.typ == INT and node.value < 0) and not (
                node.typ == FLOAT and node.value < 0
            )
        return False

    def _e(self, node: Node, top: bool) -> str:
        if isinstance(node, Lit):
            if node.typ == BOOL:
                return "1" if node.value else "0"
            if node.typ == FLOAT:
                return _float_lit(node.value)
            return _int_lit(node.value)
        if isinstance(node, ParamUse):
            return node.name
        if isinstance(node, LetUse):
            return node.name
        if isinstance(node, ReadVar):
            return node.ref.name
        if isinstance(node, Arith):
            return f"{self._sub(node.a)} {_ARITH_SYM[node.op]} {self._sub(node.b)}"
        if isinstance(node, Cmp):
            return f"{self._sub(node.a)} {_CMP_SYM[node.op]} {self._sub(node.b)}"
        if isinstance(node, And):
            return f"{self._sub(node.a)} && {self._sub(node.b)}"
        if isinstance(node, Or):
            return f"{self._sub(node.a)} || {self._sub(node.b)}"
        if isinstance(node, Not):
            return f"!{self._sub(node.a)}"
        if isinstance(node, Cond):
            return f"{self._sub(node.c)} ? {self._sub(node.t)} : {self._sub(node.e)}"
        if isinstance(node, ArrLen):
            if not isinstance(node.arr, ParamUse):
                raise CodegenError("array length of a non-parameter array")
            return f"{node.arr.name}_len"
        if isinstance(node, ArrGet):
            return f"{self._sub(node.arr)}[{self._e(node.idx, top=True)}]"
        if isinstance(node, SeqExpr):
            return f"({self._effect(node.first)}, {self._e(node.rest, top=False)})"
        raise CodegenError(f"statement in expression position: {type(node).__name__}")

    def _effect(self, node: Node) -> str:
        """Statement rendered inside a comma expression; simple forms only."""
        if isinstance(node, Assign):
            return f"{node.ref.name} = {self._e(node.value, top=True)}"
        if isinstance(node, ArrSet):
            return f"{self._sub(node.arr)}[{self._e(node.idx, top=True)}] = {self._e(node.value, top=True)}"
        if isinstance(node, SeqExpr):
            return f"{self._effect(node.first)}, {self._effect(node.rest)}"
        raise CodegenError(
            f"{type(node).__name__} is too complex for expression position"
        )

    # -- statements -----------------------------------------------------------

    def stmt(self, node: Node) -> None:
        if isinstance(node, Nop):
            return
        if isinstance(node, Block):
            for s in node.stmts:
                self.stmt(s)
            return
        if isinstance(node, SeqExpr):
            self.stmt(node.first)
            self.stmt(node.rest)
            return
        if isinstance(node, DeclVar):
            ref = node.ref
            self.line(f"{_ctype(ref.typ)} {ref.name} = {self.expr(node.init)};")
            return
        if isinstance(node, LetBind):
            self.line(f"const {_ctype(node.typ)} {node.name} = {self.expr(node.rhs)};")
            return
        if isinstance(node, Assign):
            name = node.ref.name
            v = node.value
            if (
                isinstance(v, Arith)
                and isinstance(v.a, ReadVar)
                and v.a.ref == node.ref
                and isinstance(v.b, Lit)
                and v.b.value == 1
                and v.op in ("add", "sub")
            ):
                self.line(f"{name}{'++' if v.op == 'add' else '--'};")
            else:
                self.line(f"{name} = {self.expr(v)};")
            return
        if isinstance(node, ArrSet):
            self.line(
                f"{self._sub(node.arr)}[{self.expr(node.idx)}] = {self.expr(node.value)};"
            )
            return
        if isinstance(node, If):
            self.line(f"if ({self.expr(node.cond)}) {{")
            self.depth += 1
            self.stmt(node.then)
            self.depth -= 1
            if node.orelse is not None and not isinstance(node.orelse, Nop):
                self.line("} else {")
                self.depth += 1
                self.stmt(node.orelse)
                self.depth -= 1
            self.line("}")
            return
        if isinstance(node, While):
            self.line(f"while ({self.expr(node.cond)}) {{")
            self.depth += 1
            self.stmt(node.body)
            self.depth -= 1
            self.line("}")
            return
        if isinstance(node, For):
            i = node.var
            op = "<" if node.excl else "<="
            self.line(
                f"for (int {i} = {self.expr(node.lo)}; {i} {op} {self._sub(node.hi)}; {i}++) {{"
            )
            self.depth += 1
            self.stmt(node.body)
            self.depth -= 1
            self.line("}")
            return
        raise CodegenError(f"expression in statement position: {type(node).__name__}")


def _param_decls(params) -> list[str]:
    decls = []
    for name, typ in params:
        if isinstance(typ, ArrT):
            decls.append(f"{_ctype(typ.elem)} *{name}")
            decls.append(f"int {name}_len")
        else:
            decls.append(f"{_ctype(typ)} {name}")
    return decls


def render(unit: EmitUnit) -> CSrc:
    """Render one unit as a self-contained C99 translation unit."""
    validate_unit(unit)  # report unbound symbols instead of emitting garbage
    decls = _param_decls(unit.params)
    signature = f"{_ctype(unit.ret)} {unit.name}({', '.join(decls) if decls else 'void'})"
    r = _Renderer()
    r.line(signature + " {")
    r.depth += 1
    body_start = len(r.lines)
    node = unit.body.node
    while isinstance(node, SeqExpr):
        r.stmt(node.first)
        node = node.rest
    if unit.ret == UNIT:
        r.stmt(node)
    else:
        r.line(f"return {r.expr(node)};")
    # a parameter may be legitimately unread (a count-only kernel needs just
    # the length); silence the diagnostic the standard way
    used = set(c_tokens("\n".join(r.lines[body_start:])))
    silence = []
    for decl in decls:
        pname = decl.split()[-1].lstrip("*")
        if pname not in used:
            silence.append("  " + f"(void){pname};")
    r.lines[body_start:body_start] = silence
    r.depth -= 1
    r.line("}")
    return CSrc(text="\n".join(r.lines) + "\n", fn_name=unit.name, signature=signature)


# ---------------------------------------------------------------------------
# Fusion scan: mechanizes the claim that emitted pipelines run without
# function calls, heap allocation, or intermediate aggregates.

_C_KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool""".split()
)

_ALLOC_TOKENS = frozenset({"malloc", "calloc", "realloc", "free", "new"})

_TOKEN_RE = re.compile(
    r"[A-Za-z_]\w*"
    r"|0[xX][0-9a-fA-F]+"
    r"|\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?"
    r"|==|!=|<=|>=|&&|\|\||\+\+|--|->"
    r"|[{}()\[\];,<>=!+\-*/%?:&|.^~]"
)

_COMMENT_RE = re.compile(r"/\*.*?\*/|//[^\n]*", re.S)
_STRING_RE = re.compile(r'"(?:\\.|[^"\\])*"|\'(?:\\.|[^\'\\])*\'')


def c_tokens(text: str) -> list[str]:
    """Token stream of a C source; comments and string bodies dropped."""
    text = _COMMENT_RE.sub(" ", text)
    text = _STRING_RE.sub(' "" ', text)
    tokens = []
    pos = 0
    for m in _TOKEN_RE.finditer(text):
        between = text[pos : m.start()]
        if between.strip():
            raise CodegenError(f"fusion scan cannot tokenize {between.strip()[:20]!r}")
        tokens.append(m.group())
        pos = m.end()
    if text[pos:].strip():
        raise CodegenError(f"fusion scan cannot tokenize {text[pos:].strip()[:20]!r}")
    return tokens


@dataclass(frozen=True)
class FusionReport:
    calls: int
    allocs: int
    aggregates: int

    @property
    def passed(self) -> bool:
        return self.calls == 0 and self.allocs == 0 and self.aggregates == 0

    def __str__(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} (calls={self.calls}, allocs={self.allocs}, aggregates={self.aggregates})"


def fusion_scan(src, fn_name: str | None = None) -> FusionReport:
    """Count call expressions, allocation tokens and aggregate literals.

    Accepts a CSrc or raw text.  The definition site of `fn_name` (first
    occurrence, for a CSrc its own function) is not a call.
    """
    if isinstance(src, CSrc):
        text, fn_name = src.text, src.fn_name
    else:
        text = src
    tokens = c_tokens(text)
    calls = 0
    allocs = 0
    aggregates = 0
    seen_def = False
    for i, tok in enumerate(tokens):
        nxt = tokens[i + 1] if i + 1 < len(tokens) else ""
        if tok in _ALLOC_TOKENS:
            allocs += 1
            continue
        if tok == "=" and nxt == "{":
            aggregates += 1
        if re.fullmatch(r"[A-Za-z_]\w*", tok) and tok not in _C_KEYWORDS and nxt == "(":
            if tok == fn_name and not seen_def:
                seen_def = True
                continue
            calls += 1
    return FusionReport(calls, allocs, aggregates)
