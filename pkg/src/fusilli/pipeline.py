"""Pipeline description files: parse, validate, pretty-print, compile.

The textual format is line-oriented with two-space indentation for nested
chains (zip sides, flat_map bodies).  Semantic actions are pure expressions
over `e` (current element), `x`/`y` (zip operands; `x` is also the outer
element inside a flat_map body), `acc`/`s` (fold/accumulator state) and
declared integer parameters.  See docs/pipeline-format.md for the grammar;
the same structure round-trips through JSON.

Every syntax or type error is reported with a line and column.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional

from .backend import FLOAT, INT, ArrT, Backend, CodeVal
from . import combinators as comb
from .cgen import CSrc, render
from .peval import wrap


class PipelineError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0) -> None:
        where = f" (line {line}, column {col})" if line else ""
        super().__init__(msg + where)
        self.msg = msg
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Action expressions


@dataclass(frozen=True)
class ENum:
    value: object  # int or float


@dataclass(frozen=True)
class EVar:
    name: str


@dataclass(frozen=True)
class EBin:
    op: str
    a: object
    b: object


@dataclass(frozen=True)
class EUn:
    op: str
    a: object


@dataclass(frozen=True)
class ECond:
    c: object
    a: object
    b: object


_EXPR_TOKEN = re.compile(
    r"\s*(?:(?P<float>\d+\.\d*(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)"
    r"|(?P<int>\d+)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>==|!=|<=|>=|&&|\|\||[-+*/%<>!?:()]))"
)

_BIN_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 4,
    "<=": 4,
    ">": 4,
    ">=": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
    "%": 6,
}


class _ExprParser:
    def __init__(self, text: str, line: int, col0: int) -> None:
        self.text = text
        self.line = line
        self.col0 = col0
        self.toks: list[tuple[str, object, int]] = []  # (kind, value, col)
        pos = 0
        while pos < len(text):
            m = _EXPR_TOKEN.match(text, pos)
            if not m:
                if text[pos:].strip():
                    self._fail(f"unexpected character {text[pos:].strip()[0]!r}", pos)
                break
            col = m.start(m.lastgroup)
            if m.lastgroup == "float":
                self.toks.append(("num", float(m.group("float")), col))
            elif m.lastgroup == "int":
                self.toks.append(("num", int(m.group("int")), col))
            elif m.lastgroup == "name":
                self.toks.append(("name", m.group("name"), col))
            else:
                self.toks.append(("op", m.group("op"), col))
            pos = m.end()
        self.i = 0

    def _fail(self, msg: str, pos: int):
        raise PipelineError(msg, self.line, self.col0 + pos + 1)

    def _peek(self) -> Optional[tuple]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def _next(self) -> tuple:
        tok = self._peek()
        if tok is None:
            raise PipelineError("unexpected end of expression", self.line, self.col0 + len(self.text))
        self.i += 1
        return tok

    def parse(self):
        e = self._ternary()
        tok = self._peek()
        if tok is not None:
            raise PipelineError(f"trailing input {tok[1]!r} in expression", self.line, self.col0 + tok[2] + 1)
        return e

    def _ternary(self):
        c = self._binary(1)
        tok = self._peek()
        if tok and tok[0] == "op" and tok[1] == "?":
            self._next()
            a = self._ternary()
            colon = self._next()
            if colon[1] != ":":
                raise PipelineError("expected ':' in conditional", self.line, self.col0 + colon[2] + 1)
            b = self._ternary()
            return ECond(c, a, b)
        return c

    def _binary(self, min_prec: int):
        left = self._unary()
        while True:
            tok = self._peek()
            if not tok or tok[0] != "op" or tok[1] not in _BIN_PREC or _BIN_PREC[tok[1]] < min_prec:
                return left
            op = tok[1]
            self._next()
            right = self._binary(_BIN_PREC[op] + 1)
            left = EBin(op, left, right)

    def _unary(self):
        tok = self._peek()
        if tok and tok[0] == "op" and tok[1] in ("!", "-"):
            self._next()
            return EUn(tok[1], self._unary())
        return self._atom()

    def _atom(self):
        kind, value, col = self._next()
        if kind == "num":
            return ENum(value)
        if kind == "name":
            return EVar(value)
        if value == "(":
            e = self._ternary()
            closer = self._next()
            if closer[1] != ")":
                raise PipelineError("expected ')'", self.line, self.col0 + closer[2] + 1)
            return e
        raise PipelineError(f"unexpected {value!r} in expression", self.line, self.col0 + col + 1)


def parse_expr(text: str, line: int = 0, col0: int = 0):
    return _ExprParser(text, line, col0).parse()


def expr_type(e, env: dict[str, str], line: int = 0) -> str:
    """Infer 'int' | 'float' | 'bool' bottom-up; raise on any mismatch."""
    if isinstance(e, ENum):
        return "float" if isinstance(e.value, float) else "int"
    if isinstance(e, EVar):
        t = env.get(e.name)
        if t is None:
            raise PipelineError(f"unknown variable {e.name!r} in action expression", line)
        return t
    if isinstance(e, EUn):
        t = expr_type(e.a, env, line)
        if e.op == "!":
            if t != "bool":
                raise PipelineError("'!' needs a boolean operand", line)
            return "bool"
        if t not in ("int", "float"):
            raise PipelineError("unary '-' needs a numeric operand", line)
        return t
    if isinstance(e, EBin):
        ta, tb = expr_type(e.a, env, line), expr_type(e.b, env, line)
        if e.op in ("&&", "||"):
            if ta != "bool" or tb != "bool":
                raise PipelineError(f"{e.op!r} needs boolean operands", line)
            return "bool"
        if ta != tb or ta not in ("int", "float"):
            raise PipelineError(f"{e.op!r} needs matching numeric operands, got {ta}/{tb}", line)
        if e.op == "%" and ta != "int":
            raise PipelineError("'%' is defined on integers only", line)
        if e.op in ("<", "<=", ">", ">=", "==", "!="):
            return "bool"
        return ta
    if isinstance(e, ECond):
        if expr_type(e.c, env, line) != "bool":
            raise PipelineError("conditional test must be boolean", line)
        ta, tb = expr_type(e.a, env, line), expr_type(e.b, env, line)
        if ta != tb:
            raise PipelineError(f"conditional arms disagree: {ta} vs {tb}", line)
        return ta
    raise PipelineError(f"bad expression node {e!r}", line)


_CMP_OPS = {"<": "lt", "<=": "leq", ">": "gt", ">=": "geq", "==": "eq", "!=": "neq"}
_ARITH_OPS = {"+": "add", "-": "sub", "*": "mul", "/": "div", "%": "mod"}


def compile_expr(e, b, env: dict[str, CodeVal]) -> CodeVal:
    """Build target code for a checked action expression."""
    if isinstance(e, ENum):
        return b.lit(e.value)
    if isinstance(e, EVar):
        return env[e.name]
    if isinstance(e, EUn):
        a = compile_expr(e.a, b, env)
        if e.op == "!":
            return b.not_(a)
        zero = b.lit(0) if a.typ == INT else b.lit(0.0)
        return b.arith("sub", zero, a)
    if isinstance(e, EBin):
        a = compile_expr(e.a, b, env)
        c = compile_expr(e.b, b, env)
        if e.op == "&&":
            return b.and_(a, c)
        if e.op == "||":
            return b.or_(a, c)
        if e.op in _CMP_OPS:
            return b.cmp(_CMP_OPS[e.op], a, c)
        return b.arith(_ARITH_OPS[e.op], a, c)
    if isinstance(e, ECond):
        return b.cond_expr(compile_expr(e.c, b, env), compile_expr(e.a, b, env), compile_expr(e.b, b, env))
    raise PipelineError(f"bad expression node {e!r}")


def pretty_expr(e) -> str:
    """Canonical fully-parenthesized form; reparses to the same tree."""
    if isinstance(e, ENum):
        return repr(e.value)
    if isinstance(e, EVar):
        return e.name
    if isinstance(e, EUn):
        return f"{e.op}{pretty_expr(e.a)}"
    if isinstance(e, EBin):
        return f"({pretty_expr(e.a)} {e.op} {pretty_expr(e.b)})"
    if isinstance(e, ECond):
        return f"({pretty_expr(e.c)} ? {pretty_expr(e.a)} : {pretty_expr(e.b)})"
    raise PipelineError(f"bad expression node {e!r}")


# ---------------------------------------------------------------------------
# Pipeline structure


@dataclass(frozen=True)
class SourceIota:
    start: object


@dataclass(frozen=True)
class SourceOfArr:
    param: str


@dataclass(frozen=True)
class SourceRange:
    lo: object
    hi: object


@dataclass(frozen=True)
class SourceZip:
    f: object
    left: "Chain"
    right: "Chain"


@dataclass(frozen=True)
class OpMap:
    f: object


@dataclass(frozen=True)
class OpFilter:
    p: object


@dataclass(frozen=True)
class OpTake:
    n: object


@dataclass(frozen=True)
class OpTakeWhile:
    p: object


@dataclass(frozen=True)
class OpDrop:
    n: object


@dataclass(frozen=True)
class OpDropWhile:
    p: object


@dataclass(frozen=True)
class OpFlatMap:
    chain: "Chain"  # outer element is bound to `x` inside


@dataclass(frozen=True)
class OpMapAccum:
    init: object
    step: object  # next state, over (s, e)
    out: object  # emitted value, over (s, e)


@dataclass(frozen=True)
class Chain:
    source: object
    ops: tuple


@dataclass(frozen=True)
class SinkSum:
    pass


@dataclass(frozen=True)
class SinkFold:
    step: object  # over (acc, e)
    init: object


@dataclass(frozen=True)
class SinkIterCount:
    pass


@dataclass(frozen=True)
class PipelineDesc:
    name: str
    params: tuple  # of (name, 'int' | 'int_array' | 'double_array')
    chain: Chain
    sink: object


PARAM_TYPES = ("int", "int_array", "double_array")
OP_NAMES = ("map", "filter", "take", "take_while", "drop", "drop_while", "flat_map", "map_accum")


# -- text format parser ------------------------------------------------------


@dataclass
class _Line:
    no: int
    indent: int
    words: list  # of (word, col) before any '(' group
    groups: list  # of (text, col) parenthesized argument groups


def _split_line(raw: str, no: int) -> Optional[_Line]:
    stripped = raw.split("#", 1)[0].rstrip()
    if not stripped.strip():
        return None
    if "\t" in raw[: len(raw) - len(raw.lstrip())]:
        raise PipelineError("tabs are not allowed in indentation", no, 1)
    indent_spaces = len(stripped) - len(stripped.lstrip(" "))
    if indent_spaces % 2:
        raise PipelineError("indentation must be a multiple of two spaces", no, 1)
    body = stripped.lstrip(" ")
    words: list = []
    groups: list = []
    pos = 0
    while pos < len(body):
        ch = body[pos]
        if ch == " ":
            pos += 1
            continue
        col = indent_spaces + pos + 1
        if ch == "(":
            depth = 0
            for end in range(pos, len(body)):
                if body[end] == "(":
                    depth += 1
                elif body[end] == ")":
                    depth -= 1
                    if depth == 0:
                        break
            else:
                raise PipelineError("unbalanced '(' in argument", no, col)
            groups.append((body[pos + 1 : end], col + 1))
            pos = end + 1
        else:
            end = pos
            while end < len(body) and body[end] not in " (":
                end += 1
            if groups:
                raise PipelineError("word arguments must precede expression arguments", no, col)
            words.append((body[pos:end], col))
            pos = end
    return _Line(no, indent_spaces // 2, words, groups)


class _Cursor:
    def __init__(self, lines: list[_Line]) -> None:
        self.lines = lines
        self.i = 0

    def peek(self) -> Optional[_Line]:
        return self.lines[self.i] if self.i < len(self.lines) else None

    def next(self) -> _Line:
        ln = self.peek()
        if ln is None:
            raise PipelineError("unexpected end of file", self.lines[-1].no if self.lines else 1)
        self.i += 1
        return ln


def _expect_groups(ln: _Line, n: int, what: str) -> list:
    if len(ln.groups) != n:
        raise PipelineError(
            f"{what} takes {n} parenthesized argument{'s' if n != 1 else ''}, got {len(ln.groups)}",
            ln.no,
            ln.words[0][1],
        )
    return [parse_expr(text, ln.no, col) for text, col in ln.groups]


def _int_or_expr(ln: _Line, what: str):
    """A count argument: either a bare integer word or one (expr) group."""
    if len(ln.words) == 2 and not ln.groups and ln.words[1][0].isdigit():
        return ENum(int(ln.words[1][0]))
    if len(ln.words) == 1 and len(ln.groups) == 1:
        return parse_expr(ln.groups[0][0], ln.no, ln.groups[0][1])
    raise PipelineError(f"{what} takes an integer or one (expr) argument", ln.no, ln.words[0][1])


def _parse_source(cur: _Cursor, indent: int) -> object:
    ln = cur.next()
    if ln.indent != indent or not ln.words or ln.words[0][0] != "source":
        raise PipelineError("expected a 'source' line", ln.no, 1)
    if len(ln.words) < 2:
        raise PipelineError("source needs a kind: iota, of_arr, range or zip_with", ln.no, ln.words[0][1])
    kind = ln.words[1][0]
    if kind == "iota":
        if len(ln.words) == 3 and not ln.groups and re.fullmatch(r"-?\d+", ln.words[2][0]):
            return SourceIota(ENum(int(ln.words[2][0])))
        if len(ln.words) == 2 and len(ln.groups) == 1:
            return SourceIota(parse_expr(ln.groups[0][0], ln.no, ln.groups[0][1]))
        raise PipelineError("iota takes an integer or one (expr) start", ln.no, ln.words[1][1])
    if kind == "of_arr":
        if len(ln.words) != 3 or ln.groups:
            raise PipelineError("of_arr takes one parameter name", ln.no, ln.words[1][1])
        return SourceOfArr(ln.words[2][0])
    if kind == "range":
        if len(ln.words) != 2 or len(ln.groups) != 2:
            raise PipelineError("range takes (lo) (hi) expression arguments", ln.no, ln.words[1][1])
        lo = parse_expr(ln.groups[0][0], ln.no, ln.groups[0][1])
        hi = parse_expr(ln.groups[1][0], ln.no, ln.groups[1][1])
        return SourceRange(lo, hi)
    if kind == "zip_with":
        if len(ln.words) != 2 or len(ln.groups) != 1:
            raise PipelineError("zip_with takes one (expr over x, y) argument", ln.no, ln.words[1][1])
        f = parse_expr(ln.groups[0][0], ln.no, ln.groups[0][1])
        sides = {}
        for side in ("left", "right"):
            hdr = cur.next()
            if hdr.indent != indent + 1 or not hdr.words or hdr.words[0][0] != side or hdr.groups:
                raise PipelineError(f"zip_with expects a {side!r} block here", hdr.no, 1)
            sides[side] = _parse_chain(cur, indent + 2)
        return SourceZip(f, sides["left"], sides["right"])
    raise PipelineError(f"unknown source kind {kind!r}", ln.no, ln.words[1][1])


def _parse_chain(cur: _Cursor, indent: int) -> Chain:
    source = _parse_source(cur, indent)
    ops: list = []
    while True:
        ln = cur.peek()
        if ln is None or ln.indent < indent:
            break
        if ln.indent > indent:
            raise PipelineError("unexpected indentation", ln.no, 1)
        word = ln.words[0][0] if ln.words else ""
        if word in ("sink", "left", "right"):
            break
        cur.next()
        if word == "map":
            (f,) = _expect_groups(ln, 1, "map")
            ops.append(OpMap(f))
        elif word == "filter":
            (p,) = _expect_groups(ln, 1, "filter")
            ops.append(OpFilter(p))
        elif word == "take":
            ops.append(OpTake(_int_or_expr(ln, "take")))
        elif word == "drop":
            ops.append(OpDrop(_int_or_expr(ln, "drop")))
        elif word == "take_while":
            (p,) = _expect_groups(ln, 1, "take_while")
            ops.append(OpTakeWhile(p))
        elif word == "drop_while":
            (p,) = _expect_groups(ln, 1, "drop_while")
            ops.append(OpDropWhile(p))
        elif word == "map_accum":
            init, step, out = _expect_groups(ln, 3, "map_accum")
            ops.append(OpMapAccum(init, step, out))
        elif word == "flat_map":
            if ln.groups or len(ln.words) != 1:
                raise PipelineError("flat_map takes an indented chain, no inline arguments", ln.no, ln.words[0][1])
            ops.append(OpFlatMap(_parse_chain(cur, indent + 1)))
        else:
            raise PipelineError(f"unknown op {word!r}", ln.no, ln.words[0][1] if ln.words else 1)
    return Chain(source, tuple(ops))


def parse_pipeline(text: str) -> PipelineDesc:
    """Parse and validate a pipeline description; errors carry line/column."""
    lines = []
    for no, raw in enumerate(text.splitlines(), start=1):
        ln = _split_line(raw, no)
        if ln is not None:
            lines.append(ln)
    if not lines:
        raise PipelineError("empty pipeline description", 1)
    cur = _Cursor(lines)
    hdr = cur.next()
    if hdr.words[0][0] != "pipeline" or len(hdr.words) != 2 or hdr.indent != 0:
        raise PipelineError("file must start with 'pipeline <name>'", hdr.no, 1)
    name = hdr.words[1][0]
    if not re.fullmatch(r"[A-Za-z_]\w*", name):
        raise PipelineError(f"bad pipeline name {name!r}", hdr.no, hdr.words[1][1])
    params: list = []
    while True:
        ln = cur.peek()
        if ln is None or not ln.words or ln.words[0][0] != "param":
            break
        cur.next()
        if len(ln.words) != 3 or ln.indent != 0:
            raise PipelineError("param lines read: param <name> <type>", ln.no, 1)
        pname, ptype = ln.words[1][0], ln.words[2][0]
        if ptype not in PARAM_TYPES:
            raise PipelineError(f"unknown param type {ptype!r} (one of {', '.join(PARAM_TYPES)})", ln.no, ln.words[2][1])
        if any(p[0] == pname for p in params):
            raise PipelineError(f"duplicate param {pname!r}", ln.no, ln.words[1][1])
        params.append((pname, ptype))
    chain = _parse_chain(cur, 0)
    ln = cur.next()
    if not ln.words or ln.words[0][0] != "sink" or ln.indent != 0:
        raise PipelineError("expected a 'sink' line", ln.no, 1)
    if len(ln.words) < 2:
        raise PipelineError("sink needs a kind: sum, fold or iter_count", ln.no, ln.words[0][1])
    kind = ln.words[1][0]
    if kind == "sum":
        sink = SinkSum()
    elif kind == "iter_count":
        sink = SinkIterCount()
    elif kind == "fold":
        step, init = _expect_groups(ln, 2, "fold")
        sink = SinkFold(step, init)
    else:
        raise PipelineError(f"unknown sink kind {kind!r}", ln.no, ln.words[1][1])
    if cur.peek() is not None:
        extra = cur.peek()
        raise PipelineError("trailing input after sink", extra.no, 1)
    desc = PipelineDesc(name, tuple(params), chain, sink)
    check_pipeline(desc)
    return desc


# -- static checking -----------------------------------------------------------


def _base_env(desc: PipelineDesc) -> dict[str, str]:
    return {n: "int" for n, t in desc.params if t == "int"}


def _check_chain(chain: Chain, desc: PipelineDesc, env: dict[str, str]) -> str:
    """Type-check a chain; returns its element type ('int' | 'float')."""
    src = chain.source
    if isinstance(src, SourceIota):
        if expr_type(src.start, env) != "int":
            raise PipelineError("iota start must be an integer expression")
        elem = "int"
    elif isinstance(src, SourceOfArr):
        ptype = dict(desc.params).get(src.param)
        if ptype is None:
            raise PipelineError(f"of_arr references undeclared param {src.param!r}")
        if ptype == "int":
            raise PipelineError(f"of_arr needs an array param, {src.param!r} is an int")
        elem = "int" if ptype == "int_array" else "float"
    elif isinstance(src, SourceRange):
        if expr_type(src.lo, env) != "int" or expr_type(src.hi, env) != "int":
            raise PipelineError("range bounds must be integer expressions")
        elem = "int"
    elif isinstance(src, SourceZip):
        le = _check_chain(src.left, desc, env)
        re_ = _check_chain(src.right, desc, env)
        elem = expr_type(src.f, {**env, "x": le, "y": re_})
        if elem == "bool":
            raise PipelineError("zip_with action must produce a number")
    else:
        raise PipelineError(f"bad source {src!r}")
    for op in chain.ops:
        if isinstance(op, OpMap):
            elem2 = expr_type(op.f, {**env, "e": elem})
            if elem2 == "bool":
                raise PipelineError("map action must produce a number")
            elem = elem2
        elif isinstance(op, (OpFilter, OpTakeWhile, OpDropWhile)):
            pred = op.p
            if expr_type(pred, {**env, "e": elem}) != "bool":
                raise PipelineError(f"{type(op).__name__[2:].lower()} action must be boolean")
        elif isinstance(op, (OpTake, OpDrop)):
            if expr_type(op.n, env) != "int":
                raise PipelineError("take/drop count must be an integer expression")
        elif isinstance(op, OpMapAccum):
            st = expr_type(op.init, env)
            if st == "bool":
                raise PipelineError("map_accum state must be numeric")
            if expr_type(op.step, {**env, "s": st, "e": elem}) != st:
                raise PipelineError("map_accum state update must preserve the state type")
            out = expr_type(op.out, {**env, "s": st, "e": elem})
            if out == "bool":
                raise PipelineError("map_accum output must be a number")
            elem = out
        elif isinstance(op, OpFlatMap):
            elem = _check_chain(op.chain, desc, {**env, "x": elem})
        else:
            raise PipelineError(f"bad op {op!r}")
    return elem


def _collect_used(e, used: set) -> None:
    if isinstance(e, EVar):
        used.add(e.name)
    elif isinstance(e, EBin):
        _collect_used(e.a, used)
        _collect_used(e.b, used)
    elif isinstance(e, EUn):
        _collect_used(e.a, used)
    elif isinstance(e, ECond):
        _collect_used(e.c, used)
        _collect_used(e.a, used)
        _collect_used(e.b, used)


def _chain_used(chain: Chain, used: set) -> None:
    src = chain.source
    if isinstance(src, SourceIota):
        _collect_used(src.start, used)
    elif isinstance(src, SourceOfArr):
        used.add(src.param)
    elif isinstance(src, SourceRange):
        _collect_used(src.lo, used)
        _collect_used(src.hi, used)
    elif isinstance(src, SourceZip):
        _collect_used(src.f, used)
        _chain_used(src.left, used)
        _chain_used(src.right, used)
    for op in chain.ops:
        for field_name in getattr(op, "__dataclass_fields__", ()):
            v = getattr(op, field_name)
            if isinstance(v, Chain):
                _chain_used(v, used)
            elif isinstance(v, (ENum, EVar, EBin, EUn, ECond)):
                _collect_used(v, used)


def check_pipeline(desc: PipelineDesc) -> str:
    """Validate the whole description; returns the sink's result type."""
    env = _base_env(desc)
    elem = _check_chain(desc.chain, desc, env)
    used: set = set()
    _chain_used(desc.chain, used)
    sink = desc.sink
    if isinstance(sink, SinkFold):
        _collect_used(sink.step, used)
        _collect_used(sink.init, used)
    unused = [n for n, _ in desc.params if n not in used]
    if unused:
        raise PipelineError(
            f"unused parameter{'s' if len(unused) > 1 else ''}: {', '.join(unused)}"
        )
    if isinstance(sink, SinkSum):
        return elem
    if isinstance(sink, SinkIterCount):
        return "int"
    if isinstance(sink, SinkFold):
        acc = expr_type(sink.init, env)
        if acc == "bool":
            raise PipelineError("fold accumulator must be numeric")
        if expr_type(sink.step, {**env, "acc": acc, "e": elem}) != acc:
            raise PipelineError("fold step must preserve the accumulator type")
        return acc
    raise PipelineError(f"bad sink {sink!r}")


# -- pretty printer --------------------------------------------------------------


def _fmt_count(e) -> str:
    if isinstance(e, ENum) and isinstance(e.value, int) and e.value >= 0:
        return str(e.value)
    return f"({pretty_expr(e)})"


def _pretty_chain(chain: Chain, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    src = chain.source
    if isinstance(src, SourceIota):
        out.append(f"{pad}source iota {_fmt_count(src.start)}")
    elif isinstance(src, SourceOfArr):
        out.append(f"{pad}source of_arr {src.param}")
    elif isinstance(src, SourceRange):
        out.append(f"{pad}source range ({pretty_expr(src.lo)}) ({pretty_expr(src.hi)})")
    elif isinstance(src, SourceZip):
        out.append(f"{pad}source zip_with ({pretty_expr(src.f)})")
        out.append(f"{pad}  left")
        _pretty_chain(src.left, indent + 2, out)
        out.append(f"{pad}  right")
        _pretty_chain(src.right, indent + 2, out)
    for op in chain.ops:
        if isinstance(op, OpMap):
            out.append(f"{pad}map ({pretty_expr(op.f)})")
        elif isinstance(op, OpFilter):
            out.append(f"{pad}filter ({pretty_expr(op.p)})")
        elif isinstance(op, OpTake):
            out.append(f"{pad}take {_fmt_count(op.n)}")
        elif isinstance(op, OpDrop):
            out.append(f"{pad}drop {_fmt_count(op.n)}")
        elif isinstance(op, OpTakeWhile):
            out.append(f"{pad}take_while ({pretty_expr(op.p)})")
        elif isinstance(op, OpDropWhile):
            out.append(f"{pad}drop_while ({pretty_expr(op.p)})")
        elif isinstance(op, OpMapAccum):
            out.append(
                f"{pad}map_accum ({pretty_expr(op.init)}) ({pretty_expr(op.step)}) ({pretty_expr(op.out)})"
            )
        elif isinstance(op, OpFlatMap):
            out.append(f"{pad}flat_map")
            _pretty_chain(op.chain, indent + 1, out)


def pretty_pipeline(desc: PipelineDesc) -> str:
    out = [f"pipeline {desc.name}"]
    for pname, ptype in desc.params:
        out.append(f"param {pname} {ptype}")
    _pretty_chain(desc.chain, 0, out)
    sink = desc.sink
    if isinstance(sink, SinkSum):
        out.append("sink sum")
    elif isinstance(sink, SinkIterCount):
        out.append("sink iter_count")
    else:
        out.append(f"sink fold ({pretty_expr(sink.step)}) ({pretty_expr(sink.init)})")
    return "\n".join(out) + "\n"


# -- JSON convenience --------------------------------------------------------------


def _expr_to_str(e) -> str:
    return pretty_expr(e)


def _chain_to_json(chain: Chain) -> dict:
    src = chain.source
    if isinstance(src, SourceIota):
        source = {"kind": "iota", "start": _expr_to_str(src.start)}
    elif isinstance(src, SourceOfArr):
        source = {"kind": "of_arr", "param": src.param}
    elif isinstance(src, SourceRange):
        source = {"kind": "range", "lo": _expr_to_str(src.lo), "hi": _expr_to_str(src.hi)}
    else:
        source = {
            "kind": "zip_with",
            "f": _expr_to_str(src.f),
            "left": _chain_to_json(src.left),
            "right": _chain_to_json(src.right),
        }
    ops = []
    for op in chain.ops:
        if isinstance(op, OpMap):
            ops.append({"op": "map", "f": _expr_to_str(op.f)})
        elif isinstance(op, OpFilter):
            ops.append({"op": "filter", "p": _expr_to_str(op.p)})
        elif isinstance(op, OpTake):
            ops.append({"op": "take", "n": _expr_to_str(op.n)})
        elif isinstance(op, OpDrop):
            ops.append({"op": "drop", "n": _expr_to_str(op.n)})
        elif isinstance(op, OpTakeWhile):
            ops.append({"op": "take_while", "p": _expr_to_str(op.p)})
        elif isinstance(op, OpDropWhile):
            ops.append({"op": "drop_while", "p": _expr_to_str(op.p)})
        elif isinstance(op, OpMapAccum):
            ops.append(
                {
                    "op": "map_accum",
                    "init": _expr_to_str(op.init),
                    "step": _expr_to_str(op.step),
                    "out": _expr_to_str(op.out),
                }
            )
        else:
            ops.append({"op": "flat_map", "chain": _chain_to_json(op.chain)})
    return {"source": source, "ops": ops}


def to_json(desc: PipelineDesc) -> str:
    doc = {
        "name": desc.name,
        "params": [{"name": n, "type": t} for n, t in desc.params],
        **_chain_to_json(desc.chain),
    }
    sink = desc.sink
    if isinstance(sink, SinkSum):
        doc["sink"] = {"kind": "sum"}
    elif isinstance(sink, SinkIterCount):
        doc["sink"] = {"kind": "iter_count"}
    else:
        doc["sink"] = {"kind": "fold", "step": _expr_to_str(sink.step), "init": _expr_to_str(sink.init)}
    return json.dumps(doc, indent=2) + "\n"


def _chain_from_json(doc: dict) -> Chain:
    src = doc["source"]
    kind = src["kind"]
    if kind == "iota":
        source = SourceIota(parse_expr(src["start"]))
    elif kind == "of_arr":
        source = SourceOfArr(src["param"])
    elif kind == "range":
        source = SourceRange(parse_expr(src["lo"]), parse_expr(src["hi"]))
    elif kind == "zip_with":
        source = SourceZip(parse_expr(src["f"]), _chain_from_json(src["left"]), _chain_from_json(src["right"]))
    else:
        raise PipelineError(f"unknown source kind {kind!r} in JSON")
    ops: list = []
    for op in doc.get("ops", ()):
        k = op["op"]
        if k == "map":
            ops.append(OpMap(parse_expr(op["f"])))
        elif k == "filter":
            ops.append(OpFilter(parse_expr(op["p"])))
        elif k == "take":
            ops.append(OpTake(parse_expr(op["n"])))
        elif k == "drop":
            ops.append(OpDrop(parse_expr(op["n"])))
        elif k == "take_while":
            ops.append(OpTakeWhile(parse_expr(op["p"])))
        elif k == "drop_while":
            ops.append(OpDropWhile(parse_expr(op["p"])))
        elif k == "map_accum":
            ops.append(OpMapAccum(parse_expr(op["init"]), parse_expr(op["step"]), parse_expr(op["out"])))
        elif k == "flat_map":
            ops.append(OpFlatMap(_chain_from_json(op["chain"])))
        else:
            raise PipelineError(f"unknown op {k!r} in JSON")
    return Chain(source, tuple(ops))


def from_json(text: str) -> PipelineDesc:
    doc = json.loads(text)
    sink_doc = doc.get("sink", {"kind": "sum"})
    kind = sink_doc["kind"]
    if kind == "sum":
        sink = SinkSum()
    elif kind == "iter_count":
        sink = SinkIterCount()
    elif kind == "fold":
        sink = SinkFold(parse_expr(sink_doc["step"]), parse_expr(sink_doc["init"]))
    else:
        raise PipelineError(f"unknown sink kind {kind!r} in JSON")
    desc = PipelineDesc(
        doc["name"],
        tuple((p["name"], p["type"]) for p in doc.get("params", ())),
        _chain_from_json(doc),
        sink,
    )
    check_pipeline(desc)
    return desc


# -- compilation -------------------------------------------------------------------


def _build_chain(chain: Chain, b, env: dict[str, CodeVal]) -> comb.Stream:
    src = chain.source
    if isinstance(src, SourceIota):
        s = comb.iota(b, compile_expr(src.start, b, env))
    elif isinstance(src, SourceOfArr):
        s = comb.of_arr(b, env[src.param])
    elif isinstance(src, SourceRange):
        s = comb.range_(b, compile_expr(src.lo, b, env), compile_expr(src.hi, b, env))
    elif isinstance(src, SourceZip):
        left = _build_chain(src.left, b, env)
        right = _build_chain(src.right, b, env)
        s = comb.zip_with(lambda x, y: compile_expr(src.f, b, {**env, "x": x, "y": y}), left, right)
    else:
        raise PipelineError(f"bad source {src!r}")
    for op in chain.ops:
        if isinstance(op, OpMap):
            s = s.map(lambda e, op=op: compile_expr(op.f, b, {**env, "e": e}))
        elif isinstance(op, OpFilter):
            s = s.filter(lambda e, op=op: compile_expr(op.p, b, {**env, "e": e}))
        elif isinstance(op, OpTake):
            s = s.take(compile_expr(op.n, b, env))
        elif isinstance(op, OpDrop):
            s = s.drop(compile_expr(op.n, b, env))
        elif isinstance(op, OpTakeWhile):
            s = s.take_while(lambda e, op=op: compile_expr(op.p, b, {**env, "e": e}))
        elif isinstance(op, OpDropWhile):
            s = s.drop_while(lambda e, op=op: compile_expr(op.p, b, {**env, "e": e}))
        elif isinstance(op, OpMapAccum):
            s = s.map_accum(
                lambda st, e, op=op: (
                    compile_expr(op.step, b, {**env, "s": st, "e": e}),
                    compile_expr(op.out, b, {**env, "s": st, "e": e}),
                ),
                compile_expr(op.init, b, env),
            )
        elif isinstance(op, OpFlatMap):
            s = s.flat_map(lambda x, op=op: _build_chain(op.chain, b, {**env, "x": x}))
        else:
            raise PipelineError(f"bad op {op!r}")
    return s


def build_unit(desc: PipelineDesc, b):
    """Build the pipeline as one emit unit over the given backend."""
    elem = check_pipeline(desc)
    sem = {"int": INT, "int_array": ArrT(INT), "double_array": ArrT(FLOAT)}
    params = [(n, sem[t]) for n, t in desc.params]

    def body(*args):
        env = {n: cv for (n, _), cv in zip(desc.params, args)}
        s = _build_chain(desc.chain, b, env)
        sink = desc.sink
        if isinstance(sink, SinkSum):
            zero = b.lit(0) if elem == "int" else b.lit(0.0)
            return s.fold(lambda acc, e: b.arith("add", acc, e), zero)
        if isinstance(sink, SinkIterCount):
            return s.fold(lambda acc, e: b.arith("add", acc, b.lit(1)), b.lit(0))
        return s.fold(
            lambda acc, e: compile_expr(sink.step, b, {**env, "acc": acc, "e": e}),
            compile_expr(sink.init, b, env),
        )

    return b.make_fun(desc.name, params, body)


def compile_to_c(desc: PipelineDesc) -> CSrc:
    """Build over the partially-evaluating C route and render one unit."""
    return render(build_unit(desc, wrap(Backend())))
