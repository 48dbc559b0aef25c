"""In-process evaluator for emit units: the semantic oracle.

Evaluation models C semantics exactly -- 32-bit wrapping integers, truncating
division, IEEE doubles -- so results can be compared bit-for-bit against the
compiled emission.  Unlike C, out-of-bounds access, division by zero and
uninitialized reads are hard errors here: strictness in the oracle catches
engine bugs before they become silent miscompiles.

Each unit is translated once into a Python function (loops into loops,
locals into locals) and cached; this keeps verification of benchmark-sized
inputs affordable without changing any semantics.
"""

from __future__ import annotations

import math
import weakref
from typing import Optional

from .backend import (
    ARITH_OPS,
    Backend,
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
    Not,
    Or,
    ParamUse,
    ReadVar,
    SemType,
    SeqExpr,
    While,
)
from .cints import c_div, c_mod, wrap32

DEFAULT_FUEL = 10_000_000


class EvalTrap(Exception):
    """Hard runtime error in the evaluator (with what/where context)."""


def _fdiv(a: float, b: float) -> float:
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)
    return a / b


def _idiv(a: int, b: int) -> int:
    if b == 0:
        raise EvalTrap("integer division by zero")
    return c_div(a, b)


def _imod(a: int, b: int) -> int:
    if b == 0:
        raise EvalTrap("integer remainder by zero")
    return c_mod(a, b)


def _ck(i: int, n: int) -> int:
    if i < 0 or i >= n:
        raise EvalTrap(f"array index {i} out of bounds (length {n})")
    return i


def _aset(arr: list, i: int, v) -> None:
    arr[_ck(i, len(arr))] = v


_CMP_PY = {"lt": "<", "leq": "<=", "gt": ">", "geq": ">=", "eq": "==", "neq": "!="}
_FLOAT_PY = {"add": "+", "sub": "-", "mul": "*"}


def fold_arith(op: str, typ: SemType, a, b):
    """Constant arithmetic under target semantics; None if undefined."""
    assert op in ARITH_OPS
    if typ == INT:
        if op == "add":
            return wrap32(a + b)
        if op == "sub":
            return wrap32(a - b)
        if op == "mul":
            return wrap32(a * b)
        if b == 0:
            return None
        return c_div(a, b) if op == "div" else c_mod(a, b)
    if op == "div":
        return _fdiv(a, b)
    return {"add": a + b, "sub": a - b, "mul": a * b}[op]


def fold_cmp(op: str, a, b) -> bool:
    return {
        "lt": a < b,
        "leq": a <= b,
        "gt": a > b,
        "geq": a >= b,
        "eq": a == b,
        "neq": a != b,
    }[op]


class _Gen:
    """Translate one unit body into Python source."""

    def __init__(self, params, tracing: bool) -> None:
        self.lines: list[str] = []
        self.depth = 1
        self.tracing = tracing
        self.tenv: dict[str, SemType] = dict(params)

    def emit(self, text: str) -> None:
        self.lines.append("    " * self.depth + text)

    def _wrap32(self, s: str) -> str:
        return f"((({s}) + 2147483648 & 4294967295) - 2147483648)"

    def expr(self, node: Node) -> tuple[str, SemType]:
        if isinstance(node, Lit):
            if node.typ == FLOAT:
                return repr(node.value), FLOAT
            return repr(node.value), node.typ
        if isinstance(node, (ParamUse, LetUse)):
            return node.name, self.tenv[node.name]
        if isinstance(node, ReadVar):
            return node.ref.name, node.ref.typ
        if isinstance(node, Arith):
            a, ta = self.expr(node.a)
            b, _ = self.expr(node.b)
            if ta == INT:
                if node.op == "div":
                    return f"_idiv({a}, {b})", INT
                if node.op == "mod":
                    return f"_imod({a}, {b})", INT
                sym = {"add": "+", "sub": "-", "mul": "*"}[node.op]
                return self._wrap32(f"({a}) {sym} ({b})"), INT
            if node.op == "div":
                return f"_fdiv({a}, {b})", FLOAT
            return f"(({a}) {_FLOAT_PY[node.op]} ({b}))", FLOAT
        if isinstance(node, Cmp):
            a, _ = self.expr(node.a)
            b, _ = self.expr(node.b)
            return f"(({a}) {_CMP_PY[node.op]} ({b}))", BOOL
        if isinstance(node, And):
            a, _ = self.expr(node.a)
            b, _ = self.expr(node.b)
            return f"(({a}) and ({b}))", BOOL
        if isinstance(node, Or):
            a, _ = self.expr(node.a)
            b, _ = self.expr(node.b)
            return f"(({a}) or ({b}))", BOOL
        if isinstance(node, Not):
            a, _ = self.expr(node.a)
            return f"(not ({a}))", BOOL
        if isinstance(node, Cond):
            c, _ = self.expr(node.c)
            t, tt = self.expr(node.t)
            e, _ = self.expr(node.e)
            return f"(({t}) if ({c}) else ({e}))", tt
        if isinstance(node, ArrLen):
            a, _ = self.expr(node.arr)
            return f"len({a})", INT
        if isinstance(node, ArrGet):
            a, ta = self.expr(node.arr)
            i, _ = self.expr(node.idx)
            return f"({a}[_ck({i}, len({a}))])", ta.elem
        if isinstance(node, SeqExpr):
            eff = self._effect(node.first)
            rest, tr = self.expr(node.rest)
            return f"(({eff}), ({rest}))[1]", tr
        raise EvalTrap(f"cannot evaluate {type(node).__name__} as an expression")

    def _effect(self, node: Node) -> str:
        """Statement compiled into expression position (comma-style)."""
        if isinstance(node, Nop):
            return "None"
        if isinstance(node, Assign):
            v, _ = self.expr(node.value)
            name = node.ref.name
            if self.tracing:
                return f"(({name} := ({v})), _trace.append(({name!r}, 'write')))"
            return f"({name} := ({v}))"
        if isinstance(node, ArrSet):
            a, _ = self.expr(node.arr)
            i, _ = self.expr(node.idx)
            v, _ = self.expr(node.value)
            return f"_aset({a}, {i}, {v})"
        if isinstance(node, SeqExpr):
            return f"({self._effect(node.first)}, {self._effect(node.rest)})"
        raise EvalTrap(f"{type(node).__name__} is too complex for expression position")

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
        if isinstance(node, (DeclVar, LetBind)):
            if isinstance(node, DeclVar):
                name, typ, init = node.ref.name, node.ref.typ, node.init
                kind = "decl"
            else:
                name, typ, init = node.name, node.typ, node.rhs
                kind = None
            v, tv = self.expr(init)
            self.tenv[name] = typ if typ is not None else tv
            self.emit(f"{name} = {v}")
            if self.tracing and kind:
                self.emit(f"_trace.append(({name!r}, {kind!r}))")
            return
        if isinstance(node, Assign):
            v, _ = self.expr(node.value)
            self.emit(f"{node.ref.name} = {v}")
            if self.tracing:
                self.emit(f"_trace.append(({node.ref.name!r}, 'write'))")
            return
        if isinstance(node, ArrSet):
            a, _ = self.expr(node.arr)
            i, _ = self.expr(node.idx)
            v, _ = self.expr(node.value)
            self.emit(f"_aset({a}, {i}, {v})")
            if self.tracing:
                label = node.arr.name if isinstance(node.arr, ParamUse) else "<array>"
                self.emit(f"_trace.append(({label!r}, 'arr_write'))")
            return
        if isinstance(node, If):
            c, _ = self.expr(node.cond)
            self.emit(f"if {c}:")
            self.depth += 1
            self.stmt(node.then)
            if not self.lines[-1].strip() or self.lines[-1].endswith(":"):
                self.emit("pass")
            self.depth -= 1
            if node.orelse is not None and not isinstance(node.orelse, Nop):
                self.emit("else:")
                self.depth += 1
                self.stmt(node.orelse)
                if self.lines[-1].endswith(":"):
                    self.emit("pass")
                self.depth -= 1
            return
        if isinstance(node, While):
            c, _ = self.expr(node.cond)
            self.emit(f"while {c}:")
            self.depth += 1
            self.emit("_steps += 1")
            self.emit("if _steps > _fuel:")
            self.emit("    raise EvalTrap('fuel exhausted after %d loop steps' % _fuel)")
            self.stmt(node.body)
            self.depth -= 1
            return
        if isinstance(node, For):
            lo, _ = self.expr(node.lo)
            hi, _ = self.expr(node.hi)
            self.tenv[node.var] = INT
            upper = f"({hi})" if node.excl else f"({hi}) + 1"
            self.emit(f"for {node.var} in range({lo}, {upper}):")
            self.depth += 1
            self.emit("_steps += 1")
            self.emit("if _steps > _fuel:")
            self.emit("    raise EvalTrap('fuel exhausted after %d loop steps' % _fuel)")
            self.stmt(node.body)
            self.depth -= 1
            return
        raise EvalTrap(f"cannot execute {type(node).__name__} as a statement")


def _translate(unit: EmitUnit, tracing: bool):
    gen = _Gen(unit.params, tracing)
    node = unit.body.node
    while isinstance(node, SeqExpr):
        gen.stmt(node.first)
        node = node.rest
    if unit.ret == UNIT:
        gen.stmt(node)
        ret = "None"
    else:
        ret, _ = gen.expr(node)
    args = ", ".join(n for n, _ in unit.params)
    header = f"def _unit({args}{', ' if args else ''}*, _fuel, _trace):"
    body = ["    _steps = 0"] + gen.lines + [f"    return ({ret}), _steps"]
    src = header + "\n" + "\n".join(body) + "\n"
    ns = {
        "EvalTrap": EvalTrap,
        "_ck": _ck,
        "_aset": _aset,
        "_idiv": _idiv,
        "_imod": _imod,
        "_fdiv": _fdiv,
    }
    exec(compile(src, f"<fusilli:{unit.name}>", "exec"), ns)
    return ns["_unit"]


_compiled: "weakref.WeakKeyDictionary[EmitUnit, dict]" = weakref.WeakKeyDictionary()


def _fn_for(unit: EmitUnit, tracing: bool):
    per_unit = _compiled.get(unit)
    if per_unit is None:
        per_unit = {}
        _compiled[unit] = per_unit
    fn = per_unit.get(tracing)
    if fn is None:
        fn = _translate(unit, tracing)
        per_unit[tracing] = fn
    return fn


def _check_value(typ: SemType, v, where: str):
    if typ == INT:
        if not isinstance(v, int) or isinstance(v, bool):
            raise EvalTrap(f"{where}: expected int, got {type(v).__name__}")
        return wrap32(v)
    if typ == FLOAT:
        if not isinstance(v, float):
            raise EvalTrap(f"{where}: expected float, got {type(v).__name__}")
        return v
    if typ == BOOL:
        if not isinstance(v, bool):
            raise EvalTrap(f"{where}: expected bool, got {type(v).__name__}")
        return v
    if isinstance(typ, ArrT):
        if not isinstance(v, list):
            raise EvalTrap(f"{where}: expected list, got {type(v).__name__}")
        if typ.elem == INT and v:
            try:  # in-range int lists pass through unchanged (and uncopied:
                # the unit sees the caller's array, like C through the pointer)
                if min(v) >= -(2**31) and max(v) <= 2**31 - 1:
                    return v
            except TypeError:
                raise EvalTrap(f"{where}: array elements must all be ints") from None
        return [_check_value(typ.elem, x, where) for x in v]
    raise EvalTrap(f"{where}: unsupported argument type {typ}")


def _run(unit: EmitUnit, args, fuel: Optional[int], trace: Optional[list]):
    if len(args) != len(unit.params):
        raise EvalTrap(f"{unit.name} takes {len(unit.params)} arguments, got {len(args)}")
    vals = [_check_value(t, v, f"argument {n!r}") for (n, t), v in zip(unit.params, args)]
    fn = _fn_for(unit, trace is not None)
    try:
        return fn(*vals, _fuel=math.inf if fuel is None else fuel, _trace=trace)
    except (UnboundLocalError, NameError) as exc:
        raise EvalTrap(f"read of uninitialized variable ({exc})") from None


def eval_unit(unit: EmitUnit, args=(), fuel: Optional[int] = DEFAULT_FUEL):
    """Evaluate a sealed unit on the given argument values."""
    value, _ = _run(unit, args, fuel, None)
    return value


def eval_count(unit: EmitUnit, args=(), fuel: Optional[int] = DEFAULT_FUEL):
    """Like eval_unit, also returning the number of loop-body executions."""
    return _run(unit, args, fuel, None)


def eval_traced(unit: EmitUnit, args=(), fuel: Optional[int] = DEFAULT_FUEL):
    """Evaluate and return (value, effect trace).  Test instrumentation."""
    trace: list = []
    value, _ = _run(unit, args, fuel, trace)
    return value, trace


class Interp(Backend):
    """Backend whose units are meant for direct evaluation."""

    eval_unit = staticmethod(eval_unit)
    eval_count = staticmethod(eval_count)
    eval_traced = staticmethod(eval_traced)
