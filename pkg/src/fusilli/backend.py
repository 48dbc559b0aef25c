"""Typed code-construction interface shared by every code generator.

A pipeline is compiled by building target code through the `Backend` API:
literals, arithmetic, mutable cells, loops and conditionals.  The API is
deliberately first-order -- there is no way to express a function call or an
aggregate value -- which is what makes the complete-fusion guarantee of the
stream engine structural rather than aspirational.

Construction is checked: every operation validates operand types, rejects
values built by a different backend instance, and `make_fun` revalidates the
whole tree (types, identifier freshness, declaration-before-use) before
sealing an `EmitUnit`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union


class CodegenError(Exception):
    """Base class for all construction-time errors."""


class TypeMismatchError(CodegenError):
    pass


class BackendMixError(CodegenError):
    """A value built by one backend was fed into another."""


class UnboundVarError(CodegenError):
    """A sealed unit references an identifier not introduced inside it."""


# ---------------------------------------------------------------------------
# Semantic types


class SemType:
    """Base of the small semantic-type universe."""

    __slots__ = ()


@dataclass(frozen=True)
class _Prim(SemType):
    name: str

    def __repr__(self) -> str:
        return self.name


INT = _Prim("int")
BOOL = _Prim("bool")
FLOAT = _Prim("float")
UNIT = _Prim("unit")


@dataclass(frozen=True)
class ArrT(SemType):
    """Array of scalars; nesting is rejected at construction."""

    elem: SemType

    def __post_init__(self) -> None:
        if self.elem not in (INT, FLOAT):
            raise TypeMismatchError(f"array element type must be int or float, got {self.elem}")

    def __repr__(self) -> str:
        return f"arr[{self.elem}]"


NUMERIC = (INT, FLOAT)

ARITH_OPS = ("add", "sub", "mul", "div", "mod")
CMP_OPS = ("lt", "leq", "gt", "geq", "eq", "neq")


# ---------------------------------------------------------------------------
# IR nodes.  Expressions and statements share one node hierarchy; statements
# are the nodes whose CodeVal type is UNIT.


class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Lit(Node):
    value: Union[int, bool, float]
    typ: SemType


@dataclass(frozen=True)
class ParamUse(Node):
    name: str
    typ: SemType


@dataclass(frozen=True)
class VarRef:
    """Handle for a mutable cell.  Always mutable; idents are unit-unique."""

    name: str
    typ: SemType


@dataclass(frozen=True)
class ReadVar(Node):
    ref: VarRef


@dataclass(frozen=True)
class LetUse(Node):
    """Use of an immutable binding introduced by letb (or a loop index)."""

    name: str
    typ: SemType


@dataclass(frozen=True)
class Arith(Node):
    op: str
    a: Node
    b: Node


@dataclass(frozen=True)
class Cmp(Node):
    op: str
    a: Node
    b: Node


@dataclass(frozen=True)
class And(Node):
    a: Node
    b: Node


@dataclass(frozen=True)
class Or(Node):
    a: Node
    b: Node


@dataclass(frozen=True)
class Not(Node):
    a: Node


@dataclass(frozen=True)
class Cond(Node):
    c: Node
    t: Node
    e: Node


@dataclass(frozen=True)
class ArrLen(Node):
    arr: Node


@dataclass(frozen=True)
class ArrGet(Node):
    arr: Node
    idx: Node


@dataclass(frozen=True)
class SeqExpr(Node):
    """Evaluate `first` for effect, then yield `rest`."""

    first: Node
    rest: Node


@dataclass(frozen=True)
class DeclVar(Node):
    ref: VarRef
    init: Node


@dataclass(frozen=True)
class LetBind(Node):
    name: str
    typ: SemType
    rhs: Node


@dataclass(frozen=True)
class Assign(Node):
    ref: VarRef
    value: Node


@dataclass(frozen=True)
class ArrSet(Node):
    arr: Node
    idx: Node
    value: Node


@dataclass(frozen=True)
class If(Node):
    cond: Node
    then: Node
    orelse: Optional[Node]


@dataclass(frozen=True)
class While(Node):
    cond: Node
    body: Node


@dataclass(frozen=True)
class For(Node):
    var: str
    lo: Node
    hi: Node  # atomic (pre-bound at construction)
    body: Node
    # An inclusive bound that is syntactically X - 1 is canonicalized to an
    # exclusive bound X at construction: same arithmetic, but the trip count
    # cannot overflow, which C compilers need for their loop transforms.
    excl: bool = False


@dataclass(frozen=True)
class Block(Node):
    stmts: tuple


@dataclass(frozen=True)
class Nop(Node):
    pass


_ATOMS = (Lit, ParamUse, LetUse, ReadVar)


def is_atom(node: Node) -> bool:
    return isinstance(node, _ATOMS)


def is_pure(node: Node) -> bool:
    """True when evaluating the node cannot mutate any store cell.

    Reads of mutable cells count as pure: discarding one drops no effect.
    """
    if isinstance(node, (Lit, ParamUse, LetUse, ReadVar)):
        return True
    if isinstance(node, Arith):
        return is_pure(node.a) and is_pure(node.b)
    if isinstance(node, Cmp):
        return is_pure(node.a) and is_pure(node.b)
    if isinstance(node, (And, Or)):
        return is_pure(node.a) and is_pure(node.b)
    if isinstance(node, Not):
        return is_pure(node.a)
    if isinstance(node, Cond):
        return is_pure(node.c) and is_pure(node.t) and is_pure(node.e)
    if isinstance(node, ArrLen):
        return is_pure(node.arr)
    if isinstance(node, ArrGet):
        return is_pure(node.arr) and is_pure(node.idx)
    return False  # statements, SeqExpr


# ---------------------------------------------------------------------------
# Code values and emit units


@dataclass(frozen=True, eq=False)
class CodeVal:
    """Opaque handle for a target-code fragment, tagged with its type.

    `node` is owned by the backend that produced the value; `known` is used
    only by the partial-evaluation wrapper.
    """

    typ: SemType
    node: object
    owner: object
    known: object = None

    def __repr__(self) -> str:
        return f"<code {self.typ}>"


@dataclass(frozen=True, eq=False)
class EmitUnit:
    """A complete generated function, ready for rendering or evaluation."""

    name: str
    params: tuple  # of (name, SemType)
    body: CodeVal
    ret: SemType


class _Scope:
    __slots__ = ("items",)

    def __init__(self) -> None:
        self.items: list[Node] = []


@dataclass
class _SlotRequest:
    """A letb redirected into mutable state (see Backend._letb_redirect)."""

    ref: VarRef
    init: "CodeVal"


class Backend:
    """Concrete code constructor: type checking, fresh names, scopes.

    One instance builds one `EmitUnit` at a time; the fresh-name counter is
    reset per unit so emission is deterministic across runs.  Instances are
    cheap -- use a fresh one per pipeline.
    """

    def __init__(self) -> None:
        self._counter = 0
        self._scopes: list[_Scope] = []
        self._in_unit = False
        # When set (by the stream engine while constructing an inner stream
        # for a reified flat_map), letb allocates a state cell instead of a
        # const binding, so the shared value survives across machine branches.
        self._letb_redirect: list | None = None

    # -- plumbing ----------------------------------------------------------

    def _fresh(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}_{self._counter}"

    def _wrap(self, node: Node, typ: SemType) -> CodeVal:
        return CodeVal(typ, node, self)

    def _node(self, cv: CodeVal, what: str = "operand") -> Node:
        if not isinstance(cv, CodeVal):
            raise TypeMismatchError(f"{what} is not a code value: {cv!r}")
        if cv.owner is not self:
            raise BackendMixError(f"{what} was built by a different backend")
        return cv.node

    def _expr(self, cv: CodeVal, what: str = "operand") -> Node:
        node = self._node(cv, what)
        if cv.typ == UNIT:
            raise TypeMismatchError(f"{what} must be an expression, got a statement")
        return node

    def _stmt_node(self, cv: CodeVal, what: str = "statement") -> Node:
        node = self._node(cv, what)
        if cv.typ != UNIT:
            raise TypeMismatchError(f"{what} must be statement-form (unit type)")
        return node

    # -- scopes: where letb bindings and engine statements accumulate -------

    def open_scope(self) -> _Scope:
        sc = _Scope()
        self._scopes.append(sc)
        return sc

    def close_scope(self, sc: _Scope) -> CodeVal:
        if not self._scopes or self._scopes[-1] is not sc:
            raise CodegenError("scope closed out of order")
        self._scopes.pop()
        return self._wrap(Block(tuple(sc.items)), UNIT)

    def scoped(self, build: Callable[[], None]) -> CodeVal:
        """Run `build`, collecting its statements and bindings into one block."""
        depth = len(self._scopes)
        sc = self.open_scope()
        try:
            build()
        except BaseException:
            del self._scopes[depth:]
            raise
        return self.close_scope(sc)

    def stmt(self, cv: CodeVal) -> None:
        """Append a statement to the innermost open scope."""
        node = self._stmt_node(cv)
        if not self._scopes:
            raise CodegenError("no open scope (statements belong inside make_fun)")
        self._scopes[-1].items.append(node)

    def nop(self) -> CodeVal:
        return self._wrap(Nop(), UNIT)

    def block(self, stmts: Sequence[CodeVal]) -> CodeVal:
        return self._wrap(Block(tuple(self._stmt_node(s) for s in stmts)), UNIT)

    # -- expressions ---------------------------------------------------------

    def lit(self, v) -> CodeVal:
        if isinstance(v, bool):
            return self._wrap(Lit(v, BOOL), BOOL)
        if isinstance(v, int):
            return self._wrap(Lit(v, INT), INT)
        if isinstance(v, float):
            return self._wrap(Lit(v, FLOAT), FLOAT)
        raise TypeMismatchError(f"no literal embedding for {type(v).__name__}")

    def arith(self, op: str, a: CodeVal, b: CodeVal) -> CodeVal:
        if op not in ARITH_OPS:
            raise CodegenError(f"unknown arithmetic op {op!r}")
        na, nb = self._expr(a), self._expr(b)
        if a.typ != b.typ or a.typ not in NUMERIC:
            raise TypeMismatchError(f"arith {op} needs matching numeric operands, got {a.typ}/{b.typ}")
        if op == "mod" and a.typ != INT:
            raise TypeMismatchError("mod is defined on integers only")
        return self._wrap(Arith(op, na, nb), a.typ)

    def cmp(self, op: str, a: CodeVal, b: CodeVal) -> CodeVal:
        if op not in CMP_OPS:
            raise CodegenError(f"unknown comparison op {op!r}")
        na, nb = self._expr(a), self._expr(b)
        if a.typ != b.typ or a.typ not in NUMERIC:
            raise TypeMismatchError(f"cmp {op} needs matching numeric operands, got {a.typ}/{b.typ}")
        return self._wrap(Cmp(op, na, nb), BOOL)

    def and_(self, a: CodeVal, b: CodeVal) -> CodeVal:
        na, nb = self._expr(a), self._expr(b)
        if a.typ != BOOL or b.typ != BOOL:
            raise TypeMismatchError("logical operands must be boolean")
        return self._wrap(And(na, nb), BOOL)

    def or_(self, a: CodeVal, b: CodeVal) -> CodeVal:
        na, nb = self._expr(a), self._expr(b)
        if a.typ != BOOL or b.typ != BOOL:
            raise TypeMismatchError("logical operands must be boolean")
        return self._wrap(Or(na, nb), BOOL)

    def not_(self, a: CodeVal) -> CodeVal:
        na = self._expr(a)
        if a.typ != BOOL:
            raise TypeMismatchError("logical operand must be boolean")
        return self._wrap(Not(na), BOOL)

    def boolop(self, op: str, *args: CodeVal) -> CodeVal:
        if op == "and":
            (a, b) = args
            return self.and_(a, b)
        if op == "or":
            (a, b) = args
            return self.or_(a, b)
        if op == "not":
            (a,) = args
            return self.not_(a)
        raise CodegenError(f"unknown boolean op {op!r}")

    def cond_expr(self, c: CodeVal, t: CodeVal, e: CodeVal) -> CodeVal:
        nc, nt, ne = self._expr(c), self._expr(t), self._expr(e)
        if c.typ != BOOL:
            raise TypeMismatchError("condition must be boolean")
        if t.typ != e.typ or isinstance(t.typ, ArrT):
            raise TypeMismatchError(f"conditional arms must agree on a scalar type, got {t.typ}/{e.typ}")
        return self._wrap(Cond(nc, nt, ne), t.typ)

    # -- mutable cells -------------------------------------------------------

    def fresh_ref(self, typ: SemType, hint: str = "v") -> VarRef:
        """Allocate a cell handle without emitting its declaration yet.

        The stream engine allocates state this way and materializes the
        declarations at drive time; `new_var` is the one-step form.
        """
        if typ == UNIT or isinstance(typ, ArrT):
            raise TypeMismatchError(f"mutable cells hold scalars only, got {typ}")
        return VarRef(self._fresh(hint), typ)

    def var_decl(self, ref: VarRef, init: CodeVal) -> CodeVal:
        node = self._expr(init, "initializer")
        if init.typ != ref.typ:
            raise TypeMismatchError(f"initializer type {init.typ} does not match cell type {ref.typ}")
        return self._wrap(DeclVar(ref, node), UNIT)

    def new_var(self, init: CodeVal, hint: str = "v") -> tuple[VarRef, CodeVal]:
        ref = self.fresh_ref(init.typ, hint)
        return ref, self.var_decl(ref, init)

    def read(self, ref: VarRef) -> CodeVal:
        if not isinstance(ref, VarRef):
            raise TypeMismatchError("read expects a VarRef")
        return self._wrap(ReadVar(ref), ref.typ)

    def write(self, ref: VarRef, x: CodeVal) -> CodeVal:
        node = self._expr(x, "assigned value")
        if x.typ != ref.typ:
            raise TypeMismatchError(f"cannot write {x.typ} into cell of type {ref.typ}")
        return self._wrap(Assign(ref, node), UNIT)

    # -- control -------------------------------------------------------------

    def if_stmt(self, c: CodeVal, then: CodeVal, orelse: Optional[CodeVal] = None) -> CodeVal:
        nc = self._expr(c, "condition")
        if c.typ != BOOL:
            raise TypeMismatchError("condition must be boolean")
        nt = self._stmt_node(then, "then branch")
        ne = self._stmt_node(orelse, "else branch") if orelse is not None else None
        return self._wrap(If(nc, nt, ne), UNIT)

    def while_(self, guard: CodeVal, body: CodeVal) -> CodeVal:
        ng = self._expr(guard, "loop guard")
        if guard.typ != BOOL:
            raise TypeMismatchError("loop guard must be boolean")
        nb = self._stmt_node(body, "loop body")
        return self._wrap(While(ng, nb), UNIT)

    def for_(self, lo: CodeVal, hi_incl: CodeVal, body: Callable[[CodeVal], CodeVal]) -> CodeVal:
        nlo = self._expr(lo, "loop start")
        if lo.typ != INT or hi_incl.typ != INT:
            raise TypeMismatchError("counted-loop bounds must be integers")
        nhi = self._expr(hi_incl, "loop bound")
        excl = False
        if isinstance(nhi, Arith) and nhi.op == "sub" and isinstance(nhi.b, Lit) and nhi.b.value == 1:
            excl = True
            hi_incl = self._wrap(nhi.a, INT)
        # The bound is evaluated once: pre-bind unless already stable.
        stable = is_atom(hi_incl.node) or (
            isinstance(hi_incl.node, ArrLen) and isinstance(hi_incl.node.arr, ParamUse)
        )
        hi = hi_incl if stable else self.letb(hi_incl)
        if not is_atom(nlo):
            lo = self.letb(lo)
            nlo = lo.node
        name = self._fresh("i")
        idx = self._wrap(LetUse(name, INT), INT)
        nb = self._stmt_node(body(idx), "loop body")
        return self._wrap(For(name, nlo, hi.node, nb, excl), UNIT)

    # -- arrays ----------------------------------------------------------------

    def arr_len(self, a: CodeVal) -> CodeVal:
        na = self._expr(a, "array")
        if not isinstance(a.typ, ArrT):
            raise TypeMismatchError(f"arr_len needs an array, got {a.typ}")
        return self._wrap(ArrLen(na), INT)

    def arr_get(self, a: CodeVal, i: CodeVal) -> CodeVal:
        na, ni = self._expr(a, "array"), self._expr(i, "index")
        if not isinstance(a.typ, ArrT):
            raise TypeMismatchError(f"arr_get needs an array, got {a.typ}")
        if i.typ != INT:
            raise TypeMismatchError("index must be an integer")
        return self._wrap(ArrGet(na, ni), a.typ.elem)

    def arr_set(self, a: CodeVal, i: CodeVal, x: CodeVal) -> CodeVal:
        na, ni, nx = self._expr(a, "array"), self._expr(i, "index"), self._expr(x, "element")
        if not isinstance(a.typ, ArrT) or i.typ != INT:
            raise TypeMismatchError("arr_set needs an array and an integer index")
        if x.typ != a.typ.elem:
            raise TypeMismatchError(f"cannot store {x.typ} into array of {a.typ.elem}")
        return self._wrap(ArrSet(na, ni, nx), UNIT)

    # -- sequencing and sharing --------------------------------------------------

    def seq(self, a: CodeVal, b: CodeVal) -> CodeVal:
        na = self._stmt_node(a, "sequenced statement")
        nb = self._node(b, "sequence result")
        return self._wrap(SeqExpr(na, nb), b.typ)

    def letb(self, x: CodeVal, hint: str = "t") -> CodeVal:
        """Bind an intermediate once; further uses re-read the binding.

        The binding statement is appended to the innermost open scope at the
        point of the call, which fixes its evaluation order.
        """
        node = self._expr(x, "bound value")
        if isinstance(node, (Lit, ParamUse, LetUse)):
            return x  # already shared and immutable
        if self._letb_redirect is not None:
            ref = self.fresh_ref(x.typ, "v")
            self._letb_redirect.append(_SlotRequest(ref, x))
            return self._wrap(ReadVar(ref), x.typ)
        if not self._scopes:
            raise CodegenError("letb needs an open scope (call inside make_fun)")
        name = self._fresh(hint)
        self._scopes[-1].items.append(LetBind(name, x.typ, node))
        return self._wrap(LetUse(name, x.typ), x.typ)

    # -- units --------------------------------------------------------------------

    def make_fun(self, name: str, params: Sequence[tuple[str, SemType]], body_builder) -> EmitUnit:
        if self._in_unit:
            raise CodegenError("make_fun does not nest: the target language has no calls")
        seen = set()
        for pname, ptyp in params:
            if pname in seen:
                raise CodegenError(f"duplicate parameter name {pname!r}")
            seen.add(pname)
            if ptyp == UNIT:
                raise TypeMismatchError("parameters cannot have unit type")
        self._counter = 0  # names are per-unit, for deterministic emission
        self._in_unit = True
        depth = len(self._scopes)
        sc = self.open_scope()
        try:
            args = [self._wrap(ParamUse(n, t), t) for n, t in params]
            body = body_builder(*args)
            node = self._node(body, "unit body")
        finally:
            self._in_unit = False
            del self._scopes[depth:]
        for item in reversed(sc.items):
            node = SeqExpr(item, node)
        node = prune_dead_lets(node)
        body = CodeVal(body.typ, node, self)
        unit = EmitUnit(name, tuple((n, t) for n, t in params), body, body.typ)
        validate_unit(unit)
        return unit


# ---------------------------------------------------------------------------
# Dead-binding elimination: a const binding or state cell nobody reads would
# only draw an unused-variable diagnostic from C; drop it before sealing.


def _scan_bindings(node: Node, reads: dict[str, int], defs: dict[str, list[Node]]) -> None:
    if isinstance(node, LetUse):
        reads[node.name] = reads.get(node.name, 0) + 1
        return
    if isinstance(node, ReadVar):
        reads[node.ref.name] = reads.get(node.ref.name, 0) + 1
        return
    if isinstance(node, LetBind):
        defs.setdefault(node.name, []).append(node.rhs)
        _scan_bindings(node.rhs, reads, defs)
        return
    if isinstance(node, DeclVar):
        defs.setdefault(node.ref.name, []).append(node.init)
        _scan_bindings(node.init, reads, defs)
        return
    if isinstance(node, Assign):
        defs.setdefault(node.ref.name, []).append(node.value)
        _scan_bindings(node.value, reads, defs)
        return
    for field in getattr(node, "__dataclass_fields__", ()):
        v = getattr(node, field)
        if isinstance(v, Node):
            _scan_bindings(v, reads, defs)
        elif isinstance(v, tuple):
            for x in v:
                if isinstance(x, Node):
                    _scan_bindings(x, reads, defs)


def _drop_dead(node: Node, dead: set) -> Node:
    if isinstance(node, LetBind) and node.name in dead:
        return Nop()
    if isinstance(node, (DeclVar, Assign)) and node.ref.name in dead:
        return Nop()
    if isinstance(node, Block):
        stmts = tuple(
            s2 for s2 in (_drop_dead(s, dead) for s in node.stmts) if not isinstance(s2, Nop)
        )
        return Block(stmts)
    if isinstance(node, SeqExpr):
        first = _drop_dead(node.first, dead)
        rest = _drop_dead(node.rest, dead)
        if isinstance(first, Nop):
            return rest
        return SeqExpr(first, rest)
    if isinstance(node, If):
        orelse = _drop_dead(node.orelse, dead) if node.orelse is not None else None
        return If(node.cond, _drop_dead(node.then, dead), orelse)
    if isinstance(node, While):
        return While(node.cond, _drop_dead(node.body, dead))
    if isinstance(node, For):
        return For(node.var, node.lo, node.hi, _drop_dead(node.body, dead), node.excl)
    return node


def prune_dead_lets(node: Node) -> Node:
    """Remove never-read bindings and cells whose writes are all pure."""
    while True:
        reads: dict[str, int] = {}
        defs: dict[str, list[Node]] = {}
        _scan_bindings(node, reads, defs)
        dead = {
            name
            for name, rhss in defs.items()
            if not reads.get(name) and all(is_pure(rhs) for rhs in rhss)
        }
        if not dead:
            return node
        node = _drop_dead(node, dead)


# ---------------------------------------------------------------------------
# Whole-tree revalidation: recompute every type, check freshness and
# declaration-before-use in emission order.


def _typeof(node: Node, env: dict[str, tuple[str, SemType]]) -> SemType:
    if isinstance(node, Lit):
        return node.typ
    if isinstance(node, ParamUse):
        kind, typ = _lookup(env, node.name, "parameter")
        if kind != "param" or typ != node.typ:
            raise UnboundVarError(f"parameter {node.name!r} used inconsistently")
        return typ
    if isinstance(node, LetUse):
        kind, typ = _lookup(env, node.name, "binding")
        if kind != "let" or typ != node.typ:
            raise UnboundVarError(f"binding {node.name!r} used inconsistently")
        return typ
    if isinstance(node, ReadVar):
        kind, typ = _lookup(env, node.ref.name, "variable")
        if kind != "var" or typ != node.ref.typ:
            raise UnboundVarError(f"variable {node.ref.name!r} used inconsistently")
        return typ
    if isinstance(node, Arith):
        ta, tb = _typeof(node.a, env), _typeof(node.b, env)
        if ta != tb or ta not in NUMERIC or (node.op == "mod" and ta != INT):
            raise TypeMismatchError(f"ill-typed arith {node.op}")
        return ta
    if isinstance(node, Cmp):
        ta, tb = _typeof(node.a, env), _typeof(node.b, env)
        if ta != tb or ta not in NUMERIC:
            raise TypeMismatchError(f"ill-typed comparison {node.op}")
        return BOOL
    if isinstance(node, (And, Or)):
        if _typeof(node.a, env) != BOOL or _typeof(node.b, env) != BOOL:
            raise TypeMismatchError("ill-typed logical op")
        return BOOL
    if isinstance(node, Not):
        if _typeof(node.a, env) != BOOL:
            raise TypeMismatchError("ill-typed negation")
        return BOOL
    if isinstance(node, Cond):
        if _typeof(node.c, env) != BOOL:
            raise TypeMismatchError("conditional needs a boolean")
        tt, te = _typeof(node.t, env), _typeof(node.e, env)
        if tt != te:
            raise TypeMismatchError("conditional arms disagree")
        return tt
    if isinstance(node, ArrLen):
        if not isinstance(_typeof(node.arr, env), ArrT):
            raise TypeMismatchError("arr_len of non-array")
        return INT
    if isinstance(node, ArrGet):
        ta = _typeof(node.arr, env)
        if not isinstance(ta, ArrT) or _typeof(node.idx, env) != INT:
            raise TypeMismatchError("ill-typed array access")
        return ta.elem
    if isinstance(node, SeqExpr):
        _check_stmt(node.first, env)
        return _typeof(node.rest, env)
    raise TypeMismatchError(f"statement used in expression position: {type(node).__name__}")


def _lookup(env, name, what):
    try:
        return env[name]
    except KeyError:
        raise UnboundVarError(f"{what} {name!r} is not in scope") from None


def _declare(env, name, kind, typ):
    if name in env:
        raise CodegenError(f"identifier {name!r} declared twice (freshness violation)")
    env[name] = (kind, typ)


def _check_stmt(node: Node, env: dict) -> None:
    if isinstance(node, Nop):
        return
    if isinstance(node, DeclVar):
        if _typeof(node.init, env) != node.ref.typ:
            raise TypeMismatchError(f"bad initializer for {node.ref.name}")
        _declare(env, node.ref.name, "var", node.ref.typ)
        return
    if isinstance(node, LetBind):
        if _typeof(node.rhs, env) != node.typ:
            raise TypeMismatchError(f"bad binding for {node.name}")
        _declare(env, node.name, "let", node.typ)
        return
    if isinstance(node, Assign):
        kind, typ = _lookup(env, node.ref.name, "variable")
        if kind != "var":
            raise TypeMismatchError(f"{node.ref.name!r} is not assignable")
        if _typeof(node.value, env) != typ:
            raise TypeMismatchError(f"bad assignment to {node.ref.name}")
        return
    if isinstance(node, ArrSet):
        ta = _typeof(node.arr, env)
        if not isinstance(ta, ArrT) or _typeof(node.idx, env) != INT or _typeof(node.value, env) != ta.elem:
            raise TypeMismatchError("ill-typed array store")
        return
    if isinstance(node, If):
        if _typeof(node.cond, env) != BOOL:
            raise TypeMismatchError("if condition must be boolean")
        _check_stmt(node.then, dict(env))
        if node.orelse is not None:
            _check_stmt(node.orelse, dict(env))
        return
    if isinstance(node, While):
        if _typeof(node.cond, env) != BOOL:
            raise TypeMismatchError("loop guard must be boolean")
        _check_stmt(node.body, dict(env))
        return
    if isinstance(node, For):
        if _typeof(node.lo, env) != INT or _typeof(node.hi, env) != INT:
            raise TypeMismatchError("counted-loop bounds must be integers")
        inner = dict(env)
        _declare(inner, node.var, "let", INT)
        _check_stmt(node.body, inner)
        return
    if isinstance(node, Block):
        for s in node.stmts:
            _check_stmt(s, env)  # block members share the enclosing scope
        return
    if isinstance(node, SeqExpr):
        _check_stmt(node.first, env)
        _check_stmt(node.rest, env)
        return
    raise TypeMismatchError(f"expression used in statement position: {type(node).__name__}")


def _collect_idents(node: Node, out: list[str]) -> None:
    if isinstance(node, DeclVar):
        out.append(node.ref.name)
        _collect_idents(node.init, out)
        return
    if isinstance(node, LetBind):
        out.append(node.name)
        _collect_idents(node.rhs, out)
        return
    if isinstance(node, For):
        out.append(node.var)
    for field in getattr(node, "__dataclass_fields__", ()):
        v = getattr(node, field)
        if isinstance(v, Node):
            _collect_idents(v, out)
        elif isinstance(v, tuple):
            for x in v:
                if isinstance(x, Node):
                    _collect_idents(x, out)


def validate_unit(unit: EmitUnit) -> None:
    """Full-tree revalidation: types, freshness, declaration-before-use."""
    idents: list[str] = []
    _collect_idents(unit.body.node, idents)
    dupes = {n for n in idents if idents.count(n) > 1}
    if dupes:
        raise CodegenError(f"identifiers introduced twice in one unit: {sorted(dupes)}")
    env: dict[str, tuple[str, SemType]] = {n: ("param", t) for n, t in unit.params}
    node = unit.body.node
    if unit.ret == UNIT:
        _check_stmt(node, env)
    else:
        if _typeof(node, env) != unit.ret:
            raise TypeMismatchError("unit body type does not match its return type")
