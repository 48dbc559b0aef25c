"""Online partial evaluation as a backend transformer.

`wrap(backend)` yields a backend with the same construction interface whose
operations fold constants and apply algebraic simplifications while the code
is being built.  Static knowledge propagates only through pure operations --
never through a mutable-cell read -- and an operand is discarded (x * 0,
false && g, dead branches) only when it is expression-pure.

The wrapper produces units of the underlying backend, so rendering and
evaluation are unchanged.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

from .backend import (
    ARITH_OPS,
    BOOL,
    INT,
    Backend,
    BackendMixError,
    CodegenError,
    CodeVal,
    EmitUnit,
    Nop,
    Not,
    SemType,
    TypeMismatchError,
    VarRef,
    is_pure,
)
from .interp import fold_arith, fold_cmp


class PEval:
    """Partial-evaluation wrapper around any backend instance."""

    def __init__(self, inner: Backend) -> None:
        self._b = inner
        self._letb_redirect: list | None = None  # see Backend._letb_redirect

    # -- wrapping ------------------------------------------------------------

    def _out(self, inner_cv: CodeVal, known=None) -> CodeVal:
        return CodeVal(inner_cv.typ, inner_cv, self, known=known)

    def _in(self, cv: CodeVal, what: str = "operand") -> CodeVal:
        if not isinstance(cv, CodeVal):
            raise TypeMismatchError(f"{what} is not a code value: {cv!r}")
        if cv.owner is not self:
            raise BackendMixError(f"{what} was built by a different backend")
        return cv.node

    def _is_nop(self, cv: CodeVal) -> bool:
        return isinstance(self._in(cv).node, Nop)

    # -- expressions -----------------------------------------------------------

    def lit(self, v) -> CodeVal:
        inner = self._b.lit(v)
        return self._out(inner, known=inner.node.value)

    def arith(self, op: str, a: CodeVal, b: CodeVal) -> CodeVal:
        ia, ib = self._in(a), self._in(b)
        if a.known is not None and b.known is not None and op in ARITH_OPS and a.typ == b.typ:
            folded = fold_arith(op, a.typ, a.known, b.known)
            if folded is not None:
                return self.lit(folded)
        if a.typ == INT:  # identities are not bit-exact for doubles (-0.0, nan)
            ka = a.known if type(a.known) is int else None
            kb = b.known if type(b.known) is int else None
            if op == "add":
                if ka == 0:
                    return b
                if kb == 0:
                    return a
            elif op == "sub":
                if kb == 0:
                    return a
            elif op == "mul":
                if ka == 1:
                    return b
                if kb == 1:
                    return a
                # discarding the other operand is sound only when it is pure
                if ka == 0 and is_pure(ib.node):
                    return self.lit(0)
                if kb == 0 and is_pure(ia.node):
                    return self.lit(0)
        return self._out(self._b.arith(op, ia, ib))

    def cmp(self, op: str, a: CodeVal, b: CodeVal) -> CodeVal:
        ia, ib = self._in(a), self._in(b)
        if a.known is not None and b.known is not None:
            return self.lit(fold_cmp(op, a.known, b.known))
        return self._out(self._b.cmp(op, ia, ib))

    def and_(self, a: CodeVal, b: CodeVal) -> CodeVal:
        ia, ib = self._in(a), self._in(b)
        if a.known is True:
            return b
        if a.known is False:
            return self.lit(False)
        if b.known is True:
            return a
        if b.known is False and is_pure(ia.node):
            return self.lit(False)
        return self._out(self._b.and_(ia, ib))

    def or_(self, a: CodeVal, b: CodeVal) -> CodeVal:
        ia, ib = self._in(a), self._in(b)
        if a.known is False:
            return b
        if a.known is True:
            return self.lit(True)
        if b.known is False:
            return a
        if b.known is True and is_pure(ia.node):
            return self.lit(True)
        return self._out(self._b.or_(ia, ib))

    def not_(self, a: CodeVal) -> CodeVal:
        ia = self._in(a)
        if a.known is not None:
            return self.lit(not a.known)
        if isinstance(ia.node, Not):
            return self._out(CodeVal(BOOL, ia.node.a, self._b))
        return self._out(self._b.not_(ia))

    def boolop(self, op: str, *args: CodeVal) -> CodeVal:
        if op == "and":
            return self.and_(*args)
        if op == "or":
            return self.or_(*args)
        if op == "not":
            return self.not_(*args)
        raise CodegenError(f"unknown boolean op {op!r}")

    def cond_expr(self, c: CodeVal, t: CodeVal, e: CodeVal) -> CodeVal:
        ic, it, ie = self._in(c), self._in(t), self._in(e)
        if c.known is True:
            return t
        if c.known is False:
            return e
        return self._out(self._b.cond_expr(ic, it, ie))

    # -- cells, arrays, sequencing: no static knowledge flows through ----------

    def fresh_ref(self, typ: SemType, hint: str = "v") -> VarRef:
        return self._b.fresh_ref(typ, hint)

    def var_decl(self, ref: VarRef, init: CodeVal) -> CodeVal:
        return self._out(self._b.var_decl(ref, self._in(init)))

    def new_var(self, init: CodeVal, hint: str = "v"):
        ref = self.fresh_ref(init.typ, hint)
        return ref, self.var_decl(ref, init)

    def read(self, ref: VarRef) -> CodeVal:
        return self._out(self._b.read(ref))

    def write(self, ref: VarRef, x: CodeVal) -> CodeVal:
        return self._out(self._b.write(ref, self._in(x)))

    def arr_len(self, a: CodeVal) -> CodeVal:
        return self._out(self._b.arr_len(self._in(a)))

    def arr_get(self, a: CodeVal, i: CodeVal) -> CodeVal:
        return self._out(self._b.arr_get(self._in(a), self._in(i)))

    def arr_set(self, a: CodeVal, i: CodeVal, x: CodeVal) -> CodeVal:
        return self._out(self._b.arr_set(self._in(a), self._in(i), self._in(x)))

    def seq(self, a: CodeVal, b: CodeVal) -> CodeVal:
        ia, ib = self._in(a), self._in(b)
        if isinstance(ia.node, Nop):
            return b
        return self._out(self._b.seq(ia, ib), known=b.known if is_pure(ia.node) else None)

    def letb(self, x: CodeVal, hint: str = "t") -> CodeVal:
        ix = self._in(x)
        if x.known is not None:
            return x
        if self._letb_redirect is not None:
            from .backend import _SlotRequest, is_atom

            if is_atom(ix.node):
                return x
            ref = self._b.fresh_ref(x.typ, "v")
            self._letb_redirect.append(_SlotRequest(ref, x))
            return self.read(ref)
        return self._out(self._b.letb(ix, hint))

    # -- control ------------------------------------------------------------------

    def if_stmt(self, c: CodeVal, then: CodeVal, orelse: Optional[CodeVal] = None) -> CodeVal:
        ic = self._in(c)
        it = self._in(then)
        ie = self._in(orelse) if orelse is not None else None
        if c.known is True:
            return then
        if c.known is False:
            return orelse if orelse is not None else self.nop()
        return self._out(self._b.if_stmt(ic, it, ie))

    def while_(self, guard: CodeVal, body: CodeVal) -> CodeVal:
        ig, ib = self._in(guard), self._in(body)
        if guard.known is False:
            return self.nop()
        return self._out(self._b.while_(ig, ib))

    def for_(self, lo: CodeVal, hi_incl: CodeVal, body: Callable[[CodeVal], CodeVal]) -> CodeVal:
        ilo, ihi = self._in(lo), self._in(hi_incl)
        if lo.known is not None and hi_incl.known is not None and hi_incl.known < lo.known:
            return self.nop()
        inner = self._b.for_(ilo, ihi, lambda i: self._in(body(self._out(i)), "loop body"))
        return self._out(inner)

    # -- plumbing --------------------------------------------------------------------

    def nop(self) -> CodeVal:
        return self._out(self._b.nop())

    def block(self, stmts: Sequence[CodeVal]) -> CodeVal:
        kept = [self._in(s) for s in stmts if not self._is_nop(s)]
        return self._out(self._b.block(kept))

    def open_scope(self):
        return self._b.open_scope()

    def close_scope(self, sc) -> CodeVal:
        return self._out(self._b.close_scope(sc))

    def scoped(self, build: Callable[[], None]) -> CodeVal:
        sc = self.open_scope()
        try:
            build()
        except BaseException:
            del self._b._scopes[self._b._scopes.index(sc) :]
            raise
        return self.close_scope(sc)

    def stmt(self, cv: CodeVal) -> None:
        inner = self._in(cv)
        if isinstance(inner.node, Nop):
            return
        self._b.stmt(inner)

    def make_fun(self, name: str, params, body_builder) -> EmitUnit:
        def inner_builder(*inner_args):
            wrapped = [self._out(a) for a in inner_args]
            return self._in(body_builder(*wrapped), "unit body")

        return self._b.make_fun(name, params, inner_builder)


def wrap(backend: Backend) -> PEval:
    """Wrap any backend in the online partial evaluator."""
    return PEval(backend)
