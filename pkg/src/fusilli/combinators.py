"""Declarative scalar-stream combinators over the fusion engine.

This is the surface most pipelines are written in: single-value streams with
map/filter/take/drop/zip_with/flat_map and folding sinks.  Action arguments
are generation-time functions from code values to code values; they run once,
while the pipeline is being compiled, and only their output lands in the
generated loop.

Streams are single-use: every combinator consumes its input and returns a
fresh stream.  Multi-value bundles stay available through the raw engine
(`fusilli.streams`) for advanced uses.
"""

from __future__ import annotations

from typing import Callable

from .backend import INT, ArrT, CodegenError, CodeVal
from . import streams
from .streams import Slot, StreamRep


class Stream:
    """A single-value stream; thin arity-1 wrapper over the engine."""

    __slots__ = ("rep",)

    def __init__(self, rep: StreamRep) -> None:
        self.rep = rep

    @property
    def backend(self):
        return self.rep.backend

    # -- transformers -------------------------------------------------------

    def map(self, f: Callable[[CodeVal], CodeVal]) -> "Stream":
        b = self.backend
        return Stream(streams.map_raw(lambda bundle: [b.letb(f(bundle[0]))], self.rep))

    def filter(self, p: Callable[[CodeVal], CodeVal]) -> "Stream":
        return Stream(streams.filter_raw(lambda bundle: p(bundle[0]), self.rep))

    def take(self, n: CodeVal) -> "Stream":
        return Stream(streams.take_raw(n, self.rep))

    def take_while(self, p: Callable[[CodeVal], CodeVal]) -> "Stream":
        return Stream(streams.take_while_raw(lambda bundle: p(bundle[0]), self.rep))

    def drop(self, n: CodeVal) -> "Stream":
        return Stream(streams.drop_raw(n, self.rep))

    def drop_while(self, p: Callable[[CodeVal], CodeVal]) -> "Stream":
        return Stream(streams.drop_while_raw(lambda bundle: p(bundle[0]), self.rep))

    def flat_map(self, g: Callable[[CodeVal], "Stream"]) -> "Stream":
        def make(bundle):
            inner = g(bundle[0])
            if not isinstance(inner, Stream):
                raise CodegenError("flat_map action must return a Stream")
            return inner.rep

        return Stream(streams.flat_map_raw(make, self.rep))

    def map_accum(self, step, init: CodeVal) -> "Stream":
        """Stateful map: step(state, elem) -> (new_state, out)."""

        def raw_step(state, bundle):
            new_state, out = step(state, bundle[0])
            return new_state, [out]

        return Stream(streams.map_accum_raw(raw_step, init, self.rep))

    # -- sinks ----------------------------------------------------------------

    def fold(self, step: Callable[[CodeVal, CodeVal], CodeVal], init: CodeVal) -> CodeVal:
        """Drain into an accumulator; yields the final value as an expression
        (the loop statements land in the enclosing scope)."""
        b = self.backend
        acc, decl = b.new_var(init)
        b.stmt(decl)
        loop = streams.drive(self.rep, lambda bundle: b.stmt(b.write(acc, step(b.read(acc), bundle[0]))))
        b.stmt(loop)
        return b.read(acc)

    def sum(self) -> CodeVal:
        b = self.backend
        return self.fold(lambda acc, e: b.arith("add", acc, e), b.lit(0))

    def iter(self, consume: Callable[[CodeVal], CodeVal]) -> CodeVal:
        """Drain for effect: `consume` builds a statement per element."""
        b = self.backend

        def sink(bundle):
            b.stmt(consume(bundle[0]))

        return streams.drive(self.rep, sink)


def iota(b, start: CodeVal) -> Stream:
    """Infinite stream start, start+1, ..."""
    if start.typ != INT:
        raise CodegenError("iota starts at an integer")
    cell = b.fresh_ref(INT, "v")

    def step(emit):
        t = b.letb(b.read(cell))
        b.stmt(b.write(cell, b.arith("add", b.read(cell), b.lit(1))))
        emit([t])

    rep = streams.src_guarded(b, [Slot(cell, start)], lambda: b.lit(True), step)
    return Stream(rep)


def of_arr(b, a: CodeVal) -> Stream:
    """Finite stream over a whole array-typed parameter."""
    if not isinstance(a.typ, ArrT):
        raise CodegenError("of_arr needs an array-typed parameter")
    bound = b.arith("sub", b.arr_len(a), b.lit(1))

    def body(i, emit):
        emit([b.letb(b.arr_get(a, i), hint="el")])

    return Stream(streams.src_counted(b, bound, body))


def range_(b, lo: CodeVal, hi_excl: CodeVal) -> Stream:
    """Integers lo, lo+1, ..., hi_excl-1; empty when hi_excl <= lo."""
    if lo.typ != INT or hi_excl.typ != INT:
        raise CodegenError("range bounds are integers")
    from .backend import Lit
    from .streams import _ast

    lo_node = _ast(lo)
    from_zero = isinstance(lo_node, Lit) and lo_node.value == 0
    if from_zero:
        bound = b.arith("sub", hi_excl, b.lit(1))

        def body(i, emit):
            emit([i])

    else:
        bound = b.arith("sub", b.arith("sub", hi_excl, lo), b.lit(1))

        def body(i, emit):
            emit([b.letb(b.arith("add", lo, i))])

    return Stream(streams.src_counted(b, bound, body))


def zip_with(f: Callable[[CodeVal, CodeVal], CodeVal], s1: Stream, s2: Stream) -> Stream:
    """Pairwise combination without ever materializing a pair."""
    b = s1.backend
    zipped = streams.zip_raw(s1.rep, s2.rep)
    return Stream(streams.map_raw(lambda bundle: [b.letb(f(bundle[0], bundle[1]))], zipped))
