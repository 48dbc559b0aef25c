"""The fusion engine: symbolic streams normalized into single fused loops.

A stream here is a generation-time object: state-cell requests, a producer
(counted loop or guarded unfold), and a stack of transform stages that wrap
an emission continuation.  Driving a stream runs every stage symbolically --
all higher-order structure is evaluated away during generation -- so the
emitted code is first-order by construction: no calls, no closures, no
tuples.

Zipping is where naive fusion breaks down.  A linear stream (one element per
producer step) zips by nesting the two step functions in one loop.  A
non-linear side (filter, flat_map) is first reified into an explicit state
machine -- has-element/done flags, holder cells, and an `advance` statement
that pulls until one element is available -- and the other side drives it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .backend import BOOL, INT, CodegenError, CodeVal, Lit, VarRef, is_atom

Bundle = list  # of CodeVal; fixed arity per stream, generation-time only
Emit = Callable[[Bundle], None]


class StreamReuseError(CodegenError):
    """A stream was consumed twice; streams are single-use."""


@dataclass
class Slot:
    """Deferred state-cell declaration: materialized when the loop is built."""

    ref: VarRef
    init: CodeVal


@dataclass
class Counted:
    """Producer `for i = 0 .. bound`; the bound is evaluated once."""

    bound: CodeVal
    body: Callable[[CodeVal, Emit], None]


@dataclass
class Guarded:
    """Producer that re-checks `guard()` before every step."""

    guard: Callable[[], CodeVal]
    step: Callable[[Emit], None]


@dataclass
class LinearS:
    """Stage emitting exactly once per input element (map, accumulate, tap)."""

    build: Callable[[Bundle, Emit], None]


@dataclass
class FilterS:
    """Stage that may drop elements; destroys linearity."""

    build: Callable[[Bundle, Emit], None]


@dataclass
class FlatS:
    """Stage expanding each element into a fresh inner stream."""

    make: Callable[[Bundle], "StreamRep"]


@dataclass
class StreamRep:
    """Symbolic stream: state slots, producer, transform stack, linearity.

    `guards` are extra termination conditions (take counters, take-while
    flags), tagged with the length of the stage stack when they were added so
    that loops nested inside downstream flat_maps conjoin exactly the guards
    that apply to them.
    """

    backend: object
    slots: list = field(default_factory=list)
    producer: object = None
    stages: list = field(default_factory=list)
    linear: bool = True
    guards: list = field(default_factory=list)  # of (stage_pos, () -> CodeVal)
    consumed: bool = False

    def _owned(self) -> "StreamRep":
        if self.consumed:
            raise StreamReuseError("stream already consumed; streams are single-use")
        self.consumed = True
        return self


def src_counted(b, bound: CodeVal, body: Callable[[CodeVal, Emit], None]) -> StreamRep:
    """Linear stream over indices 0..bound (inclusive); empty when bound < 0."""
    if bound.typ != INT:
        raise CodegenError("counted-source bound must be an integer")
    return StreamRep(backend=b, producer=Counted(bound, body))


def src_guarded(b, slots: Sequence[Slot], guard: Callable[[], CodeVal], step) -> StreamRep:
    return StreamRep(backend=b, slots=list(slots), producer=Guarded(guard, step))


# ---------------------------------------------------------------------------
# Raw combinators


def map_raw(f: Callable[[Bundle], Bundle], s: StreamRep) -> StreamRep:
    s = s._owned()
    return StreamRep(
        s.backend,
        s.slots,
        s.producer,
        s.stages + [LinearS(lambda bundle, emit: emit(f(bundle)))],
        s.linear,
        s.guards,
    )


def tap_raw(eff: Callable[[Bundle], None], s: StreamRep) -> StreamRep:
    """Run side statements per element, pass the bundle through unchanged."""
    s = s._owned()

    def stage(bundle, emit):
        eff(bundle)
        emit(bundle)

    return StreamRep(s.backend, s.slots, s.producer, s.stages + [LinearS(stage)], s.linear, s.guards)


def filter_raw(p: Callable[[Bundle], CodeVal], s: StreamRep) -> StreamRep:
    s = s._owned()
    b = s.backend

    def stage(bundle, emit):
        b.stmt(b.if_stmt(p(bundle), b.scoped(lambda: emit(bundle))))

    return StreamRep(s.backend, s.slots, s.producer, s.stages + [FilterS(stage)], False, s.guards)


def flat_map_raw(make: Callable[[Bundle], StreamRep], s: StreamRep) -> StreamRep:
    s = s._owned()
    return StreamRep(s.backend, s.slots, s.producer, s.stages + [FlatS(make)], False, s.guards)


def take_raw(n: CodeVal, s: StreamRep) -> StreamRep:
    """Keep the first n elements: counter state, producer-guard conjunct,
    decrement at the innermost emission point."""
    b = s.backend
    if n.typ != INT:
        raise CodegenError("take needs an integer count")
    s = _ensure_guarded(s._owned())
    cnt = b.fresh_ref(INT, "v")

    def dec_then_emit(bundle, emit):
        b.stmt(b.write(cnt, b.arith("sub", b.read(cnt), b.lit(1))))
        emit(bundle)

    return StreamRep(
        s.backend,
        [Slot(cnt, n)] + s.slots,
        s.producer,
        s.stages + [LinearS(dec_then_emit)],
        s.linear,
        s.guards + [(len(s.stages), lambda: b.cmp("gt", b.read(cnt), b.lit(0)))],
    )


def take_while_raw(p: Callable[[Bundle], CodeVal], s: StreamRep) -> StreamRep:
    """Stop at the first failing element, via a stop-flag write; an all-pass
    prefix keeps one-emission-per-step, so linearity is preserved."""
    b = s.backend
    s = _ensure_guarded(s._owned())
    stop = b.fresh_ref(BOOL, "v")

    def stage(bundle, emit):
        b.stmt(
            b.if_stmt(
                p(bundle),
                b.scoped(lambda: emit(bundle)),
                b.scoped(lambda: b.stmt(b.write(stop, b.lit(True)))),
            )
        )

    return StreamRep(
        s.backend,
        s.slots + [Slot(stop, b.lit(False))],
        s.producer,
        s.stages + [LinearS(stage)],
        s.linear,
        s.guards + [(len(s.stages), lambda: b.not_(b.read(stop)))],
    )


def drop_raw(n: CodeVal, s: StreamRep) -> StreamRep:
    """Skip the first n elements (counter as filter)."""
    b = s.backend
    if n.typ != INT:
        raise CodegenError("drop needs an integer count")
    s = s._owned()
    cnt = b.fresh_ref(INT, "v")

    def stage(bundle, emit):
        b.stmt(
            b.if_stmt(
                b.cmp("gt", b.read(cnt), b.lit(0)),
                b.scoped(lambda: b.stmt(b.write(cnt, b.arith("sub", b.read(cnt), b.lit(1))))),
                b.scoped(lambda: emit(bundle)),
            )
        )

    return StreamRep(
        s.backend,
        s.slots + [Slot(cnt, n)],
        s.producer,
        s.stages + [FilterS(stage)],
        False,
        s.guards,
    )


def drop_while_raw(p: Callable[[Bundle], CodeVal], s: StreamRep) -> StreamRep:
    """Skip the longest all-true prefix; a latch, not a filter."""
    b = s.backend
    s = s._owned()
    passed = b.fresh_ref(BOOL, "v")

    def stage(bundle, emit):
        keep = b.or_(b.read(passed), b.not_(p(bundle)))

        def on_keep():
            b.stmt(b.write(passed, b.lit(True)))
            emit(bundle)

        b.stmt(b.if_stmt(keep, b.scoped(on_keep)))

    return StreamRep(
        s.backend,
        s.slots + [Slot(passed, b.lit(False))],
        s.producer,
        s.stages + [FilterS(stage)],
        False,
        s.guards,
    )


def map_accum_raw(step, init: CodeVal, s: StreamRep) -> StreamRep:
    """Stateful one-to-one transform: step(state, bundle) -> (new_state, out)."""
    b = s.backend
    s = s._owned()
    cell = b.fresh_ref(init.typ, "v")

    def stage(bundle, emit):
        new_state, out = step(b.read(cell), bundle)
        out = [b.letb(cv) for cv in out]
        b.stmt(b.write(cell, new_state))
        emit(out)

    return StreamRep(
        s.backend,
        s.slots + [Slot(cell, init)],
        s.producer,
        s.stages + [LinearS(stage)],
        s.linear,
        s.guards,
    )


# ---------------------------------------------------------------------------
# Internals


def _ast(cv: CodeVal):
    """Underlying IR node; sees through a partial-evaluation wrapper."""
    node = cv.node
    return node.node if isinstance(node, CodeVal) else node


def _is_true_lit(cv: CodeVal) -> bool:
    node = _ast(cv)
    return isinstance(node, Lit) and node.value is True


def _conj(b, exprs) -> CodeVal:
    """Conjunction that drops literal-true conjuncts, so no foldable redex
    survives into an emitted guard even without the partial evaluator."""
    kept = [cv for cv in exprs if not _is_true_lit(cv)]
    if not kept:
        return b.lit(True)
    out = kept[0]
    for cv in kept[1:]:
        out = b.and_(out, cv)
    return out


def _ensure_guarded(s: StreamRep) -> StreamRep:
    """Convert a counted producer to guarded form (index state, inclusive
    bound pre-evaluated once)."""
    if not isinstance(s.producer, Counted):
        return s
    b = s.backend
    idx = b.fresh_ref(INT, "v")
    s.slots = s.slots + [Slot(idx, b.lit(0))]
    bound = s.producer.bound
    if not is_atom(_ast(bound)):
        bound = b.letb(bound)
    body = s.producer.body

    def guard():
        return b.cmp("leq", b.read(idx), bound)

    def step(emit):
        i = b.letb(b.read(idx), hint="i")
        b.stmt(b.write(idx, b.arith("add", b.read(idx), b.lit(1))))
        body(i, emit)

    s.producer = Guarded(guard, step)
    return s


def _nonflat_chain(stages, emit: Emit) -> Emit:
    """Compose map/filter stages around an emission continuation."""
    for st in reversed(stages):
        if isinstance(st, FlatS):
            raise CodegenError("flat stage where a linear chain was required")
        emit = (lambda st, nxt: lambda bundle: st.build(bundle, nxt))(st, emit)
    return emit


def _guard_thunks(guards) -> list:
    return [t for _, t in guards]


def _split_flat(stages):
    for k, st in enumerate(stages):
        if isinstance(st, FlatS):
            return stages[:k], st, stages[k + 1 :], k
    return stages, None, None, None


# ---------------------------------------------------------------------------
# Drive: the terminal operation building the fused loop nest


def drive(s: StreamRep, consume: Emit) -> CodeVal:
    """Materialize state and build the fused loop; consumes the stream.

    `consume` is invoked once per element with the bundle, building its
    statements into the (ambient) current scope.
    """
    b = s.backend
    s._owned()
    return b.scoped(lambda: _drive_into(b, s, consume, ()))


def _drive_into(b, s: StreamRep, consume: Emit, inherited: tuple) -> None:
    thunks = _guard_thunks(s.guards) + list(inherited)
    if isinstance(s.producer, Counted) and thunks:
        _ensure_guarded(s)
    for slot in s.slots:
        b.stmt(b.var_decl(slot.ref, slot.init))
    emit = _drive_chain(b, s.stages, s.guards, consume, inherited)
    prod = s.producer
    if isinstance(prod, Counted):
        b.stmt(b.for_(b.lit(0), prod.bound, lambda i: b.scoped(lambda: prod.body(i, emit))))
    else:
        guard = _conj(b, [prod.guard()] + [t() for t in thunks])
        b.stmt(b.while_(guard, b.scoped(lambda: prod.step(emit))))


def _drive_chain(b, stages, guards, consume: Emit, inherited: tuple) -> Emit:
    def build(k: int) -> Emit:
        if k == len(stages):
            return consume
        st = stages[k]
        rest = build(k + 1)
        if isinstance(st, (LinearS, FilterS)):
            return lambda bundle: st.build(bundle, rest)
        downstream = tuple(t for pos, t in guards if pos > k) + tuple(inherited)

        def flat_emit(bundle):
            inner = st.make(list(bundle))
            inner._owned()
            _drive_into(b, inner, rest, downstream)

        return flat_emit

    return build(0)


# ---------------------------------------------------------------------------
# Linearization: reify a stream as a pull-one-element state machine.


@dataclass
class Linearized:
    """Reified stream.  `advance` (a call-free statement) runs the machinery
    until it stores exactly one element in the holders (has_elem) or sets
    done; exactly one of the two outcomes holds after each execution."""

    slots: list
    has_elem: VarRef
    done: VarRef
    holders: list  # of VarRef, one per bundle slot
    advance: CodeVal


def _zero_of(b, typ):
    if typ == INT:
        return b.lit(0)
    if typ == BOOL:
        return b.lit(False)
    return b.lit(0.0)


def linearize(s: StreamRep) -> Linearized:
    """Normalize any stream (filters, nested flat_maps, zip results) into the
    flag/holder state machine.  Linear input produces the trivial wrapper."""
    b = s.backend
    s._owned()
    _ensure_guarded(s)
    slots = list(s.slots)
    has_elem = b.fresh_ref(BOOL, "v")
    done = b.fresh_ref(BOOL, "v")
    slots.append(Slot(has_elem, b.lit(False)))
    slots.append(Slot(done, b.lit(False)))
    holders: list[VarRef] = []

    def store(bundle):
        if not holders:
            for cv in bundle:
                h = b.fresh_ref(cv.typ, "v")
                holders.append(h)
                slots.append(Slot(h, _zero_of(b, cv.typ)))
        elif len(bundle) != len(holders):
            raise CodegenError("bundle arity changed between emissions")
        for h, cv in zip(holders, bundle):
            b.stmt(b.write(h, cv))
        b.stmt(b.write(has_elem, b.lit(True)))

    def exhausted():
        b.stmt(b.write(done, b.lit(True)))

    body = b.scoped(lambda: _attempt(b, s.producer, s.stages, s.guards, (), store, exhausted, slots))
    advance = b.while_(_conj(b, [b.not_(b.read(has_elem)), b.not_(b.read(done))]), body)
    if not holders:
        raise CodegenError("linearize: stream never emits, element shape unknown")
    return Linearized(slots, has_elem, done, holders, advance)


def _attempt(b, producer, stages, guards, inherited, emit: Emit, on_exhausted, slots_out) -> None:
    """Build one advance attempt: at most one emission, or a machine-state
    switch (enter/leave an inner expansion), or the exhausted action."""
    pre, flat, post, k = _split_flat(stages)
    if flat is None:
        thunks = _guard_thunks(guards) + list(inherited)
        chained = _nonflat_chain(stages, emit)
        guard = _conj(b, [producer.guard()] + [t() for t in thunks])
        b.stmt(b.if_stmt(guard, b.scoped(lambda: producer.step(chained)), b.scoped(on_exhausted)))
        return

    in_inner = b.fresh_ref(BOOL, "v")
    slots_out.append(Slot(in_inner, b.lit(False)))
    inner_box: list[StreamRep] = []
    holders: list[VarRef] = []

    def on_outer_emit(bundle):
        # Route the outer element through holder cells: the inner machine is
        # built in a different branch, so it may not reference bindings local
        # to this one.  For the same reason every shared intermediate created
        # while constructing the inner stream becomes a state cell.
        for cv in bundle:
            h = b.fresh_ref(cv.typ, "v")
            holders.append(h)
            slots_out.append(Slot(h, _zero_of(b, cv.typ)))
        for h, cv in zip(holders, bundle):
            b.stmt(b.write(h, cv))
        fresh: list[Slot] = []
        prev = b._letb_redirect
        b._letb_redirect = fresh
        try:
            inner = flat.make([b.read(h) for h in holders])
            inner._owned()
            _ensure_guarded(inner)
        finally:
            b._letb_redirect = prev
        inner.slots = fresh + inner.slots
        inner_box.append(inner)
        slots_out.extend(inner.slots)
        for slot in inner.slots:  # (re-)enter a fresh inner stream
            b.stmt(b.write(slot.ref, slot.init))
        b.stmt(b.write(in_inner, b.lit(True)))

    # every guard gates the outer producer: once any is false, the stream is
    # exhausted for good (a current inner expansion is cut only by the guards
    # positioned downstream of it, handled in the inner machine below)
    outer_thunks = _guard_thunks(guards) + list(inherited)

    def outer_attempt():
        guard = _conj(b, [producer.guard()] + [t() for t in outer_thunks])
        b.stmt(
            b.if_stmt(
                guard,
                b.scoped(lambda: producer.step(_nonflat_chain(pre, on_outer_emit))),
                b.scoped(on_exhausted),
            )
        )

    outer_branch = b.scoped(outer_attempt)
    if not inner_box:
        raise CodegenError("flat_map source never emits; inner stream unknown")
    inner = inner_box[0]

    def leave_inner():
        b.stmt(b.write(in_inner, b.lit(False)))

    inner_stages = inner.stages + post
    shifted = [(len(inner.stages) + (pos - (k + 1)), t) for pos, t in guards if pos > k]
    inner_guards = list(inner.guards) + shifted
    inner_branch = b.scoped(
        lambda: _attempt(
            b, inner.producer, inner_stages, inner_guards, inherited, emit, leave_inner, slots_out
        )
    )
    b.stmt(b.if_stmt(b.read(in_inner), inner_branch, outer_branch))


# ---------------------------------------------------------------------------
# Zip


def zip_raw(s1: StreamRep, s2: StreamRep) -> StreamRep:
    """Pair two streams element-wise; the result ends when either side does.

    Case analysis: two plain counted sides share one index; two linear sides
    nest their steps under a conjoined guard; a non-linear side is reified
    and pulled from by the other side (when both are non-linear, the second
    is reified; the first drives).
    """
    b = s1.backend
    if s2.backend is not b:
        raise CodegenError("zipped streams must share one backend")
    if s1.linear and s2.linear:
        s1._owned()
        s2._owned()
        if (
            isinstance(s1.producer, Counted)
            and isinstance(s2.producer, Counted)
            and not s1.guards
            and not s2.guards
        ):
            return _zip_counted(b, s1, s2)
        return _zip_guarded(b, s1, s2)
    if s1.linear:
        return _zip_pull(b, driver=s1._owned(), lz=linearize(s2), driver_first=True)
    if s2.linear:
        return _zip_pull(b, driver=s2._owned(), lz=linearize(s1), driver_first=False)
    return _zip_pull(b, driver=s1._owned(), lz=linearize(s2), driver_first=True)


def _zip_counted(b, s1: StreamRep, s2: StreamRep) -> StreamRep:
    """Both sides plain counted loops: one loop over the min bound."""
    b1, b2 = s1.producer.bound, s2.producer.bound
    if not is_atom(_ast(b1)):
        b1 = b.letb(b1)
    if not is_atom(_ast(b2)):
        b2 = b.letb(b2)
    bound = b.cond_expr(b.cmp("lt", b1, b2), b1, b2)
    p1, p2 = s1.producer, s2.producer

    def body(i, emit):
        def left(bundle1):
            def right(bundle2):
                emit(list(bundle1) + list(bundle2))

            p2.body(i, _nonflat_chain(s2.stages, right))

        p1.body(i, _nonflat_chain(s1.stages, left))

    return StreamRep(b, s1.slots + s2.slots, Counted(bound, body), [], True, [])


def _zip_guarded(b, s1: StreamRep, s2: StreamRep) -> StreamRep:
    _ensure_guarded(s1)
    _ensure_guarded(s2)
    p1, p2 = s1.producer, s2.producer
    t1, t2 = _guard_thunks(s1.guards), _guard_thunks(s2.guards)

    def guard():
        return _conj(b, [p1.guard()] + [t() for t in t1] + [p2.guard()] + [t() for t in t2])

    def step(emit):
        def left(bundle1):
            def right(bundle2):
                emit(list(bundle1) + list(bundle2))

            p2.step(_nonflat_chain(s2.stages, right))

        p1.step(_nonflat_chain(s1.stages, left))

    return StreamRep(b, s1.slots + s2.slots, Guarded(guard, step), [], True, [])


def _zip_pull(b, driver: StreamRep, lz: Linearized, driver_first: bool) -> StreamRep:
    """The driver side steps normally; each of its elements advances the
    reified side once.  Not-done joins the driver's termination guards."""

    def tail(bundle, emit):
        b.stmt(lz.advance)

        def deliver():
            b.stmt(b.write(lz.has_elem, b.lit(False)))
            pulled = [b.read(h) for h in lz.holders]
            full = list(bundle) + pulled if driver_first else pulled + list(bundle)
            emit(full)

        b.stmt(b.if_stmt(b.read(lz.has_elem), b.scoped(deliver)))

    stages = driver.stages + [FilterS(tail)]
    guards = driver.guards + [(len(stages), lambda: b.not_(b.read(lz.done)))]
    slots = driver.slots + lz.slots if driver_first else lz.slots + driver.slots
    return StreamRep(b, slots, driver.producer, stages, False, guards)
