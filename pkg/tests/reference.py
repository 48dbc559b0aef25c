"""Independent reference semantics for pipeline descriptions.

This is the oracle the engine is checked against: a naive generator-based
model of each combinator over Python values, with its own copy of the C
integer rules (32-bit wrap, truncating division).  It deliberately shares no
evaluation machinery with the package; its only common ground is the parsed
description structure, which is the artifact under test's input format.
"""

from __future__ import annotations

from fusilli.pipeline import (
    Chain,
    EBin,
    ECond,
    ENum,
    EUn,
    EVar,
    OpDrop,
    OpDropWhile,
    OpFilter,
    OpFlatMap,
    OpMap,
    OpMapAccum,
    OpTake,
    OpTakeWhile,
    PipelineDesc,
    SinkFold,
    SinkIterCount,
    SinkSum,
    SourceIota,
    SourceOfArr,
    SourceRange,
    SourceZip,
)


def _w32(x: int) -> int:
    return ((x + 0x80000000) & 0xFFFFFFFF) - 0x80000000


def _tdiv(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return _w32(q)


def _tmod(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return a - q * b


def eval_action(e, env: dict):
    """Evaluate a semantic action under C rules (host-independent)."""
    if isinstance(e, ENum):
        return e.value
    if isinstance(e, EVar):
        return env[e.name]
    if isinstance(e, EUn):
        v = eval_action(e.a, env)
        if e.op == "!":
            return not v
        return _w32(-v) if isinstance(v, int) else -v
    if isinstance(e, EBin):
        if e.op == "&&":
            return eval_action(e.a, env) and eval_action(e.b, env)
        if e.op == "||":
            return eval_action(e.a, env) or eval_action(e.b, env)
        a = eval_action(e.a, env)
        b = eval_action(e.b, env)
        if e.op in ("<", "<=", ">", ">=", "==", "!="):
            return {
                "<": a < b,
                "<=": a <= b,
                ">": a > b,
                ">=": a >= b,
                "==": a == b,
                "!=": a != b,
            }[e.op]
        if isinstance(a, int) and not isinstance(a, bool):
            if e.op == "+":
                return _w32(a + b)
            if e.op == "-":
                return _w32(a - b)
            if e.op == "*":
                return _w32(a * b)
            if e.op == "/":
                return _tdiv(a, b)
            return _tmod(a, b)
        return {"+": a + b, "-": a - b, "*": a * b, "/": a / b}[e.op]
    if isinstance(e, ECond):
        return eval_action(e.a, env) if eval_action(e.c, env) else eval_action(e.b, env)
    raise AssertionError(f"bad action node {e!r}")


def _gen_chain(chain: Chain, env: dict):
    src = chain.source
    if isinstance(src, SourceIota):
        def gen():
            k = eval_action(src.start, env)
            while True:
                yield k
                k = _w32(k + 1)

        out = gen()
    elif isinstance(src, SourceOfArr):
        out = iter(list(env[src.param]))
    elif isinstance(src, SourceRange):
        def gen():
            lo = eval_action(src.lo, env)
            hi = eval_action(src.hi, env)
            bound = _w32(_w32(hi - lo) - 1)
            for i in range(0, bound + 1):
                yield _w32(lo + i)

        out = gen()
    elif isinstance(src, SourceZip):
        def gen():
            left = _gen_chain(src.left, env)
            right = _gen_chain(src.right, env)
            while True:
                try:
                    x = next(left)
                    y = next(right)
                except StopIteration:
                    return
                yield eval_action(src.f, {**env, "x": x, "y": y})

        out = gen()
    else:
        raise AssertionError(f"bad source {src!r}")

    for op in chain.ops:
        out = _apply_op(op, out, env)
    return out


def _apply_op(op, items, env):
    if isinstance(op, OpMap):
        return (eval_action(op.f, {**env, "e": e}) for e in items)
    if isinstance(op, OpFilter):
        return (e for e in items if eval_action(op.p, {**env, "e": e}))
    if isinstance(op, OpTake):
        def take():
            n = eval_action(op.n, env)
            for e in items:
                if n <= 0:
                    return
                n -= 1
                yield e

        return take()
    if isinstance(op, OpDrop):
        def drop():
            n = eval_action(op.n, env)
            for e in items:
                if n > 0:
                    n -= 1
                else:
                    yield e

        return drop()
    if isinstance(op, OpTakeWhile):
        def take_while():
            for e in items:
                if not eval_action(op.p, {**env, "e": e}):
                    return
                yield e

        return take_while()
    if isinstance(op, OpDropWhile):
        def drop_while():
            latched = False
            for e in items:
                if not latched and eval_action(op.p, {**env, "e": e}):
                    continue
                latched = True
                yield e

        return drop_while()
    if isinstance(op, OpFlatMap):
        def flat():
            for e in items:
                yield from _gen_chain(op.chain, {**env, "x": e})

        return flat()
    if isinstance(op, OpMapAccum):
        def accum():
            s = eval_action(op.init, env)
            for e in items:
                out = eval_action(op.out, {**env, "s": s, "e": e})
                s = eval_action(op.step, {**env, "s": s, "e": e})
                yield out

        return accum()
    raise AssertionError(f"bad op {op!r}")


def drain(desc_or_chain, env: dict) -> list:
    chain = desc_or_chain.chain if isinstance(desc_or_chain, PipelineDesc) else desc_or_chain
    return list(_gen_chain(chain, env))


def run_pipeline(desc: PipelineDesc, args: dict):
    """Reference result for a whole pipeline on concrete argument values."""
    env = dict(args)
    items = _gen_chain(desc.chain, env)
    sink = desc.sink
    if isinstance(sink, SinkSum):
        elems = list(items)
        if any(isinstance(e, float) for e in elems):
            acc = 0.0
            for e in elems:
                acc = acc + e
            return acc
        acc = 0
        for e in elems:
            acc = _w32(acc + e)
        return acc
    if isinstance(sink, SinkIterCount):
        return sum(1 for _ in items)
    if isinstance(sink, SinkFold):
        acc = eval_action(sink.init, env)
        for e in items:
            acc = eval_action(sink.step, {**env, "acc": acc, "e": e})
        return acc
    raise AssertionError(f"bad sink {sink!r}")
