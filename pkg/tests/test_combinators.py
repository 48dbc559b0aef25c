"""Declarative-surface tests: sources, sinks, algebraic laws."""

from hypothesis import given, settings, strategies as st

from fusilli.backend import Backend, INT, ArrT
from fusilli.cints import wrap32
from fusilli.combinators import iota, of_arr, range_, zip_with
from fusilli.interp import eval_unit


def int_sum_unit(make_stream, nparams=0):
    b = Backend()

    def body(*args):
        return make_stream(b, *args).sum()

    return b.make_fun("t", [(f"a{i}", ArrT(INT)) for i in range(nparams)], body)


def test_iota_take_three():
    u = int_sum_unit(lambda b: iota(b, b.lit(1)).take(b.lit(3)))
    assert eval_unit(u) == 1 + 2 + 3


@settings(max_examples=60)
@given(st.integers(-100, 100), st.integers(0, 100))
def test_iota_take_sum_closed_form(k, n):
    u = int_sum_unit(lambda b: iota(b, b.lit(k)).take(b.lit(n)))
    assert eval_unit(u) == n * k + n * (n - 1) // 2


@given(st.lists(st.integers(-100, 100), max_size=12))
def test_of_arr_sum_is_reference_fold(xs):
    u = int_sum_unit(lambda b, a: of_arr(b, a), nparams=1)
    acc = 0
    for x in xs:
        acc = wrap32(acc + x)
    assert eval_unit(u, [xs]) == acc


def test_sum_of_empty_is_zero():
    u = int_sum_unit(lambda b, a: of_arr(b, a), nparams=1)
    assert eval_unit(u, [[]]) == 0


def test_fold_max_with_int_min_floor():
    b = Backend()

    def body(a):
        return of_arr(b, a).fold(
            lambda acc, e: b.cond_expr(b.cmp("gt", e, acc), e, acc), b.lit(-(2**31))
        )

    u = b.make_fun("t", [("a", ArrT(INT))], body)
    assert eval_unit(u, [[3, 9, 2]]) == 9
    assert eval_unit(u, [[]]) == -(2**31)


def test_flat_map_sum():
    u = int_sum_unit(
        lambda b, a: of_arr(b, a).flat_map(lambda x: range_(b, b.lit(0), x)), nparams=1
    )
    assert eval_unit(u, [[2, 3]]) == 0 + 1 + 0 + 1 + 2 == 4


def test_zip_with_is_dot_product():
    b = Backend()

    def body(a1, a2):
        return zip_with(lambda x, y: b.arith("mul", x, y), of_arr(b, a1), of_arr(b, a2)).sum()

    u = b.make_fun("dot", [("a", ArrT(INT)), ("b", ArrT(INT))], body)
    assert eval_unit(u, [[1, 2, 3], [4, 5, 6]]) == 32


def test_iter_consume_count_matches_length():
    b = Backend()

    def body(a):
        count, decl = b.new_var(b.lit(0))
        b.stmt(decl)
        s = of_arr(b, a).filter(lambda e: b.cmp("gt", e, b.lit(0)))
        b.stmt(s.iter(lambda e: b.write(count, b.arith("add", b.read(count), b.lit(1)))))
        return b.read(count)

    u = b.make_fun("t", [("a", ArrT(INT))], body)
    data = [1, -2, 3, 0, 5]
    assert eval_unit(u, [data]) == len([x for x in data if x > 0])


def test_iter_over_empty_is_noop():
    b = Backend()

    def body(a):
        count, decl = b.new_var(b.lit(0))
        b.stmt(decl)
        b.stmt(of_arr(b, a).iter(lambda e: b.write(count, b.lit(99))))
        return b.read(count)

    u = b.make_fun("t", [("a", ArrT(INT))], body)
    assert eval_unit(u, [[]]) == 0


def test_iter_into_output_array_reproduces_drain():
    b = Backend()

    def body(a, out):
        idx, decl = b.new_var(b.lit(0))
        b.stmt(decl)
        s = of_arr(b, a).map(lambda e: b.arith("mul", e, b.lit(3)))

        def consume(e):
            b.stmt(b.arr_set(out, b.read(idx), e))
            return b.write(idx, b.arith("add", b.read(idx), b.lit(1)))

        b.stmt(s.iter(consume))
        return b.read(idx)

    u = b.make_fun("t", [("a", ArrT(INT)), ("out", ArrT(INT))], body)
    buf = [0] * 4
    n = eval_unit(u, [[5, 6, 7, 8], buf])
    assert n == 4 and buf == [15, 18, 21, 24]


class TestDrainLaws:
    """Algebraic laws asserted as drain equality under the evaluator."""

    def drain(self, make_stream, xs):
        b = Backend()

        def body(a, out):
            idx, decl = b.new_var(b.lit(0))
            b.stmt(decl)

            def consume(e):
                b.stmt(b.arr_set(out, b.read(idx), e))
                return b.write(idx, b.arith("add", b.read(idx), b.lit(1)))

            b.stmt(make_stream(b, a).iter(consume))
            return b.read(idx)

        u = b.make_fun("t", [("a", ArrT(INT)), ("out", ArrT(INT))], body)
        buf = [0] * max(64, len(xs) * 2)
        n = eval_unit(u, [list(xs), buf])
        return buf[:n]

    @given(st.lists(st.integers(-100, 100), max_size=10))
    def test_map_map_fuses(self, xs):
        one = self.drain(
            lambda b, a: of_arr(b, a)
            .map(lambda e: b.arith("add", e, b.lit(3)))
            .map(lambda e: b.arith("mul", e, e)),
            xs,
        )
        other = self.drain(
            lambda b, a: of_arr(b, a).map(
                lambda e: b.arith("mul", b.arith("add", e, b.lit(3)), b.arith("add", e, b.lit(3)))
            ),
            xs,
        )
        assert one == other

    @settings(max_examples=40)
    @given(st.lists(st.integers(-100, 100), max_size=10), st.integers(0, 12), st.integers(0, 12))
    def test_take_take_is_take_min(self, xs, m, n):
        one = self.drain(lambda b, a: of_arr(b, a).take(b.lit(m)).take(b.lit(n)), xs)
        other = self.drain(lambda b, a: of_arr(b, a).take(b.lit(min(m, n))), xs)
        assert one == other

    @given(st.lists(st.integers(-100, 100), max_size=10))
    def test_filter_filter_is_conjunction(self, xs):
        one = self.drain(
            lambda b, a: of_arr(b, a)
            .filter(lambda e: b.cmp("gt", e, b.lit(0)))
            .filter(lambda e: b.cmp("eq", b.arith("mod", e, b.lit(2)), b.lit(0))),
            xs,
        )
        other = self.drain(
            lambda b, a: of_arr(b, a).filter(
                lambda e: b.and_(
                    b.cmp("eq", b.arith("mod", e, b.lit(2)), b.lit(0)), b.cmp("gt", e, b.lit(0))
                )
            ),
            xs,
        )
        assert one == other
