"""Construction-interface tests: typing, freshness, confinement, sequencing."""

import pytest
from hypothesis import given, strategies as st

from fusilli.backend import (
    BOOL,
    FLOAT,
    INT,
    ArrT,
    Backend,
    BackendMixError,
    CodegenError,
    TypeMismatchError,
    UnboundVarError,
    validate_unit,
)
from fusilli.interp import EvalTrap, Interp, eval_count, eval_traced, eval_unit
from fusilli.peval import wrap


def unit_of(build):
    """Wrap an expression builder into a parameterless unit."""
    b = Backend()
    return b, b.make_fun("t", [], lambda: build(b))


def eval_expr(build):
    _, u = unit_of(build)
    return eval_unit(u)


class TestLiterals:
    def test_int_literal(self):
        b = Backend()
        assert b.lit(1).typ == INT
        assert eval_expr(lambda b: b.lit(1)) == 1

    def test_bool_literal(self):
        b = Backend()
        assert b.lit(True).typ == BOOL
        assert eval_expr(lambda b: b.lit(True)) is True

    def test_float_zero(self):
        b = Backend()
        assert b.lit(0.0).typ == FLOAT
        assert eval_expr(lambda b: b.lit(0.0)) == 0.0

    def test_no_string_embedding(self):
        with pytest.raises(TypeMismatchError):
            Backend().lit("nope")


class TestArith:
    def test_square(self):
        assert eval_expr(lambda b: b.arith("mul", b.lit(12), b.lit(12))) == 144

    def test_constant_add(self):
        assert eval_expr(lambda b: b.arith("add", b.lit(2), b.lit(3))) == 5

    def test_mod_matches_c_truncation(self):
        # oracle: truncating division q = trunc(a/b), r = a - q*b
        cases = [(-7, 3), (7, -3), (-7, -3), (7, 3), (-1, 17)]
        for a, bb in cases:
            q = int(a / bb)
            want = a - q * bb
            got = eval_expr(lambda b: b.arith("mod", b.lit(a), b.lit(bb)))
            assert got == want, (a, bb)
        assert eval_expr(lambda b: b.arith("mod", b.lit(-7), b.lit(3))) == -1

    def test_div_truncates_toward_zero(self):
        assert eval_expr(lambda b: b.arith("div", b.lit(-7), b.lit(2))) == -3
        assert eval_expr(lambda b: b.arith("div", b.lit(7), b.lit(-2))) == -3

    def test_type_mismatch(self):
        b = Backend()
        with pytest.raises(TypeMismatchError):
            b.arith("add", b.lit(1), b.lit(1.0))

    def test_mod_on_float_rejected(self):
        b = Backend()
        with pytest.raises(TypeMismatchError):
            b.arith("mod", b.lit(1.0), b.lit(2.0))


class TestCmpBool:
    def test_lt_irreflexive(self):
        assert eval_expr(lambda b: b.cmp("lt", b.lit(1), b.lit(1))) is False

    def test_leq_reflexive(self):
        assert eval_expr(lambda b: b.cmp("leq", b.lit(1), b.lit(1))) is True

    def test_not(self):
        assert eval_expr(lambda b: b.boolop("not", b.lit(False))) is True

    def test_and_short_circuits(self):
        # the right operand traps if evaluated
        def build(b):
            trap = b.cmp("eq", b.arith("div", b.lit(1), b.lit(0)), b.lit(0))
            return b.and_(b.lit(False), trap)

        assert eval_expr(build) is False

    def test_or_short_circuits(self):
        def build(b):
            trap = b.cmp("eq", b.arith("div", b.lit(1), b.lit(0)), b.lit(0))
            return b.or_(b.lit(True), trap)

        assert eval_expr(build) is True

    def test_bool_operand_required(self):
        b = Backend()
        with pytest.raises(TypeMismatchError):
            b.and_(b.lit(1), b.lit(True))


class TestCells:
    def test_read_after_init(self):
        def build(b):
            v, decl = b.new_var(b.lit(5))
            b.stmt(decl)
            return b.read(v)

        assert eval_expr(build) == 5

    def test_last_write_wins(self):
        def build(b):
            v, decl = b.new_var(b.lit(0))
            b.stmt(decl)
            b.stmt(b.write(v, b.lit(9)))
            return b.read(v)

        assert eval_expr(build) == 9

    def test_two_writes_in_seq(self):
        def build(b):
            v, decl = b.new_var(b.lit(0))
            b.stmt(decl)
            b.stmt(b.seq(b.write(v, b.lit(1)), b.write(v, b.lit(2))))
            return b.read(v)

        assert eval_expr(build) == 2

    def test_write_type_checked(self):
        b = Backend()
        b.open_scope()
        v, _ = b.new_var(b.lit(0))
        with pytest.raises(TypeMismatchError):
            b.write(v, b.lit(True))

    def test_accumulator_update(self):
        def build(b):
            v, decl = b.new_var(b.lit(40))
            b.stmt(decl)
            b.stmt(b.write(v, b.arith("add", b.read(v), b.lit(2))))
            return b.read(v)

        assert eval_expr(build) == 42


class TestControl:
    def test_if_true_is_branch(self):
        def build(b):
            v, decl = b.new_var(b.lit(0))
            b.stmt(decl)
            b.stmt(b.if_stmt(b.lit(True), b.write(v, b.lit(1))))
            return b.read(v)

        assert eval_expr(build) == 1

    def test_if_false_is_noop(self):
        def build(b):
            v, decl = b.new_var(b.lit(0))
            b.stmt(decl)
            b.stmt(b.if_stmt(b.lit(False), b.write(v, b.lit(1))))
            return b.read(v)

        assert eval_expr(build) == 0

    def test_while_false_runs_zero_times(self):
        def build(b):
            v, decl = b.new_var(b.lit(7))
            b.stmt(decl)
            b.stmt(b.while_(b.lit(False), b.write(v, b.lit(0))))
            return b.read(v)

        b, u = unit_of(build)
        value, steps = eval_count(u)
        assert value == 7 and steps == 0

    def test_countdown_runs_three_iterations(self):
        def build(b):
            v, decl = b.new_var(b.lit(3))
            b.stmt(decl)
            b.stmt(
                b.while_(
                    b.cmp("gt", b.read(v), b.lit(0)),
                    b.write(v, b.arith("sub", b.read(v), b.lit(1))),
                )
            )
            return b.read(v)

        _, u = unit_of(build)
        value, steps = eval_count(u)
        assert value == 0 and steps == 3

    def test_for_empty_range(self):
        def build(b):
            v, decl = b.new_var(b.lit(0))
            b.stmt(decl)
            b.stmt(b.for_(b.lit(0), b.lit(-1), lambda i: b.write(v, b.lit(1))))
            return b.read(v)

        _, u = unit_of(build)
        value, steps = eval_count(u)
        assert value == 0 and steps == 0

    def test_for_visits_inclusive_bound(self):
        def build(b):
            v, decl = b.new_var(b.lit(0))
            b.stmt(decl)
            # collect 10*i + 1 per visit: 0,1,2 visited -> 3 visits, sum of i = 3
            b.stmt(
                b.for_(
                    b.lit(0),
                    b.lit(2),
                    lambda i: b.write(v, b.arith("add", b.read(v), b.arith("add", b.arith("mul", i, b.lit(10)), b.lit(1)))),
                )
            )
            return b.read(v)

        assert eval_expr(build) == 3 + 10 * (0 + 1 + 2)


class TestArrays:
    def test_len_and_get(self):
        b = Backend()
        u = b.make_fun("t", [("a", ArrT(INT))], lambda a: b.arith("mul", b.arr_len(a), b.arr_get(a, b.lit(1))))
        assert eval_unit(u, [[4, 5, 6]]) == 3 * 5

    def test_out_of_bounds_traps(self):
        b = Backend()
        u = b.make_fun("t", [("a", ArrT(INT))], lambda a: b.arr_get(a, b.lit(3)))
        with pytest.raises(EvalTrap):
            eval_unit(u, [[4, 5, 6]])

    def test_arr_set_visible_through_parameter(self):
        b = Backend()

        def body(a):
            b.stmt(b.arr_set(a, b.lit(0), b.lit(42)))
            return b.arr_get(a, b.lit(0))

        u = b.make_fun("t", [("a", ArrT(INT))], body)
        assert eval_unit(u, [[0, 1]]) == 42


class TestSeqLetb:
    def test_seq_of_nop_is_identity(self):
        assert eval_expr(lambda b: b.seq(b.nop(), b.lit(3))) == 3

    def test_letb_shares_without_recompute(self):
        def build(b):
            v, decl = b.new_var(b.lit(0))
            b.stmt(decl)
            # rhs has a side effect: increments v, yields its new value
            rhs = b.seq(b.write(v, b.arith("add", b.read(v), b.lit(1))), b.read(v))
            t = b.letb(rhs)
            return b.arith("add", t, t)

        _, u = unit_of(build)
        value, trace = eval_traced(u)
        assert value == 2  # bound once: v became 1, used twice
        assert sum(1 for _, op in trace if op == "write") == 1

    def test_letb_of_atom_passes_through(self):
        b = Backend()
        b.open_scope()
        lit = b.lit(5)
        assert b.letb(lit) is lit


class TestMakeFun:
    def test_identity_applied(self):
        b = Backend()
        u = b.make_fun("id", [("x", INT)], lambda x: x)
        assert eval_unit(u, [7]) == 7

    def test_duplicate_params_rejected(self):
        b = Backend()
        with pytest.raises(CodegenError):
            b.make_fun("t", [("x", INT), ("x", INT)], lambda x, y: x)

    def test_foreign_codeval_rejected(self):
        other = Backend()
        foreign = other.lit(1)
        b = Backend()
        with pytest.raises(BackendMixError):
            b.make_fun("t", [], lambda: b.arith("add", b.lit(1), foreign))

    def test_stale_binding_rejected(self):
        b = Backend()
        leaked = {}

        def first():
            leaked["t"] = b.letb(b.arith("add", b.lit(1), b.lit(1)))
            return leaked["t"]

        b.make_fun("one", [], first)
        with pytest.raises(UnboundVarError):
            b.make_fun("two", [], lambda: leaked["t"])

    def test_no_nesting(self):
        b = Backend()

        def body():
            b.make_fun("inner", [], lambda: b.lit(1))
            return b.lit(0)

        with pytest.raises(CodegenError):
            b.make_fun("outer", [], body)


BACKEND_MAKERS = {
    "interp": Interp,
    "c": Backend,
    "peval-interp": lambda: wrap(Interp()),
    "peval-c": lambda: wrap(Backend()),
}


@pytest.mark.parametrize("maker_a", list(BACKEND_MAKERS))
@pytest.mark.parametrize("maker_b", list(BACKEND_MAKERS))
def test_backend_confinement(maker_a, maker_b):
    a = BACKEND_MAKERS[maker_a]()
    b = BACKEND_MAKERS[maker_b]()
    va = a.lit(1)
    if a is b:
        return
    with pytest.raises(BackendMixError):
        b.arith("add", va, b.lit(1))


def test_validate_unit_accepts_real_units():
    def build(b):
        v, decl = b.new_var(b.lit(0))
        b.stmt(decl)
        b.stmt(b.for_(b.lit(0), b.lit(5), lambda i: b.write(v, b.arith("add", b.read(v), i))))
        return b.read(v)

    _, u = unit_of(build)
    validate_unit(u)  # must not raise
    assert eval_unit(u) == 15


@given(st.integers(-100, 100), st.integers(-100, 100), st.integers(1, 50))
def test_evaluation_is_deterministic(a, c, n):
    def build(b):
        v, decl = b.new_var(b.lit(a))
        b.stmt(decl)
        k, dk = b.new_var(b.lit(n))
        b.stmt(dk)

        def body():
            b.stmt(b.write(v, b.arith("add", b.arith("mul", b.read(v), b.lit(3)), b.lit(c))))
            b.stmt(b.write(k, b.arith("sub", b.read(k), b.lit(1))))

        b.stmt(b.while_(b.cmp("gt", b.read(k), b.lit(0)), b.scoped(body)))
        return b.read(v)

    _, u = unit_of(build)
    r1, t1 = eval_traced(u)
    r2, t2 = eval_traced(u)
    assert r1 == r2 and t1 == t2
