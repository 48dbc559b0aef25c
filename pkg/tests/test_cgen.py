"""Renderer tests: shapes, determinism, strict compilation, fusion scanner."""

import subprocess

import pytest

from fusilli.backend import Backend, FLOAT, INT, ArrT, UnboundVarError
from fusilli.cgen import STRICT_CFLAGS, c_tokens, fusion_scan, render
from fusilli.combinators import iota, of_arr, zip_with


def test_constant_function_shape():
    b = Backend()
    u = b.make_fun("k", [], lambda: b.lit(7))
    src = render(u)
    assert c_tokens(src.text) == ["int", "k", "(", "void", ")", "{", "return", "7", ";", "}"]


def test_array_params_become_pointer_and_length():
    b = Backend()
    u = b.make_fun("f", [("a", ArrT(INT)), ("s", FLOAT)], lambda a, s: b.arith("mul", b.arr_len(a), b.arr_len(a)))
    src = render(u)
    assert "int f(int *a, int a_len, double s)" in src.signature
    assert "(void)a;" in src.text  # data pointer legitimately unread
    assert "(void)s;" in src.text


def test_int_min_has_no_negative_literal():
    b = Backend()
    u = b.make_fun("m", [], lambda: b.lit(-(2**31)))
    assert "(-2147483647 - 1)" in render(u).text


def test_render_is_deterministic():
    def emit():
        b = Backend()

        def body(a1, a2):
            return zip_with(lambda x, y: b.arith("mul", x, y), of_arr(b, a1), of_arr(b, a2)).sum()

        return render(b.make_fun("dot", [("x", ArrT(INT)), ("y", ArrT(INT))], body)).text

    assert emit() == emit()


def test_render_rejects_foreign_symbols():
    from fusilli.backend import CodeVal, EmitUnit, LetUse

    bad_body = CodeVal(INT, LetUse("t_99", INT), None)
    unit = EmitUnit("ghost", (), bad_body, INT)
    with pytest.raises(UnboundVarError):
        render(unit)


def test_strict_compile_of_generated_units(tmp_path):
    b = Backend()

    def body(a):
        s = of_arr(b, a)
        s = s.filter(lambda e: b.cmp("gt", e, b.lit(0)))
        s = s.map(lambda e: b.arith("mul", e, e))
        return s.sum()

    u = b.make_fun("squares_of_positives", [("a", ArrT(INT))], body)
    src = render(u)
    path = tmp_path / "k.c"
    path.write_text(src.text)
    proc = subprocess.run(
        ["gcc", *STRICT_CFLAGS, "-O2", "-c", str(path), "-o", str(tmp_path / "k.o")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr


class TestFusionScan:
    def test_clean_kernel_passes(self):
        b = Backend()
        u = b.make_fun("fn", [], lambda: iota(b, b.lit(1)).take(b.lit(3)).sum())
        report = fusion_scan(render(u))
        assert report.passed
        assert (report.calls, report.allocs, report.aggregates) == (0, 0, 0)

    def test_malloc_is_flagged_as_allocation(self):
        text = "int f(void) { int *p = malloc(4); return 0; }\n"
        report = fusion_scan(text, fn_name="f")
        assert not report.passed
        assert report.allocs == 1

    def test_call_expression_is_flagged(self):
        text = "int f(void) { return g(1); }\n"
        report = fusion_scan(text, fn_name="f")
        assert report.calls == 1

    def test_own_definition_is_not_a_call_but_recursion_is(self):
        text = "int f(int x) { return f(x - 1); }\n"
        report = fusion_scan(text, fn_name="f")
        assert report.calls == 1

    def test_keywords_and_casts_are_not_calls(self):
        text = "int f(int x) { while (x) { if (x) { x--; } } (void)x; return (int)(x); }\n"
        report = fusion_scan(text, fn_name="f")
        assert report.calls == 0

    def test_aggregate_literal_is_flagged(self):
        text = "int f(void) { int a[2] = {1, 2}; return a[0]; }\n"
        report = fusion_scan(text, fn_name="f")
        assert report.aggregates == 1

    def test_str_form_mentions_counts(self):
        assert "calls=1" in str(fusion_scan("int f(void) { return g(); }", fn_name="f"))
