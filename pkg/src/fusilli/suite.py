"""The benchmark pipelines: declarative definitions plus input recipes.

Ten of the eleven are ordinary pipeline descriptions.  Run-length decoding
works on (value, count) pairs, which the scalar surface deliberately cannot
express, so it is built against the raw engine where multi-value bundles are
a generation-time notion; no pair ever appears in the emitted code.

Input arrays are filled by a fixed 32-bit LCG so the C drivers and the
in-process verification see identical data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .backend import INT, ArrT, EmitUnit
from . import combinators as comb
from . import streams
from .pipeline import PipelineDesc, build_unit, parse_pipeline

SIMPLE_N = 100_000_000
ZIP_N = 10_000_000
FLAT_OUTER_N = 1_000_000
FLAT_INNER_N = 10
RLD_PAIRS = 200_000


@dataclass(frozen=True)
class ArraySpec:
    name: str
    length: int
    fill: str  # 'int' (values in [-100, 100]) or 'count' (in [1, 255])
    scaled: bool = True  # inner flat_map arrays keep their fixed size


@dataclass(frozen=True)
class ScalarSpec:
    name: str
    compute: Callable[[float], int]  # scale -> value


@dataclass(frozen=True)
class BenchCase:
    name: str
    arrays: tuple  # of ArraySpec
    desc: Optional[PipelineDesc]
    build: Callable[[object], EmitUnit]  # backend -> unit
    scalars: tuple = ()  # of ScalarSpec, passed after the arrays


def _lcg_fill(seed: int, length: int, kind: str) -> list[int]:
    out = []
    x = seed & 0xFFFFFFFF
    for _ in range(length):
        x = (x * 1103515245 + 12345) & 0xFFFFFFFF
        if kind == "count":
            out.append((x >> 16) % 255 + 1)
        else:
            out.append(int((x >> 16) % 201) - 100)
    return out


def input_arrays(case: BenchCase, scale: float) -> dict:
    """Deterministic inputs at the given scale; seed is the array's index."""
    args = {}
    for idx, spec in enumerate(case.arrays):
        n = max(1, int(spec.length * scale)) if spec.scaled else spec.length
        args[spec.name] = _lcg_fill(idx + 1, n, spec.fill)
    for spec in case.scalars:
        args[spec.name] = spec.compute(scale)
    return args


def _from_text(name: str, arrays: tuple, text: str, scalars: tuple = ()) -> BenchCase:
    desc = parse_pipeline(text)
    assert desc.name == name
    return BenchCase(name, arrays, desc, lambda b: build_unit(desc, b), scalars)


def _rld_unit(b) -> EmitUnit:
    """Run-length decode (values[i] repeated counts[i] times), then sum."""

    def body(values, counts):
        pairs = streams.zip_raw(comb.of_arr(b, values).rep, comb.of_arr(b, counts).rep)

        def expand(bundle):
            v, c = bundle
            return comb.range_(b, b.lit(0), c).map(lambda _e: v).rep

        flat = streams.flat_map_raw(expand, pairs)
        return comb.Stream(flat).sum()

    return b.make_fun(
        "runLengthDecoding", [("values", ArrT(INT)), ("counts", ArrT(INT))], body
    )


def _build_suite() -> list[BenchCase]:
    a = lambda n: (ArraySpec("a", n, "int"),)
    ab = lambda n, m: (
        ArraySpec("a", n, "int"),
        ArraySpec("b", m, "int", scaled=m > 1000),
    )
    cases = [
        _from_text(
            "sum",
            a(SIMPLE_N),
            "pipeline sum\nparam a int_array\nsource of_arr a\nsink sum\n",
        ),
        _from_text(
            "sumOfSquares",
            a(SIMPLE_N),
            "pipeline sumOfSquares\nparam a int_array\nsource of_arr a\nmap (e * e)\nsink sum\n",
        ),
        _from_text(
            "maps",
            a(SIMPLE_N),
            "pipeline maps\nparam a int_array\nsource of_arr a\n"
            + "".join(f"map (e * {k})\n" for k in range(2, 9))
            + "sink sum\n",
        ),
        _from_text(
            "filters",
            a(SIMPLE_N),
            "pipeline filters\nparam a int_array\nsource of_arr a\n"
            + "".join(f"filter ((e % {k}) != 0)\n" for k in range(2, 9))
            + "sink sum\n",
        ),
        _from_text(
            "dotProduct",
            ab(ZIP_N, ZIP_N),
            "pipeline dotProduct\n"
            "param a int_array\n"
            "param b int_array\n"
            "source zip_with (x * y)\n"
            "  left\n"
            "    source of_arr a\n"
            "  right\n"
            "    source of_arr b\n"
            "sink sum\n",
        ),
        _from_text(
            "flatMapAfterZip",
            ab(FLAT_OUTER_N, FLAT_INNER_N),
            "pipeline flatMapAfterZip\n"
            "param a int_array\n"
            "param b int_array\n"
            "source zip_with (x + y)\n"
            "  left\n"
            "    source of_arr a\n"
            "  right\n"
            "    source of_arr a\n"
            "flat_map\n"
            "  source of_arr b\n"
            "  map (e + x)\n"
            "sink sum\n",
        ),
        _from_text(
            "zipWithAfterFlatMap",
            ab(FLAT_OUTER_N, FLAT_INNER_N),
            "pipeline zipWithAfterFlatMap\n"
            "param a int_array\n"
            "param b int_array\n"
            "source zip_with (x + y)\n"
            "  left\n"
            "    source of_arr a\n"
            "    flat_map\n"
            "      source of_arr b\n"
            "      map (e + x)\n"
            "  right\n"
            "    source of_arr a\n"
            "sink sum\n",
        ),
        _from_text(
            "flatMapTake",
            ab(FLAT_OUTER_N, FLAT_INNER_N),
            "pipeline flatMapTake\n"
            "param a int_array\n"
            "param b int_array\n"
            "param n int\n"
            "source of_arr a\n"
            "flat_map\n"
            "  source of_arr b\n"
            "  map (x * e)\n"
            "take (n)\n"
            "sink sum\n",
            scalars=(ScalarSpec("n", lambda sc: max(1, int(FLAT_OUTER_N * sc)) * FLAT_INNER_N // 2),),
        ),
        _from_text(
            "zipFilterFilter",
            ab(ZIP_N, ZIP_N),
            "pipeline zipFilterFilter\n"
            "param a int_array\n"
            "param b int_array\n"
            "source zip_with (x + y)\n"
            "  left\n"
            "    source of_arr a\n"
            "    filter ((e % 2) == 0)\n"
            "  right\n"
            "    source of_arr b\n"
            "    filter ((e % 3) == 0)\n"
            "sink sum\n",
        ),
        _from_text(
            "zipFlatMapFlatMap",
            ab(FLAT_OUTER_N, FLAT_INNER_N),
            "pipeline zipFlatMapFlatMap\n"
            "param a int_array\n"
            "param b int_array\n"
            "source zip_with (x + y)\n"
            "  left\n"
            "    source of_arr a\n"
            "    flat_map\n"
            "      source of_arr b\n"
            "      map (x * e)\n"
            "  right\n"
            "    source of_arr b\n"
            "    flat_map\n"
            "      source of_arr a\n"
            "      map (x + e)\n"
            "sink sum\n",
        ),
        BenchCase(
            "runLengthDecoding",
            (ArraySpec("values", RLD_PAIRS, "int"), ArraySpec("counts", RLD_PAIRS, "count")),
            None,
            _rld_unit,
        ),
    ]
    return cases


SUITE: list[BenchCase] = _build_suite()
SUITE_NAMES = [c.name for c in SUITE]


def case_by_name(name: str) -> BenchCase:
    for c in SUITE:
        if c.name == name:
            return c
    raise KeyError(f"no benchmark named {name!r}; one of {', '.join(SUITE_NAMES)}")


def ordered_args(case: BenchCase, args: dict) -> list:
    """Argument values in the kernel's parameter order (arrays then scalars
    follow the declaration order of the pipeline)."""
    order = [n for n, _ in case.desc.params] if case.desc else [s.name for s in case.arrays]
    return [args[n] for n in order]
