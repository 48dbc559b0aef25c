"""Benchmark harness: emit, compile, verify, then time the suite pipelines.

For every case the generated kernel (and, when a baseline directory is
given, the hand-fused baseline kernel with the same ABI) is compiled with
identical flags, its one-shot result is checked against the in-process
evaluator on the same inputs -- a timing run never proceeds on wrong results
-- and at least 20 iterations are timed on an otherwise idle process.

Generated kernels and drivers are self-contained C99; signed arithmetic is
compiled with -fwrapv by default so it matches the evaluator's 32-bit
wrapping model even where pipelines overflow.
"""

from __future__ import annotations

import math
import os
import shlex
import statistics
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .backend import Backend, EmitUnit, INT, ArrT
from .cgen import CSrc, fusion_scan, render
from .interp import eval_unit
from .peval import wrap
from .suite import SUITE, ArraySpec, BenchCase, case_by_name, input_arrays, ordered_args

DEFAULT_CFLAGS = "-O3 -fwrapv"
DEFAULT_ITERATIONS = 20


class BenchError(Exception):
    pass


@dataclass(frozen=True)
class BenchResult:
    name: str
    variant: str  # 'generated' | 'baseline'
    mean_ms: float
    stderr_ms: float
    iterations: int
    checksum: int

    def csv_row(self) -> str:
        return f"{self.name},{self.variant},{self.mean_ms:.6f},{self.stderr_ms:.6f},{self.iterations},{self.checksum}"


CSV_HEADER = "name,variant,mean_ms,stderr_ms,iterations,checksum"


def emit_case(case: BenchCase) -> CSrc:
    """Generated kernel for one suite case (partial evaluation on)."""
    return render(case.build(wrap(Backend())))


def _fill_stmt(spec: ArraySpec, n_var: str, arr_var: str) -> list[str]:
    pick = (
        "(int)((nxt() >> 16) % 255u) + 1"
        if spec.fill == "count"
        else "(int)((nxt() >> 16) % 201u) - 100"
    )
    return [
        f"  for (int i = 0; i < {n_var}; i++) {arr_var}[i] = {pick};",
    ]


def driver_source(
    unit: EmitUnit, case: BenchCase, scale: float, iterations: int, rt_header: bool = False
) -> str:
    """Timing driver for a kernel with the suite ABI.  Self-contained by
    default; with `rt_header` it takes clock and checksum from fusilli_rt.h
    (shipped with the baseline kernels)."""
    arrays = {s.name: s for s in case.arrays}
    scalars = {s.name: s for s in case.scalars}
    protos = []
    for pname, ptyp in unit.params:
        if isinstance(ptyp, ArrT) and ptyp.elem == INT:
            protos.append(f"int *{pname}, int {pname}_len")
        elif ptyp == INT:
            protos.append(f"int {pname}")
        else:
            raise BenchError("suite kernels take int arrays and int scalars only")
    if unit.ret != INT:
        raise BenchError("suite kernels return int")
    sig = f"int {unit.name}({', '.join(protos)})"
    if rt_header:
        head = ['#include "fusilli_rt.h"', "#include <stdio.h>", "#include <stdlib.h>"]
    else:
        head = [
            "#define _POSIX_C_SOURCE 199309L",
            "#include <stdio.h>",
            "#include <stdlib.h>",
            "#include <time.h>",
        ]
    lines = [
        *head,
        "",
        f"{sig};",
        "",
        "static unsigned int st;",
        "static unsigned int nxt(void) { st = st * 1103515245u + 12345u; return st; }",
        "",
        "int main(void) {",
    ]
    call_args = []
    arr_idx = 0
    for pname, ptyp in unit.params:
        if not isinstance(ptyp, ArrT):
            call_args.append(str(scalars[pname].compute(scale)))
            continue
        spec = arrays[pname]
        arr_idx += 1
        n = max(1, int(spec.length * scale)) if spec.scaled else spec.length
        lines.append(f"  int n_{pname} = {n};")
        lines.append(f"  int *d_{pname} = (int *)malloc((size_t)n_{pname} * sizeof(int));")
        lines.append(f"  if (!d_{pname}) return 2;")
        lines.append(f"  st = {arr_idx}u;")
        lines.extend(_fill_stmt(spec, f"n_{pname}", f"d_{pname}"))
        call_args.append(f"d_{pname}, n_{pname}")
    call = f"{unit.name}({', '.join(call_args)})"
    if rt_header:
        timed = [
            f"  for (int it = 0; it < {iterations}; it++) {{",
            "    long long t0, t1;",
            "    FUSILLI_NOW_NS(t0);",
            f"    int r = {call};",
            "    FUSILLI_NOW_NS(t1);",
            "    FUSILLI_CHECKSUM(acc, r);",
            '    printf("ns %lld\\n", t1 - t0);',
            "  }",
        ]
    else:
        timed = [
            f"  for (int it = 0; it < {iterations}; it++) {{",
            "    struct timespec t0, t1;",
            "    clock_gettime(CLOCK_MONOTONIC, &t0);",
            f"    int r = {call};",
            "    clock_gettime(CLOCK_MONOTONIC, &t1);",
            "    acc += r;",
            '    printf("ns %lld\\n", (long long)(t1.tv_sec - t0.tv_sec) * 1000000000LL'
            " + (t1.tv_nsec - t0.tv_nsec));",
            "  }",
        ]
    lines.extend(
        [
            f"  int result = {call};",
            '  printf("result %d\\n", result);',
            "  long long acc = 0;",
            *timed,
            '  printf("acc %lld\\n", acc);',
        ]
    )
    for pname, ptyp in unit.params:
        if isinstance(ptyp, ArrT):
            lines.append(f"  free(d_{pname});")
    lines.extend(["  return 0;", "}"])
    return "\n".join(lines) + "\n"


def _compile(cc: str, cflags: list[str], sources: list[Path], out: Path) -> None:
    cmd = [cc, *cflags, *(str(s) for s in sources), "-o", str(out)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise BenchError(f"compiler failed: {' '.join(cmd)}\n{proc.stderr}")


def _run_binary(binary: Path) -> tuple[int, list[float], int]:
    proc = subprocess.run([str(binary)], capture_output=True, text=True)
    if proc.returncode != 0:
        raise BenchError(f"benchmark binary failed with status {proc.returncode}")
    result = None
    times_ns: list[float] = []
    acc = None
    for line in proc.stdout.splitlines():
        key, _, value = line.partition(" ")
        if key == "result":
            result = int(value)
        elif key == "ns":
            times_ns.append(float(value))
        elif key == "acc":
            acc = int(value)
    if result is None or acc is None:
        raise BenchError(f"malformed driver output:\n{proc.stdout[:500]}")
    return result, times_ns, acc


def run_bench(
    names: Optional[list[str]] = None,
    scale: float = 0.1,
    cc: str = "cc",
    cflags: str = DEFAULT_CFLAGS,
    iterations: int = DEFAULT_ITERATIONS,
    baseline_dir: Optional[str] = None,
    csv_path: Optional[str] = None,
    emit_dir: Optional[str] = None,
    emit_only: bool = False,
    verbose: bool = True,
    workdir: Optional[str] = None,
) -> list[BenchResult]:
    """Emit (+ optionally compile, verify and time) the benchmark suite."""
    if iterations < 20:
        raise BenchError("at least 20 iterations are required")
    cases = [case_by_name(n) for n in names] if names else list(SUITE)
    flags = shlex.split(cflags)
    results: list[BenchResult] = []
    own_tmp = None
    if workdir is None:
        own_tmp = tempfile.TemporaryDirectory(prefix="fusilli-bench-")
        workdir = own_tmp.name
    try:
        for case in cases:
            unit = case.build(wrap(Backend()))
            csrc = render(unit)
            report = fusion_scan(csrc)
            if not report.passed:
                raise BenchError(f"{case.name}: emitted code failed the fusion scan: {report}")
            if emit_dir:
                Path(emit_dir).mkdir(parents=True, exist_ok=True)
                (Path(emit_dir) / f"{case.name}.c").write_text(csrc.text)
            if emit_only:
                if verbose:
                    print(f"{case.name}: emitted ({report})")
                continue

            args = input_arrays(case, scale)
            vals = ordered_args(case, args)
            expected = eval_unit(
                unit, [list(v) if isinstance(v, list) else v for v in vals], fuel=None
            )

            variants = [("generated", csrc.text)]
            if baseline_dir:
                base_file = Path(baseline_dir) / f"{case.name}.c"
                if base_file.exists():
                    variants.append(("baseline", base_file.read_text()))
                elif verbose:
                    print(f"{case.name}: no baseline kernel, skipping that variant")

            use_rt = bool(baseline_dir) and (Path(baseline_dir) / "fusilli_rt.h").exists()
            driver = driver_source(unit, case, scale, iterations, rt_header=use_rt)
            extra = [f"-I{baseline_dir}"] if use_rt else []
            for variant, kernel_text in variants:
                vdir = Path(workdir) / f"{case.name}-{variant}"
                vdir.mkdir(parents=True, exist_ok=True)
                kpath = vdir / "kernel.c"
                dpath = vdir / "driver.c"
                kpath.write_text(kernel_text)
                dpath.write_text(driver)
                binary = vdir / "bench"
                _compile(cc, flags + extra, [kpath, dpath], binary)
                result, times_ns, acc = _run_binary(binary)
                if result != expected:
                    raise BenchError(
                        f"{case.name} [{variant}]: output mismatch: "
                        f"binary returned {result}, evaluator says {expected}; not timing wrong results"
                    )
                times_ms = [t / 1e6 for t in times_ns]
                mean = statistics.fmean(times_ms)
                stderr = statistics.stdev(times_ms) / math.sqrt(len(times_ms)) if len(times_ms) > 1 else 0.0
                results.append(BenchResult(case.name, variant, mean, stderr, len(times_ms), acc))
                if verbose:
                    print(
                        f"{case.name} [{variant}]: {mean:.3f} ms/iter "
                        f"(+/- {stderr:.3f}), checksum {acc}"
                    )
    finally:
        if own_tmp is not None:
            own_tmp.cleanup()
    if csv_path and not emit_only:
        with open(csv_path, "w") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in results:
                fh.write(r.csv_row() + "\n")
        if verbose:
            print(f"wrote {csv_path}")
    return results
