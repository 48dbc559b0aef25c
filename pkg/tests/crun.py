"""Compile-and-run helper: execute an emitted kernel on literal argument sets.

Builds one binary per kernel (strict warnings, -O2, -fwrapv) whose generated
main embeds every argument set and prints one result per line.
"""

from __future__ import annotations

import subprocess
from pathlib import Path

from fusilli.backend import FLOAT, INT, ArrT, EmitUnit
from fusilli.cgen import CSrc, STRICT_CFLAGS

CONFORMANCE_FLAGS = [*STRICT_CFLAGS, "-O2", "-fwrapv"]


def _c_literal(typ, v) -> str:
    if typ == FLOAT:
        s = repr(float(v))
        return s if ("." in s or "e" in s) else s + ".0"
    if v is True or v is False:
        return "1" if v else "0"
    if v == -(2**31):
        return "(-2147483647 - 1)"
    return str(v)


def driver_for_sets(unit: EmitUnit, arg_sets: list[list]) -> str:
    lines = ["#include <stdio.h>", ""]
    protos = []
    for pname, ptyp in unit.params:
        if isinstance(ptyp, ArrT):
            elem = "int" if ptyp.elem == INT else "double"
            protos.append(f"{elem} *{pname}, int {pname}_len")
        else:
            protos.append(f"{'double' if ptyp == FLOAT else 'int'} {pname}")
    ret = "double" if unit.ret == FLOAT else "int"
    lines.append(f"{ret} {unit.name}({', '.join(protos) if protos else 'void'});")
    lines.append("")
    for si, args in enumerate(arg_sets):
        for (pname, ptyp), v in zip(unit.params, args):
            if isinstance(ptyp, ArrT):
                elem = "int" if ptyp.elem == INT else "double"
                vals = ", ".join(_c_literal(ptyp.elem, x) for x in v) or "0"
                lines.append(f"static {elem} s{si}_{pname}[] = {{{vals}}};")
    lines.append("")
    lines.append("int main(void) {")
    fmt = '"%.17g\\n"' if unit.ret == FLOAT else '"%d\\n"'
    for si, args in enumerate(arg_sets):
        call_args = []
        for (pname, ptyp), v in zip(unit.params, args):
            if isinstance(ptyp, ArrT):
                call_args.append(f"s{si}_{pname}")
                call_args.append(str(len(v)))
            else:
                call_args.append(_c_literal(ptyp, v))
        lines.append(f"  printf({fmt}, {unit.name}({', '.join(call_args)}));")
    lines.append("  return 0;")
    lines.append("}")
    return "\n".join(lines) + "\n"


def run_on_sets(csrc: CSrc, unit: EmitUnit, arg_sets: list[list], workdir: Path, cc: str = "gcc"):
    """Returns the list of results, one per argument set."""
    workdir.mkdir(parents=True, exist_ok=True)
    kpath = workdir / f"{csrc.fn_name}.c"
    dpath = workdir / f"{csrc.fn_name}_main.c"
    binary = workdir / f"{csrc.fn_name}.bin"
    kpath.write_text(csrc.text)
    dpath.write_text(driver_for_sets(unit, arg_sets))
    cmd = [cc, *CONFORMANCE_FLAGS, str(kpath), str(dpath), "-o", str(binary)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"compile failed:\n{proc.stderr}\n--- kernel ---\n{csrc.text}")
    out = subprocess.run([str(binary)], capture_output=True, text=True)
    if out.returncode != 0:
        raise RuntimeError(f"binary failed with status {out.returncode}")
    results = []
    for line in out.stdout.splitlines():
        results.append(float(line) if unit.ret == FLOAT else int(line))
    return results
