#!/usr/bin/env python3
"""Baseline test harness.

`diff`   -- build every baseline kernel warning-free, obtain the generated
            kernels through the fusilli CLI, and check differential equality
            on 100 random input sets per benchmark (both binaries must print
            identical results).
`parity` -- run `fusilli bench` with this directory as the baseline source
            at --scale 0.1 / -O3 and require the generated variant's mean
            time to stay within 1.2x of the baseline's, per benchmark.

The harness talks to fusilli only through its command line and the kernel
ABI; it never imports the package.
"""

import csv
import subprocess
import sys
import tempfile
from pathlib import Path

HERE = Path(__file__).resolve().parent
CFLAGS = ["-std=c99", "-Wall", "-Wextra", "-Wpedantic", "-Werror", "-O3", "-fwrapv"]

SHAPES = {
    "sum": "SHAPE1",
    "sumOfSquares": "SHAPE1",
    "maps": "SHAPE1",
    "filters": "SHAPE1",
    "dotProduct": "SHAPE2",
    "flatMapAfterZip": "SHAPE2",
    "zipWithAfterFlatMap": "SHAPE2",
    "flatMapTake": "SHAPE2N",
    "zipFilterFilter": "SHAPE2",
    "zipFlatMapFlatMap": "SHAPE2",
    "runLengthDecoding": "SHAPE2",
}
COUNT_ARRAYS = {"runLengthDecoding"}
FUSILLI = [sys.executable, "-m", "fusilli.cli"]


def run(cmd, **kw):
    proc = subprocess.run(cmd, capture_output=True, text=True, **kw)
    if proc.returncode != 0:
        sys.exit(f"command failed: {' '.join(map(str, cmd))}\n{proc.stdout}{proc.stderr}")
    return proc.stdout


def emit_generated(outdir: Path) -> None:
    run([*FUSILLI, "bench", "--emit-only", "--emit-dir", str(outdir)])


def build_diff_binary(kernel: Path, name: str, out: Path) -> None:
    defines = [f"-DKERNEL={name}", f"-D{SHAPES[name]}"]
    if name in COUNT_ARRAYS:
        defines.append("-DCOUNTS")
    run(
        [
            "cc",
            *CFLAGS,
            *defines,
            f"-I{HERE}",
            str(kernel),
            str(HERE / "diff_driver.c"),
            "-o",
            str(out),
        ]
    )


def cmd_diff() -> None:
    failures = []
    with tempfile.TemporaryDirectory(prefix="fusilli-diff-") as tmp:
        tmpdir = Path(tmp)
        gen_dir = tmpdir / "generated"
        emit_generated(gen_dir)
        for name in SHAPES:
            base_src = HERE / f"{name}.c"
            gen_src = gen_dir / f"{name}.c"
            if not base_src.exists():
                failures.append(f"{name}: missing baseline kernel")
                continue
            bin_base = tmpdir / f"{name}.base"
            bin_gen = tmpdir / f"{name}.gen"
            build_diff_binary(base_src, name, bin_base)
            build_diff_binary(gen_src, name, bin_gen)
            out_base = run([str(bin_base)])
            out_gen = run([str(bin_gen)])
            if out_base != out_gen:
                failures.append(f"{name}: differential mismatch")
                print(f"{name}: FAIL")
            else:
                sets = len(out_base.splitlines()) - 1
                print(f"{name}: identical on {sets} random input sets")
    if failures:
        sys.exit("\n".join(failures))
    print("differential equality: all kernels PASS")


def cmd_parity(scale: str = "0.1") -> None:
    with tempfile.TemporaryDirectory(prefix="fusilli-parity-") as tmp:
        csv_path = Path(tmp) / "parity.csv"
        run(
            [
                *FUSILLI,
                "bench",
                "--scale",
                scale,
                "--iterations",
                "40",
                "--baseline-dir",
                str(HERE),
                "--csv",
                str(csv_path),
            ]
        )
        rows = list(csv.DictReader(csv_path.open()))
    by_name: dict = {}
    for row in rows:
        by_name.setdefault(row["name"], {})[row["variant"]] = row
    failures = []
    for name, variants in sorted(by_name.items()):
        if "baseline" not in variants:
            failures.append(f"{name}: no baseline variant was timed")
            continue
        gen = float(variants["generated"]["mean_ms"])
        base = float(variants["baseline"]["mean_ms"])
        ratio = gen / base if base > 0 else float("inf")
        verdict = "ok" if ratio <= 1.2 else "SLOW"
        print(f"{name}: generated {gen:.3f} ms vs baseline {base:.3f} ms (x{ratio:.2f}) {verdict}")
        if ratio > 1.2:
            failures.append(f"{name}: generated/baseline ratio {ratio:.2f} exceeds 1.2")
    if failures:
        sys.exit("\n".join(failures))
    print("baseline parity: all kernels within 1.2x")


def main() -> None:
    mode = sys.argv[1] if len(sys.argv) > 1 else "diff"
    if mode == "diff":
        cmd_diff()
    elif mode == "parity":
        cmd_parity(*sys.argv[2:3])
    else:
        sys.exit(f"unknown mode {mode!r} (use diff or parity)")


if __name__ == "__main__":
    main()
