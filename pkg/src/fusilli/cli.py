"""Command-line entry point: compile pipeline files to C, check them, bench.

Environment variables FUSILLI_CC, FUSILLI_CFLAGS, FUSILLI_SCALE, FUSILLI_CSV
and FUSILLI_BASELINE_DIR provide defaults for the flags of the same names.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .bench import DEFAULT_CFLAGS, BenchError, run_bench
from .pipeline import PipelineError, check_pipeline, compile_to_c, from_json, parse_pipeline
from .suite import SUITE_NAMES


def _load_desc(path: str):
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".json") or text.lstrip().startswith("{"):
        return from_json(text)
    return parse_pipeline(text)


def _cmd_compile(args) -> int:
    desc = _load_desc(args.file)
    csrc = compile_to_c(desc)
    if args.output == "-":
        sys.stdout.write(csrc.text)
    else:
        with open(args.output, "w") as fh:
            fh.write(csrc.text)
        print(f"wrote {args.output} ({csrc.signature})")
    return 0


def _cmd_check(args) -> int:
    desc = _load_desc(args.file)
    result = check_pipeline(desc)
    nparams = len(desc.params)
    print(f"{desc.name}: ok ({nparams} param{'s' if nparams != 1 else ''}, result type {result})")
    return 0


def _cmd_bench(args) -> int:
    names = None if args.suite == "all" else [args.suite]
    run_bench(
        names=names,
        scale=args.scale,
        cc=args.cc,
        cflags=args.cflags,
        iterations=args.iterations,
        baseline_dir=args.baseline_dir,
        csv_path=args.csv,
        emit_dir=args.emit_dir,
        emit_only=args.emit_only,
    )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fusilli",
        description="Compile declarative stream pipelines into single fused C loops.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_compile = sub.add_parser("compile", help="compile a pipeline file to a C translation unit")
    p_compile.add_argument("file", help="pipeline description (.pipeline text or .json)")
    p_compile.add_argument("-o", "--output", default="-", help="output path (default: stdout)")
    p_compile.set_defaults(fn=_cmd_compile)

    p_check = sub.add_parser("check", help="parse and type-check a pipeline file")
    p_check.add_argument("file")
    p_check.set_defaults(fn=_cmd_check)

    p_bench = sub.add_parser("bench", help="run the benchmark suite")
    p_bench.add_argument(
        "--suite",
        default="all",
        choices=["all", *SUITE_NAMES],
        help="which pipeline to run (default: all)",
    )
    p_bench.add_argument(
        "--scale",
        type=float,
        default=float(os.environ.get("FUSILLI_SCALE", "0.1")),
        help="input-size factor relative to the full-size suite (default 0.1)",
    )
    p_bench.add_argument("--cc", default=os.environ.get("FUSILLI_CC", "cc"))
    p_bench.add_argument("--cflags", default=os.environ.get("FUSILLI_CFLAGS", DEFAULT_CFLAGS))
    p_bench.add_argument("--iterations", type=int, default=20)
    p_bench.add_argument("--csv", default=os.environ.get("FUSILLI_CSV"))
    p_bench.add_argument(
        "--baseline-dir",
        default=os.environ.get("FUSILLI_BASELINE_DIR"),
        help="directory of hand-fused baseline kernels (<name>.c); skipped when absent",
    )
    p_bench.add_argument("--emit-dir", help="also write each generated kernel here")
    p_bench.add_argument(
        "--emit-only", action="store_true", help="emit kernels and fusion-scan them; no compiling or timing"
    )
    p_bench.set_defaults(fn=_cmd_bench)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (PipelineError, BenchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
