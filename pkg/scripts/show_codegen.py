#!/usr/bin/env python3
"""Print the generated C for the two walkthrough pipelines, then execute the
first one in-process for a quick sanity check."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fusilli import Backend, build_unit, compile_to_c, eval_count, fusion_scan, parse_pipeline

ROOT = Path(__file__).resolve().parents[1]


def show(path: Path) -> None:
    desc = parse_pipeline(path.read_text())
    csrc = compile_to_c(desc)
    print(f"=== {desc.name} ===")
    print(csrc.text)
    print(fusion_scan(csrc))
    print()


def main() -> None:
    show(ROOT / "pipelines" / "ex2.pipeline")
    show(ROOT / "pipelines" / "dot_product.pipeline")

    desc = parse_pipeline((ROOT / "pipelines" / "ex2.pipeline").read_text())
    unit = build_unit(desc, Backend())
    value, steps = eval_count(unit)
    print(f"ex2 evaluates to {value} in {steps} main-loop steps")


if __name__ == "__main__":
    main()
