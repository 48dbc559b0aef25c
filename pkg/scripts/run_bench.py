#!/usr/bin/env python3
"""Convenience wrapper: run the full benchmark suite and write bench.csv.

Equivalent to `fusilli bench --csv bench.csv [...]`; flags pass through.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fusilli.cli import main

if __name__ == "__main__":
    argv = ["bench", "--csv", "bench.csv", *sys.argv[1:]]
    sys.exit(main(argv))
