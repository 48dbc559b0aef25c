"""Checks over the optional hand-fused baseline kernels, when present.

The fusion scanner must accept genuinely hand-fused code, and the kernels
must build cleanly at the same warning level as generated code.
"""

import subprocess
from pathlib import Path

import pytest

from fusilli.cgen import STRICT_CFLAGS, fusion_scan
from fusilli.suite import SUITE_NAMES

BASELINE_DIR = Path(__file__).resolve().parents[1] / "baselines"

pytestmark = pytest.mark.skipif(
    not BASELINE_DIR.is_dir(), reason="baseline component not built"
)


@pytest.mark.parametrize("name", SUITE_NAMES)
def test_baseline_kernel_is_fully_fused(name):
    path = BASELINE_DIR / f"{name}.c"
    assert path.exists(), f"missing baseline kernel {path.name}"
    report = fusion_scan(path.read_text(), fn_name=name)
    assert (report.calls, report.allocs, report.aggregates) == (0, 0, 0), str(report)


@pytest.mark.parametrize("name", SUITE_NAMES)
def test_baseline_kernel_compiles_warning_free(name, tmp_path):
    path = BASELINE_DIR / f"{name}.c"
    proc = subprocess.run(
        ["cc", *STRICT_CFLAGS, "-O3", "-fwrapv", "-c", str(path), "-o", str(tmp_path / "k.o")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr


def test_runtime_header_provides_only_timing_and_checksum(tmp_path):
    header = BASELINE_DIR / "fusilli_rt.h"
    assert header.exists()
    probe = tmp_path / "probe.c"
    probe.write_text(
        '#include "fusilli_rt.h"\n'
        "#include <stdio.h>\n"
        "int main(void) {\n"
        "  long long t0, t1, acc = 0;\n"
        "  FUSILLI_NOW_NS(t0);\n"
        "  FUSILLI_CHECKSUM(acc, 41);\n"
        "  FUSILLI_CHECKSUM(acc, 1);\n"
        "  FUSILLI_NOW_NS(t1);\n"
        '  printf("%lld %d\\n", acc, t1 >= t0);\n'
        "  return 0;\n"
        "}\n"
    )
    binary = tmp_path / "probe"
    proc = subprocess.run(
        ["cc", *STRICT_CFLAGS, f"-I{BASELINE_DIR}", str(probe), "-o", str(binary)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    out = subprocess.run([str(binary)], capture_output=True, text=True).stdout.split()
    assert out == ["42", "1"]
