"""32-bit two's-complement integer semantics, shared by evaluator and folder.

The C emission is the normative output, so every integer operation models a
32-bit `int` with truncating division, regardless of host semantics.
"""

from __future__ import annotations

INT_MIN = -(2**31)
INT_MAX = 2**31 - 1


def wrap32(x: int) -> int:
    return ((x + 0x80000000) & 0xFFFFFFFF) - 0x80000000


def c_div(a: int, b: int) -> int:
    """Truncating division (C99 `/`); caller guards b != 0."""
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return wrap32(q)


def c_mod(a: int, b: int) -> int:
    """C99 `%`: sign follows the dividend; caller guards b != 0."""
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return a - q * b
