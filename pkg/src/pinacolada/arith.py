"""Native fixed-width two's-complement arithmetic.

This is the reference semantics shared by the concrete interpreters and by
constant folding. The bit-blaster implements the same table independently.
"""


def wrap(value: int, width: int) -> int:
    """Reduce ``value`` to a signed ``width``-bit integer."""
    mask = (1 << width) - 1
    value &= mask
    if value >> (width - 1):
        value -= 1 << width
    return value


def to_unsigned(value: int, width: int) -> int:
    return value & ((1 << width) - 1)


def div_mod_semantics(a: int, b: int, width: int) -> tuple[int, int]:
    """Truncated signed division; division by zero yields ``(0, 0)``."""
    a = wrap(a, width)
    b = wrap(b, width)
    if b == 0:
        return 0, 0
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    r = a - b * q
    return wrap(q, width), wrap(r, width)


def shift_amount(b: int, width: int) -> int:
    return to_unsigned(b, width) % width


def binary_op(op: str, a, b, width: int):
    """Evaluate a binary operator on already-wrapped operands."""
    if op == "+":
        return wrap(a + b, width)
    if op == "-":
        return wrap(a - b, width)
    if op == "*":
        return wrap(a * b, width)
    if op == "/":
        return div_mod_semantics(a, b, width)[0]
    if op == "%":
        return div_mod_semantics(a, b, width)[1]
    if op == "<<":
        return wrap(a << shift_amount(b, width), width)
    if op == ">>":
        # Python's >> on negative ints is already arithmetic
        return wrap(a >> shift_amount(b, width), width)
    if op == "&":
        return wrap(a & b, width) if not isinstance(a, bool) else a and b
    if op == "|":
        return wrap(a | b, width) if not isinstance(a, bool) else a or b
    if op == "^":
        return wrap(a ^ b, width) if not isinstance(a, bool) else a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if op == "&&":
        return a and b
    if op == "||":
        return a or b
    raise ValueError(f"unknown binary operator {op!r}")


def unary_op(op: str, a, width: int):
    if op == "-":
        return wrap(-a, width)
    if op == "~":
        return wrap(~a, width)
    if op == "!":
        return not a
    raise ValueError(f"unknown unary operator {op!r}")
