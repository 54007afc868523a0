"""Tseitin bit-blasting of fixed-width two's-complement expressions to CNF.

Literals are DIMACS integers; a word is a list of literals, LSB first.
Clauses go to ``ctx.sink`` so the caller decides how they reach a solver
(plain, or guarded by an activation literal).
"""
from __future__ import annotations

from typing import NamedTuple

from . import syntax as syn
from .syntax import BOOL


class SsaName(NamedTuple):
    base: str
    frame: int
    version: int

    def __str__(self):
        return f"{self.base}@{self.frame}#{self.version}"


class UnsupportedWidth(Exception):
    pass


class EncodingError(Exception):
    pass


MIN_WIDTH, MAX_WIDTH = 4, 64
_MISSING = object()


class LayeredMemo:
    """Write-once map whose lookups fall through to a frozen parent layer.

    Paths forked from a common prefix share the prefix's layers and write
    only to their own newest layer; hits from older layers are cached.
    """
    __slots__ = ("parent", "data")

    def __init__(self, parent=None):
        self.parent = parent
        self.data = {}

    def get(self, key, default=None):
        v = self.data.get(key, _MISSING)
        if v is not _MISSING:
            return v
        layer = self.parent
        while layer is not None:
            v = layer.data.get(key, _MISSING)
            if v is not _MISSING:
                self.data[key] = v
                return v
            layer = layer.parent
        return default

    def __contains__(self, key):
        return self.get(key, _MISSING) is not _MISSING

    def __setitem__(self, key, value):
        self.data[key] = value

    def child(self):
        return LayeredMemo(self)


class EncodingContext:
    def __init__(self, width, new_var, sink=None, memo=None, fold=True, true_lit=None):
        if not MIN_WIDTH <= width <= MAX_WIDTH:
            raise UnsupportedWidth(f"integer width {width} outside {MIN_WIDTH}..{MAX_WIDTH}")
        self.width = width
        self.new_var = new_var
        self.sink = sink if sink is not None else []
        self.memo = memo if memo is not None else {}
        self.fold = fold
        if true_lit is None:
            true_lit = new_var()
            self.sink.append([true_lit])
        self.T = true_lit
        self.F = -true_lit

    def view(self, memo):
        """Same allocator, sink and constants; different memo."""
        return EncodingContext(self.width, self.new_var, self.sink, memo, self.fold, self.T)

    def emit(self, *clause):
        self.sink.append(list(clause))

    # -- gates --

    def _is_const(self, x):
        return self.fold and (x == self.T or x == self.F)

    def AND(self, a, b):
        T, F = self.T, self.F
        if self.fold:
            if a == F or b == F or a == -b:
                return F
            if a == T or a == b:
                return b
            if b == T:
                return a
        g = self.new_var()
        self.emit(-g, a)
        self.emit(-g, b)
        self.emit(g, -a, -b)
        return g

    def OR(self, a, b):
        return -self.AND(-a, -b)

    def XOR(self, a, b):
        T, F = self.T, self.F
        if self.fold:
            if a == F:
                return b
            if b == F:
                return a
            if a == T:
                return -b
            if b == T:
                return -a
            if a == b:
                return F
            if a == -b:
                return T
        g = self.new_var()
        self.emit(-g, a, b)
        self.emit(-g, -a, -b)
        self.emit(g, -a, b)
        self.emit(g, a, -b)
        return g

    def MUX(self, s, t, e):
        """s ? t : e"""
        if self.fold:
            if s == self.T or t == e:
                return t
            if s == self.F:
                return e
        g = self.new_var()
        self.emit(-s, -t, g)
        self.emit(-s, t, -g)
        self.emit(s, -e, g)
        self.emit(s, e, -g)
        # redundant but helps propagation
        self.emit(-t, -e, g)
        self.emit(t, e, -g)
        return g

    def MAJ(self, a, b, c):
        if self.fold:
            if a == b:
                return a
            if a == -b:
                return c
            if a == c:
                return a
            if a == -c:
                return b
            if b == c:
                return b
            if b == -c:
                return a
            for x, y, z in ((a, b, c), (b, a, c), (c, a, b)):
                if x == self.T:
                    return self.OR(y, z)
                if x == self.F:
                    return self.AND(y, z)
        g = self.new_var()
        self.emit(-a, -b, g)
        self.emit(-a, -c, g)
        self.emit(-b, -c, g)
        self.emit(a, b, -g)
        self.emit(a, c, -g)
        self.emit(b, c, -g)
        return g

    def AND_ALL(self, lits):
        acc = self.T
        for x in lits:
            acc = self.AND(acc, x)
        return acc

    # -- words --

    def const(self, value):
        return [self.T if (value >> i) & 1 else self.F for i in range(self.width)]

    def fresh_word(self):
        return [self.new_var() for _ in range(self.width)]

    def add(self, a, b, cin=None):
        c = self.F if cin is None else cin
        out = []
        for x, y in zip(a, b):
            t = self.XOR(x, y)
            out.append(self.XOR(t, c))
            c = self.MAJ(x, y, c)
        return out, c

    def neg(self, a):
        return self.add([-x for x in a], self.const(0), self.T)[0]

    def sub(self, a, b):
        return self.add(a, [-x for x in b], self.T)[0]

    def mul(self, a, b):
        W = len(a)
        acc = [self.AND(x, b[0]) for x in a]
        for i in range(1, W):
            row = [self.F] * i + [self.AND(a[j], b[i]) for j in range(W - i)]
            acc = self.add(acc, row)[0]
        return acc

    def ult(self, a, b):
        # a < b  iff  a - b borrows, i.e. no carry out of a + ~b + 1
        c = self.T
        for x, y in zip(a, b):
            c = self.MAJ(x, -y, c)
        return -c

    def slt(self, a, b):
        return self.ult(a[:-1] + [-a[-1]], b[:-1] + [-b[-1]])

    def eq(self, a, b):
        return self.AND_ALL([-self.XOR(x, y) for x, y in zip(a, b)])

    def udivmod(self, a, b):
        """Restoring unsigned division of equal-width words."""
        W = len(a)
        rem = [self.F] * W
        quot = [self.F] * W
        bx = b + [self.F]
        for i in range(W - 1, -1, -1):
            shifted = [a[i]] + rem  # W + 1 bits
            diff, carry = self.add(shifted, [-x for x in bx], self.T)
            quot[i] = carry  # carry out means shifted >= b
            rem = [self.MUX(carry, d, s) for d, s in zip(diff[:W], shifted[:W])]
        return quot, rem

    def sdivmod(self, a, b):
        sa, sb = a[-1], b[-1]
        abs_a = [self.MUX(sa, n, x) for n, x in zip(self.neg(a), a)]
        abs_b = [self.MUX(sb, n, x) for n, x in zip(self.neg(b), b)]
        uq, ur = self.udivmod(abs_a, abs_b)
        qsign = self.XOR(sa, sb)
        q = [self.MUX(qsign, n, x) for n, x in zip(self.neg(uq), uq)]
        r = [self.MUX(sa, n, x) for n, x in zip(self.neg(ur), ur)]
        nonzero = -self.eq(b, self.const(0))
        return [self.AND(nonzero, x) for x in q], [self.AND(nonzero, x) for x in r]

    def _shift_bits(self, b):
        W = self.width
        nbits = max(1, (W - 1).bit_length())
        if W & (W - 1) == 0:
            return b[:nbits]
        _, r = self.udivmod(b, self.const(W))
        return r[:nbits]

    def shift(self, a, b, left):
        W = self.width
        cur = list(a)
        sign = a[-1]
        for k, s in enumerate(self._shift_bits(b)):
            sh = 1 << k
            if left:
                moved = ([self.F] * sh + cur[:W - sh]) if sh < W else [self.F] * W
            else:
                moved = (cur[sh:] + [sign] * sh) if sh < W else [sign] * W
            cur = [self.MUX(s, m, c) for m, c in zip(moved, cur)]
        return cur

    # -- expressions --

    def lookup(self, name: SsaName, ty):
        v = self.memo.get(name, _MISSING)
        if v is not _MISSING:
            return v
        if name.version == 0:
            v = self.F if ty == BOOL else self.const(0)
            self.memo[name] = v
            return v
        raise EncodingError(f"{name} used before its definition was encoded")

    def encode(self, e):
        """Word (int) or literal (bool) for a pure SSA expression."""
        if isinstance(e, syn.IntLit):
            return self.const(e.value)
        if isinstance(e, syn.BoolLit):
            return self.T if e.value else self.F
        if isinstance(e, syn.Var):
            return self.lookup(e.name, e.ty)
        key = ("e", e)
        hit = self.memo.get(key, _MISSING)
        if hit is not _MISSING:
            return hit
        if isinstance(e, syn.Unary):
            x = self.encode(e.operand)
            if e.op == "!":
                out = -x
            elif e.op == "~":
                out = [-b for b in x]
            elif e.op == "-":
                out = self.neg(x)
            else:
                raise EncodingError(f"unknown unary operator {e.op!r}")
        elif isinstance(e, syn.Binary):
            out = self._binary(e.op, self.encode(e.left), self.encode(e.right), e.left.ty)
        else:
            raise EncodingError(f"cannot encode {e!r}")
        self.memo[key] = out
        return out

    def _binary(self, op, a, b, operand_ty):
        if operand_ty == BOOL:
            if op in ("&", "&&"):
                return self.AND(a, b)
            if op in ("|", "||"):
                return self.OR(a, b)
            if op in ("^", "!="):
                return self.XOR(a, b)
            if op == "==":
                return -self.XOR(a, b)
            raise EncodingError(f"operator {op!r} on bool")
        if op == "+":
            return self.add(a, b)[0]
        if op == "-":
            return self.sub(a, b)
        if op == "*":
            return self.mul(a, b)
        if op == "/":
            return self.sdivmod(a, b)[0]
        if op == "%":
            return self.sdivmod(a, b)[1]
        if op == "<<":
            return self.shift(a, b, left=True)
        if op == ">>":
            return self.shift(a, b, left=False)
        if op == "&":
            return [self.AND(x, y) for x, y in zip(a, b)]
        if op == "|":
            return [self.OR(x, y) for x, y in zip(a, b)]
        if op == "^":
            return [self.XOR(x, y) for x, y in zip(a, b)]
        if op == "<":
            return self.slt(a, b)
        if op == ">":
            return self.slt(b, a)
        if op == "<=":
            return -self.slt(b, a)
        if op == ">=":
            return -self.slt(a, b)
        if op == "==":
            return self.eq(a, b)
        if op == "!=":
            return -self.eq(a, b)
        raise EncodingError(f"unknown binary operator {op!r}")

    def encode_def(self, name: SsaName, expr):
        if name in self.memo:
            raise EncodingError(f"{name} is already encoded")
        if isinstance(expr, syn.Nondet):
            value = self.new_var() if expr.kind == BOOL else self.fresh_word()
        else:
            value = self.encode(expr)
        self.memo[name] = value

    def encode_bool(self, expr) -> int:
        lit = self.encode(expr)
        if not isinstance(lit, int):
            raise EncodingError("expected a bool expression")
        return lit


def decode_word(bits, value_of) -> int:
    """Signed integer of a word under a literal valuation ``value_of(lit)``."""
    v = 0
    for i, b in enumerate(bits):
        if value_of(b):
            v |= 1 << i
    if value_of(bits[-1]):
        v -= 1 << len(bits)
    return v
