"""Flat stepper kernel: the hot inner loop of machine execution.

A hierarchical machine is lowered (fsm.flatten) to a flat micro-op program:

    OP_EXEC   a=expr b=target-slot|-1 c=next-pc    one atomic state
    OP_BRANCH a=expr b=true-pc c=false-pc          one condition state
    OP_JUMP   a=next-pc                            structural, free
    OP_HALT                                        machine completed

Expressions are postfix (op, arg) pairs over a constant pool and storage
slots; arithmetic is 64-bit two's complement with stores wrapped to the
target slot width. EXEC/BRANCH cost one fuel unit each and append their
state tag to the visit trace when recording.

Two interchangeable steppers implement these semantics: a Cython extension
(hlsinterp._fsmcore, built when a compiler is available) and the pure-Python
fallback below. Selection happens at import; set HLSINTERP_PURE=1 to force
the fallback. benchmarks/bench_kernel.py compares the two.
"""

from __future__ import annotations

import os
from array import array
from dataclasses import dataclass, field
from typing import Optional

OP_EXEC = 0
OP_BRANCH = 1
OP_JUMP = 2
OP_HALT = 3

E_LOAD = 1
E_CONST = 2
E_ADD = 10
E_SUB = 11
E_MUL = 12
E_SHL = 13
E_SHR = 14
E_AND = 15
E_OR = 16
E_XOR = 17
E_LT = 20
E_LE = 21
E_GT = 22
E_GE = 23
E_EQ = 24
E_NE = 25
E_NEG = 30
E_NOT = 31

E_BINARY = {"+": E_ADD, "-": E_SUB, "*": E_MUL, "<<": E_SHL, ">>": E_SHR,
            "&": E_AND, "|": E_OR, "^": E_XOR, "<": E_LT, "<=": E_LE,
            ">": E_GT, ">=": E_GE, "==": E_EQ, "!=": E_NE}
E_UNARY = {"-": E_NEG, "~": E_NOT}

STATUS_DONE = 0
STATUS_FUEL = 1
STATUS_PERIODS = 2

_U64 = (1 << 64) - 1
_BIAS = 1 << 63


@dataclass
class FlatProgram:
    ops: list            # [code, a, b, c] per op
    tags: list           # visit id per op, -1 structural
    expr_code: list      # flattened (op, arg) pairs
    expr_off: list       # expression i spans expr_code[off[i]:off[i+1]]
    consts: list
    slot_names: list
    widths: list
    paths: list          # visit id -> hierarchical state path
    entry_pc: int        # cycle entry for a cyclic root, else -1
    _bufs: Optional[tuple] = field(default=None, repr=False)

    def buffers(self) -> tuple:
        """int64 array views for the compiled stepper, built once."""
        if self._bufs is None:
            flat_ops = array("q", [v for op in self.ops for v in op])
            self._bufs = (
                flat_ops,
                array("q", self.tags),
                array("q", self.expr_code),
                array("q", self.expr_off),
                array("q", self.consts or [0]),
                array("q", self.widths or [0]),
            )
        return self._bufs


def _wrap64(v: int) -> int:
    return ((v + _BIAS) & _U64) - _BIAS


def _wrapw(v: int, w: int) -> int:
    if w >= 64:
        return _wrap64(v)
    bias = 1 << (w - 1)
    return ((v + bias) & ((1 << w) - 1)) - bias


def _eval(expr_code, start, end, consts, values, stack) -> int:
    sp = 0
    i = start
    while i < end:
        op = expr_code[i]
        arg = expr_code[i + 1]
        if op == E_LOAD:
            stack[sp] = values[arg]
            sp += 1
        elif op == E_CONST:
            stack[sp] = consts[arg]
            sp += 1
        elif op == E_NEG:
            stack[sp - 1] = _wrap64(-stack[sp - 1])
        elif op == E_NOT:
            stack[sp - 1] = _wrap64(~stack[sp - 1])
        else:
            b = stack[sp - 1]
            a = stack[sp - 2]
            sp -= 1
            if op == E_ADD:
                r = _wrap64(a + b)
            elif op == E_SUB:
                r = _wrap64(a - b)
            elif op == E_MUL:
                r = _wrap64(a * b)
            elif op == E_SHL:
                r = _wrap64(a << (b & 63))
            elif op == E_SHR:
                r = a >> (b & 63)
            elif op == E_AND:
                r = a & b
            elif op == E_OR:
                r = a | b
            elif op == E_XOR:
                r = a ^ b
            elif op == E_LT:
                r = int(a < b)
            elif op == E_LE:
                r = int(a <= b)
            elif op == E_GT:
                r = int(a > b)
            elif op == E_GE:
                r = int(a >= b)
            elif op == E_EQ:
                r = int(a == b)
            else:
                r = int(a != b)
            stack[sp - 1] = r
        i += 2
    return stack[0]


def run_flat_py(flat: FlatProgram, values: list, fuel: int, periods: int,
                record: bool):
    """Pure-Python stepper. Returns (status, steps, periods_done, visits, values)."""
    ops = flat.ops
    tags = flat.tags
    expr_off = flat.expr_off
    expr_code = flat.expr_code
    consts = flat.consts
    widths = flat.widths
    entry = flat.entry_pc
    stack = [0] * 64
    visits: Optional[list] = [] if record else None
    pc = 0
    steps = 0
    periods_done = 0
    transitions = 0
    max_transitions = fuel * 4 + 64
    first_arrival = True
    while True:
        if periods and pc == entry:
            if not first_arrival:
                periods_done += 1
                if periods_done >= periods:
                    return STATUS_PERIODS, steps, periods_done, visits, values
            first_arrival = False
        transitions += 1
        if transitions > max_transitions:
            return STATUS_FUEL, steps, periods_done, visits, values
        code, a, b, c = ops[pc]
        if code == OP_EXEC:
            if steps >= fuel:
                return STATUS_FUEL, steps, periods_done, visits, values
            steps += 1
            if record:
                visits.append(tags[pc])
            r = _eval(expr_code, expr_off[a], expr_off[a + 1], consts, values, stack)
            if b >= 0:
                values[b] = _wrapw(r, widths[b])
            pc = c
        elif code == OP_BRANCH:
            if steps >= fuel:
                return STATUS_FUEL, steps, periods_done, visits, values
            steps += 1
            if record:
                visits.append(tags[pc])
            r = _eval(expr_code, expr_off[a], expr_off[a + 1], consts, values, stack)
            pc = b if r != 0 else c
        elif code == OP_JUMP:
            pc = a
        else:  # OP_HALT
            return STATUS_DONE, steps, periods_done, visits, values


# ---------------------------------------------------------------------------
# kernel selection

_fsmcore = None
if not os.environ.get("HLSINTERP_PURE"):
    try:
        from . import _fsmcore  # type: ignore[attr-defined]
    except ImportError:
        _fsmcore = None

HAVE_COMPILED = _fsmcore is not None


def kernel_name() -> str:
    return "compiled" if HAVE_COMPILED else "pure-python"


def run_flat(flat: FlatProgram, values: list, fuel: int, periods: int,
             record: bool):
    """Run with the selected stepper; see run_flat_py for the contract."""
    if _fsmcore is None:
        return run_flat_py(flat, values, fuel, periods, record)
    ops, tags, expr_code, expr_off, consts, widths = flat.buffers()
    vbuf = array("q", values)
    status, steps, periods_done, visits = _fsmcore.run_flat(
        ops, tags, expr_code, expr_off, consts, widths, vbuf,
        fuel, flat.entry_pc, periods, record)
    return status, steps, periods_done, visits, list(vbuf)
