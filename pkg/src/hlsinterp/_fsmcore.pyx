# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepper kernel. Mirrors kernel.run_flat_py exactly: 64-bit
two's-complement arithmetic, width-wrapped stores, one fuel unit per
condition/action state. Opcode values match kernel.py."""

ctypedef long long i64
ctypedef unsigned long long u64

cdef enum:
    OP_EXEC = 0
    OP_BRANCH = 1
    OP_JUMP = 2
    OP_HALT = 3

cdef enum:
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

cdef enum:
    STATUS_DONE = 0
    STATUS_FUEL = 1
    STATUS_PERIODS = 2


cdef inline i64 wrapw(i64 v, i64 w) noexcept:
    cdef u64 m, x
    if w >= 64:
        return v
    m = (<u64>1) << w
    x = (<u64>v) & (m - 1)
    if x >= ((<u64>1) << (w - 1)):
        return <i64>(x - m)
    return <i64>x


cdef i64 eval_expr(const i64[:] code, Py_ssize_t start, Py_ssize_t end,
                   const i64[:] consts, i64[:] values, i64* stack) noexcept:
    cdef Py_ssize_t sp = 0, i = start
    cdef i64 op, arg, va, vb, r
    while i < end:
        op = code[i]
        arg = code[i + 1]
        if op == E_LOAD:
            stack[sp] = values[arg]
            sp += 1
        elif op == E_CONST:
            stack[sp] = consts[arg]
            sp += 1
        elif op == E_NEG:
            stack[sp - 1] = <i64>(0 - <u64>stack[sp - 1])
        elif op == E_NOT:
            stack[sp - 1] = <i64>(~(<u64>stack[sp - 1]))
        else:
            vb = stack[sp - 1]
            va = stack[sp - 2]
            sp -= 1
            if op == E_ADD:
                r = <i64>((<u64>va) + (<u64>vb))
            elif op == E_SUB:
                r = <i64>((<u64>va) - (<u64>vb))
            elif op == E_MUL:
                r = <i64>((<u64>va) * (<u64>vb))
            elif op == E_SHL:
                r = <i64>((<u64>va) << ((<u64>vb) & 63))
            elif op == E_SHR:
                r = va >> ((<u64>vb) & 63)
            elif op == E_AND:
                r = va & vb
            elif op == E_OR:
                r = va | vb
            elif op == E_XOR:
                r = va ^ vb
            elif op == E_LT:
                r = 1 if va < vb else 0
            elif op == E_LE:
                r = 1 if va <= vb else 0
            elif op == E_GT:
                r = 1 if va > vb else 0
            elif op == E_GE:
                r = 1 if va >= vb else 0
            elif op == E_EQ:
                r = 1 if va == vb else 0
            else:
                r = 1 if va != vb else 0
            stack[sp - 1] = r
        i += 2
    return stack[0]


def run_flat(const i64[:] ops, const i64[:] tags, const i64[:] expr_code,
             const i64[:] expr_off, const i64[:] consts, const i64[:] widths,
             i64[:] values, i64 fuel, i64 entry, i64 periods, bint record):
    """Returns (status, steps, periods_done, visits-or-None); values mutated."""
    cdef i64 stack[64]
    cdef Py_ssize_t pc = 0
    cdef i64 steps = 0, periods_done = 0, transitions = 0
    cdef i64 max_transitions = fuel * 4 + 64
    cdef i64 code, a, b, c, r
    cdef bint first_arrival = True
    visits = [] if record else None
    while True:
        if periods != 0 and pc == entry:
            if not first_arrival:
                periods_done += 1
                if periods_done >= periods:
                    return STATUS_PERIODS, steps, periods_done, visits
            first_arrival = False
        transitions += 1
        if transitions > max_transitions:
            return STATUS_FUEL, steps, periods_done, visits
        code = ops[4 * pc]
        a = ops[4 * pc + 1]
        b = ops[4 * pc + 2]
        c = ops[4 * pc + 3]
        if code == OP_EXEC:
            if steps >= fuel:
                return STATUS_FUEL, steps, periods_done, visits
            steps += 1
            if record:
                visits.append(tags[pc])
            r = eval_expr(expr_code, expr_off[a], expr_off[a + 1], consts, values, stack)
            if b >= 0:
                values[b] = wrapw(r, widths[b])
            pc = <Py_ssize_t>c
        elif code == OP_BRANCH:
            if steps >= fuel:
                return STATUS_FUEL, steps, periods_done, visits
            steps += 1
            if record:
                visits.append(tags[pc])
            r = eval_expr(expr_code, expr_off[a], expr_off[a + 1], consts, values, stack)
            pc = <Py_ssize_t>b if r != 0 else <Py_ssize_t>c
        elif code == OP_JUMP:
            pc = <Py_ssize_t>a
        else:
            return STATUS_DONE, steps, periods_done, visits
