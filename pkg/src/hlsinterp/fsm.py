"""Hierarchical finite-state-machine lowering of task graphs.

Each control construct becomes a small machine over the input alphabet
{start, true, false, done} with an idle entry state s0:

* while:  s0 idle, s1 condition, s2 body; (s0,start)->s1, (s1,true)->s2,
  (s1,false)->s0, (s2,done)->s0 (arriving at s0 on done re-enters the
  condition; arriving on false completes the machine).
* sequence: idle plus one state per statement chained by done.
* if: idle, condition, then-state, else-state; true/false select the arm,
  both arms complete with done.
* the cyclic top-level ``loop`` has no idle of its own: its states are the
  translated body statements chained by done, the last wrapping to the first.
  One period is one full wrap.

Calls to functions with bodies inline the callee (formals become 64-bit
temporaries latched on entry and copied out on exit); calls to externs become
stubs carrying a declared state count, usable for counting and hashing but
not executable.

Execution lowers the machine onto a flat micro-op program run by the stepper
kernel (compiled when available, pure Python otherwise); the visited-state
trace reports hierarchical state paths like ``s2.s1``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Union

from . import kernel
from .errors import FlattenError, FuelExhausted, SimError, TransformError
from .lang import (
    Assign,
    Binary,
    Call,
    Expr,
    If,
    Literal,
    Ref,
    Seq,
    Stmt,
    TaskGraph,
    Unary,
    While,
    rename_stmt,
    unparse_expr,
    wrap_width,
)

SIGMA = ("start", "true", "false", "done")


@dataclass(frozen=True, eq=False)
class IdleState:
    pass


@dataclass(frozen=True, eq=False)
class ExprState:
    """Stateless computation: a condition, or an evaluate-and-discard state."""
    expr: Expr


@dataclass(frozen=True, eq=False)
class ActionState:
    target: str
    expr: Expr


@dataclass(frozen=True, eq=False)
class StubState:
    """Placeholder for a library function known only by declared state count."""
    name: str
    state_count: int


@dataclass(frozen=True, eq=False)
class Machine:
    kind: str  # 'seq' | 'while' | 'if' | 'cyclic'
    states: tuple
    delta: dict  # (state index, input symbol) -> state index
    s0: int = 0


StateLike = Union[IdleState, ExprState, ActionState, StubState, Machine]


# ---------------------------------------------------------------------------
# translation

class _Translator:
    def __init__(self, g: TaskGraph, stub_counts):
        self.g = g
        self.stub_counts = dict(stub_counts or {})
        self.call_site = 0

    def node(self, s) -> StateLike:
        if isinstance(s, Assign):
            return ActionState(s.target, s.expr)
        if isinstance(s, Expr):
            return ExprState(s)
        if isinstance(s, Seq):
            return self.seq(list(s.stmts))
        if isinstance(s, While):
            if s.cond is None:
                return self.cyclic(s.body)
            body = self.node(s.body)
            delta = {(0, "start"): 1, (1, "true"): 2, (1, "false"): 0, (2, "done"): 0}
            return Machine("while", (IdleState(), ExprState(s.cond), body), delta)
        if isinstance(s, If):
            states = [IdleState(), ExprState(s.cond), self.node(s.then)]
            delta = {(0, "start"): 1, (1, "true"): 2, (2, "done"): 0}
            if s.orelse is None:
                delta[(1, "false")] = 0
            else:
                states.append(self.node(s.orelse))
                delta[(1, "false")] = 3
                delta[(3, "done")] = 0
            return Machine("if", tuple(states), delta)
        if isinstance(s, Call):
            return self.call(s)
        raise TypeError(f"untranslatable node: {s!r}")

    def seq(self, stmts: list) -> Machine:
        children = tuple(self.node(s) for s in stmts)
        delta = {(0, "start"): 1} if children else {}
        for i in range(1, len(children) + 1):
            delta[(i, "done")] = i + 1 if i < len(children) else 0
        return Machine("seq", (IdleState(),) + children, delta)

    def cyclic(self, body) -> Machine:
        stmts = list(body.stmts) if isinstance(body, Seq) else [body]
        if not stmts:
            raise TransformError("cyclic 'loop' with an empty body never does work")
        children = tuple(self.node(s) for s in stmts)
        delta = {(i, "done"): (i + 1) % len(children) for i in range(len(children))}
        return Machine("cyclic", children, delta)

    def call(self, s: Call) -> StateLike:
        fn = self.g.functions[s.function]
        if fn.body is None:
            return StubState(s.function, int(self.stub_counts.get(s.function, 1)))
        site = self.call_site
        self.call_site += 1
        temp = {p: f"{s.function}${site}${p}" for p in fn.ins + fn.outs}
        in_args = s.args[: len(fn.ins)]
        out_args = s.args[len(fn.ins):]
        stmts: list[Stmt] = [Assign(temp[p], Ref(a)) for p, a in zip(fn.ins, in_args)]
        stmts.append(rename_stmt(fn.body, temp))
        stmts += [Assign(a, Ref(temp[p])) for p, a in zip(fn.outs, out_args)]
        return self.seq(stmts)


def translate(g: TaskGraph, stub_counts: Optional[dict] = None) -> StateLike:
    """Lower a task graph to its hierarchical state machine.

    ``stub_counts`` supplies declared state counts for extern functions
    (default 1). Total on grammar-valid graphs; the grammar excludes every
    construct without a machine equivalent.
    """
    return _Translator(g, stub_counts).node(g.root)


def translate_expr(e: Expr) -> ExprState:
    return ExprState(e)


# ---------------------------------------------------------------------------
# state counting

def state_count(node: StateLike) -> int:
    """Flattened atomic-state total; stubs contribute their declared count."""
    if isinstance(node, Machine):
        return sum(state_count(s) for s in node.states)
    if isinstance(node, StubState):
        return node.state_count
    return 1


# ---------------------------------------------------------------------------
# canonical hashing

def _collect_names(node: StateLike, order: list[str], seen: set[str]) -> None:
    def expr_names(e: Expr):
        if isinstance(e, Ref):
            if e.name not in seen:
                seen.add(e.name)
                order.append(e.name)
        elif isinstance(e, Unary):
            expr_names(e.operand)
        elif isinstance(e, Binary):
            expr_names(e.lhs)
            expr_names(e.rhs)

    if isinstance(node, Machine):
        for s in node.states:
            _collect_names(s, order, seen)
    elif isinstance(node, ExprState):
        expr_names(node.expr)
    elif isinstance(node, ActionState):
        if node.target not in seen:
            seen.add(node.target)
            order.append(node.target)
        expr_names(node.expr)


def _ser_expr(e: Expr, names: dict) -> str:
    if isinstance(e, Literal):
        return f"#{e.value}"
    if isinstance(e, Ref):
        return names[e.name]
    if isinstance(e, Unary):
        return f"({e.op} {_ser_expr(e.operand, names)})"
    if isinstance(e, Binary):
        return f"({e.op} {_ser_expr(e.lhs, names)} {_ser_expr(e.rhs, names)})"
    raise TypeError(f"not an expression node: {e!r}")


def _ser(node: StateLike, names: dict) -> str:
    if isinstance(node, IdleState):
        return "idle"
    if isinstance(node, ExprState):
        return f"(eval {_ser_expr(node.expr, names)})"
    if isinstance(node, ActionState):
        return f"(set {names[node.target]} {_ser_expr(node.expr, names)})"
    if isinstance(node, StubState):
        return f"(stub {node.name} {node.state_count})"
    inner = " ".join(_ser(s, names) for s in node.states)
    trans = ",".join(f"{i}:{sym}>{j}" for (i, sym), j in sorted(node.delta.items()))
    return f"(machine {node.kind} s0={node.s0} [{inner}] {{{trans}}})"


def canonical_serialization(node: StateLike) -> str:
    order: list[str] = []
    _collect_names(node, order, set())
    names = {n: f"i{k}" for k, n in enumerate(order)}
    return _ser(node, names)


def canonical_hash(node: StateLike) -> str:
    """Structure-sensitive digest; storage names are index-normalized so
    alpha-renamed programs hash equal while any structural difference does not."""
    return hashlib.sha256(canonical_serialization(node).encode()).hexdigest()


# ---------------------------------------------------------------------------
# deterministic dump (golden-file format)

def _describe(node: StateLike) -> str:
    if isinstance(node, IdleState):
        return "idle"
    if isinstance(node, ExprState):
        return f"cond {unparse_expr(node.expr)}"
    if isinstance(node, ActionState):
        return f"assign {node.target} = {unparse_expr(node.expr)}"
    if isinstance(node, StubState):
        return f"stub {node.name} states={node.state_count}"
    return f"machine ({node.kind})"


def _dump(node: StateLike, path: str, indent: int, lines: list[str]) -> None:
    pad = "  " * indent
    if not isinstance(node, Machine):
        lines.append(f"{pad}{path or 's0'}: {_describe(node)}")
        return
    lines.append(f"{pad}{path or 'machine'}: machine ({node.kind})")
    prefix = f"{path}." if path else ""
    for i, st in enumerate(node.states):
        _dump(st, f"{prefix}s{i}", indent + 1, lines)
    for (i, sym), j in sorted(node.delta.items()):
        lines.append(f"{pad}  {prefix}s{i} -> {sym} -> {prefix}s{j}")


def dump(node: StateLike) -> str:
    """Textual machine listing: states then one ``state -> input -> state``
    transition per line, sorted; stable across runs for golden tests."""
    lines: list[str] = []
    _dump(node, "", 0, lines)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# flattening onto the stepper kernel

class _Flattener:
    def __init__(self, widths: dict):
        self.widths = widths
        self.ops: list[list] = []          # [code, a, b, c]; pc fields hold label ids
        self.tags: list[int] = []          # visit id per op, -1 structural
        self.labels: dict[int, int] = {}
        self.next_label = 0
        self.slot_index: dict[str, int] = {}
        self.expr_code: list[int] = []     # (op, arg) pairs, flattened
        self.expr_off: list[int] = [0]
        self.consts: list[int] = []
        self.const_index: dict[int, int] = {}
        self.paths: list[str] = []

    # labels ----------------------------------------------------------------
    def label(self) -> int:
        self.next_label += 1
        return -self.next_label  # negative marks unresolved label references

    def place(self, lab: int) -> None:
        self.labels[lab] = len(self.ops)

    # pools -----------------------------------------------------------------
    def slot(self, name: str) -> int:
        if name not in self.slot_index:
            self.slot_index[name] = len(self.slot_index)
        return self.slot_index[name]

    def const(self, v: int) -> int:
        if v not in self.const_index:
            self.const_index[v] = len(self.consts)
            self.consts.append(v)
        return self.const_index[v]

    def compile_expr(self, e: Expr) -> int:
        code = self.expr_code

        def emit(node: Expr):
            if isinstance(node, Literal):
                code.extend((kernel.E_CONST, self.const(node.value)))
            elif isinstance(node, Ref):
                code.extend((kernel.E_LOAD, self.slot(node.name)))
            elif isinstance(node, Unary):
                emit(node.operand)
                code.extend((kernel.E_UNARY[node.op], 0))
            elif isinstance(node, Binary):
                emit(node.lhs)
                emit(node.rhs)
                code.extend((kernel.E_BINARY[node.op], 0))
            else:
                raise TypeError(f"not an expression node: {node!r}")

        emit(e)
        self.expr_off.append(len(code))
        return len(self.expr_off) - 2

    def visit_id(self, path: str) -> int:
        self.paths.append(path)
        return len(self.paths) - 1

    def op(self, code: int, a: int, b: int, c: int, tag: int = -1) -> None:
        self.ops.append([code, a, b, c])
        self.tags.append(tag)

    # nodes -------------------------------------------------------------------
    def node(self, node: StateLike, path: str, done: int) -> None:
        """Emit code for node; on completion control reaches label ``done``."""
        if isinstance(node, IdleState):
            raise FlattenError("idle states are structural, not executable")
        if isinstance(node, ActionState):
            self.op(kernel.OP_EXEC, self.compile_expr(node.expr),
                    self.slot(node.target), done, self.visit_id(path))
            return
        if isinstance(node, ExprState):
            self.op(kernel.OP_EXEC, self.compile_expr(node.expr), -1, done,
                    self.visit_id(path))
            return
        if isinstance(node, StubState):
            raise FlattenError(
                f"stub {node.name!r} has no body; stubs model library functions "
                "and cannot be executed")
        if not isinstance(node, Machine):
            raise FlattenError(f"cannot flatten {node!r}")
        prefix = f"{path}." if path else ""
        if node.kind == "seq":
            children = node.states[1:]
            for i, child in enumerate(children):
                nxt = done if i == len(children) - 1 else self.label()
                self.node(child, f"{prefix}s{i + 1}", nxt)
                if nxt != done:
                    self.place(nxt)
            if not children:
                self.op(kernel.OP_JUMP, done, 0, 0)
            return
        if node.kind == "while":
            cond_state, body = node.states[1], node.states[2]
            l_cond = self.label()
            l_body = self.label()
            self.place(l_cond)
            self.op(kernel.OP_BRANCH, self.compile_expr(cond_state.expr),
                    l_body, done, self.visit_id(f"{prefix}s1"))
            self.place(l_body)
            self.node(body, f"{prefix}s2", l_cond)
            return
        if node.kind == "if":
            cond_state = node.states[1]
            l_then = self.label()
            l_else = self.label() if len(node.states) > 3 else done
            self.op(kernel.OP_BRANCH, self.compile_expr(cond_state.expr),
                    l_then, l_else, self.visit_id(f"{prefix}s1"))
            self.place(l_then)
            self.node(node.states[2], f"{prefix}s2", done)
            if len(node.states) > 3:
                self.place(l_else)
                self.node(node.states[3], f"{prefix}s3", done)
            return
        if node.kind == "cyclic":
            entry = self.label()
            self.place(entry)
            if self.entry_label is None:  # only the outermost cycle defines periods
                self.entry_label = entry
            children = node.states
            for i, child in enumerate(children):
                nxt = entry if i == len(children) - 1 else self.label()
                self.node(child, f"{prefix}s{i}", nxt)
                if nxt != entry:
                    self.place(nxt)
            return
        raise FlattenError(f"unknown machine kind {node.kind!r}")

    def finish(self, root: StateLike) -> kernel.FlatProgram:
        self.entry_label = None
        end = self.label()
        root_path = "" if isinstance(root, Machine) else "s0"
        self.node(root, root_path, end)
        self.place(end)
        self.op(kernel.OP_HALT, 0, 0, 0)

        def resolve(x: int) -> int:
            return self.labels[x] if x < 0 else x

        ops = [[c, resolve(a) if c == kernel.OP_JUMP else a,
                resolve(b) if c == kernel.OP_BRANCH else b,
                resolve(cc) if c in (kernel.OP_EXEC, kernel.OP_BRANCH) else cc]
               for c, a, b, cc in self.ops]
        slot_names = [None] * len(self.slot_index)
        for name, i in self.slot_index.items():
            slot_names[i] = name
        widths = [self.widths.get(n, 64) for n in slot_names]
        cyclic_root = isinstance(root, Machine) and root.kind == "cyclic"
        entry_pc = self.labels[self.entry_label] if cyclic_root else -1
        return kernel.FlatProgram(
            ops=ops, tags=self.tags, expr_code=self.expr_code,
            expr_off=self.expr_off, consts=self.consts,
            slot_names=slot_names, widths=widths,
            paths=self.paths, entry_pc=entry_pc,
        )


def flatten(node: StateLike, widths: Optional[dict] = None) -> kernel.FlatProgram:
    return _Flattener(widths or {}).finish(node)


# ---------------------------------------------------------------------------
# execution

@dataclass
class FsmResult:
    values: dict[str, int]
    visits: list[str]
    steps: int
    periods: int = 0

    def visit_count(self, path: str) -> int:
        return self.visits.count(path)


def run_fsm(node: StateLike, env: Optional[dict] = None, fuel: int = 100_000,
            widths: Optional[dict] = None, periods: Optional[int] = None,
            record: bool = True) -> FsmResult:
    """Execute a translated machine from its idle entry over a valuation.

    Steps the transition relation from s0 on start: condition states produce
    the true/false input, action states mutate the valuation. Stops on
    completion of the outermost machine, after ``periods`` wraps of a cyclic
    machine, or raises FuelExhausted once the step budget is spent (each
    condition/action visit costs one unit).
    """
    if fuel < 1:
        raise SimError("fuel must be >= 1")
    flat = flatten(node, widths)
    if periods is not None and flat.entry_pc < 0:
        raise SimError("periods apply only to cyclic machines")
    values = [0] * len(flat.slot_names)
    env = env or {}
    for name, v in env.items():
        if name in flat.slot_names:
            values[flat.slot_names.index(name)] = v
    status, steps, periods_done, visits, values = kernel.run_flat(
        flat, values, fuel, periods or 0, record)
    if status == kernel.STATUS_FUEL:
        raise FuelExhausted(f"machine did not settle within {fuel} steps")
    out = {name: values[i] for i, name in enumerate(flat.slot_names)
           if "$" not in name}
    for name, v in env.items():
        out.setdefault(name, v)
    paths = [flat.paths[i] for i in visits] if record and visits is not None else []
    return FsmResult(out, paths, steps, periods_done)


def run_graph(g: TaskGraph, env: Optional[dict] = None, fuel: int = 100_000,
              stub_counts: Optional[dict] = None, periods: Optional[int] = None,
              record: bool = True) -> FsmResult:
    """Convenience wrapper: translate a graph and run its machine, taking
    storage widths (and zero defaults) from the graph's declarations."""
    machine = translate(g, stub_counts)
    widths = {name: d.width_bits for name, d in g.storage.items()}
    full_env = {name: 0 for name in g.storage}
    for k, v in (env or {}).items():
        full_env[k] = wrap_width(v, g.storage[k].width_bits)
    return run_fsm(machine, full_env, fuel, widths, periods, record)
