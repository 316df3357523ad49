"""Source-level optimization passes over task graphs.

Both passes model the transformations that make a function variant cheaper:
loop perforation scales the step of a counted loop so fewer iterations run,
and arithmetic reduction shrinks expression work (constant folding, algebraic
identities, strength reduction to shifts, and common-subexpression sharing).
Semantics are preserved; the co-evaluation property tests in the suite check
this against the reference evaluator.
"""

from __future__ import annotations

from .errors import TransformError
from .lang import (
    Assign,
    Binary,
    Expr,
    If,
    Literal,
    Ref,
    Seq,
    Stmt,
    TaskGraph,
    Unary,
    While,
    collect_loops,
    eval_expr,
    map_exprs,
    wrap64,
)

# ---------------------------------------------------------------------------
# loop perforation

def _induction_parts(loop: While):
    """Return (var, limit, incr-assign, step) for the canonical counted form
    ``while (v < limit) { ...; v = v + step; }`` or None."""
    if loop.cond is None:
        return None
    cond = loop.cond
    if not (isinstance(cond, Binary) and cond.op == "<" and isinstance(cond.lhs, Ref)):
        return None
    var = cond.lhs.name
    last = loop.body.stmts[-1] if isinstance(loop.body, Seq) else loop.body
    if not (isinstance(last, Assign) and last.target == var):
        return None
    rhs = last.expr
    if not (isinstance(rhs, Binary) and rhs.op == "+"
            and isinstance(rhs.lhs, Ref) and rhs.lhs.name == var
            and isinstance(rhs.rhs, Literal) and rhs.rhs.value >= 1):
        return None
    return var, cond.rhs, last, rhs.rhs.value


def _replace_stmt(s: Stmt, old: Stmt, new: Stmt) -> Stmt:
    if s is old:
        return new
    if isinstance(s, Seq):
        return Seq(tuple(_replace_stmt(sub, old, new) for sub in s.stmts))
    if isinstance(s, While):
        return While(s.cond, _replace_stmt(s.body, old, new))
    if isinstance(s, If):
        orelse = None if s.orelse is None else _replace_stmt(s.orelse, old, new)
        return If(s.cond, _replace_stmt(s.then, old, new), orelse)
    return s


def loop_perforate(g: TaskGraph, loop_id: int, factor: int) -> TaskGraph:
    """Multiply the induction step of the loop_id-th loop (pre-order) by factor.

    Only the canonical counted pattern is accepted; anything else raises
    TransformError rather than silently skipping the loop.
    """
    if factor < 2:
        raise TransformError(f"perforation factor must be >= 2, got {factor}")
    loops = collect_loops(g)
    if not 0 <= loop_id < len(loops):
        raise TransformError(f"loop {loop_id} not found (graph has {len(loops)} loops)")
    loop = loops[loop_id]
    parts = _induction_parts(loop)
    if parts is None:
        raise TransformError(f"loop {loop_id} does not match the counted-loop pattern "
                             "(while (v < limit) { ...; v = v + step; })")
    var, _limit, incr, step = parts
    new_incr = Assign(var, Binary("+", Ref(var), Literal(wrap64(step * factor))))
    if isinstance(loop.body, Seq):
        new_body: Stmt = Seq(loop.body.stmts[:-1] + (new_incr,))
    else:
        new_body = new_incr
    new_loop = While(loop.cond, new_body)
    return TaskGraph(dict(g.storage), dict(g.functions),
                     _replace_stmt(g.root, loop, new_loop))


# ---------------------------------------------------------------------------
# arithmetic reduction

def _is_const(e: Expr, value=None) -> bool:
    return isinstance(e, Literal) and (value is None or e.value == value)


def _pow2_exponent(v: int):
    if v >= 2 and (v & (v - 1)) == 0:
        return v.bit_length() - 1
    return None


def _simplify(e: Expr) -> Expr:
    """One bottom-up folding/identity pass. Exact under 64-bit wrap semantics."""
    if isinstance(e, Unary):
        inner = _simplify(e.operand)
        if _is_const(inner):
            return Literal(eval_expr(Unary(e.op, inner), {}))
        return Unary(e.op, inner)
    if not isinstance(e, Binary):
        return e
    lhs = _simplify(e.lhs)
    rhs = _simplify(e.rhs)
    op = e.op
    if _is_const(lhs) and _is_const(rhs):
        return Literal(eval_expr(Binary(op, lhs, rhs), {}))
    if op == "+":
        if _is_const(rhs, 0):
            return lhs
        if _is_const(lhs, 0):
            return rhs
    elif op == "-":
        if _is_const(rhs, 0):
            return lhs
    elif op == "*":
        if _is_const(rhs, 1):
            return lhs
        if _is_const(lhs, 1):
            return rhs
        if _is_const(rhs, 0) or _is_const(lhs, 0):
            return Literal(0)
        # strength-reduce multiplication by a power of two to a shift
        if isinstance(rhs, Literal):
            k = _pow2_exponent(rhs.value)
            if k is not None:
                return Binary("<<", lhs, Literal(k))
        if isinstance(lhs, Literal):
            k = _pow2_exponent(lhs.value)
            if k is not None:
                return Binary("<<", rhs, Literal(k))
    elif op in ("<<", ">>"):
        if _is_const(rhs, 0):
            return lhs
    elif op in ("|", "^"):
        if _is_const(rhs, 0):
            return lhs
        if _is_const(lhs, 0):
            return rhs
    elif op == "&":
        if _is_const(rhs, 0) or _is_const(lhs, 0):
            return Literal(0)
    return Binary(op, lhs, rhs)


def _expr_key(e: Expr) -> tuple:
    if isinstance(e, Literal):
        return ("lit", e.value)
    if isinstance(e, Ref):
        return ("ref", e.name)
    if isinstance(e, Unary):
        return ("un", e.op, _expr_key(e.operand))
    if isinstance(e, Binary):
        return ("bin", e.op, _expr_key(e.lhs), _expr_key(e.rhs))
    raise TypeError(f"not an expression node: {e!r}")


def _cse(e: Expr, pool: dict) -> Expr:
    """Hash-cons a tree so structurally identical subtrees share one node."""
    if isinstance(e, Unary):
        e = Unary(e.op, _cse(e.operand, pool))
    elif isinstance(e, Binary):
        e = Binary(e.op, _cse(e.lhs, pool), _cse(e.rhs, pool))
    return pool.setdefault(_expr_key(e), e)


def reduce_expr(e: Expr) -> Expr:
    return _cse(_simplify(e), {})


def arithmetic_reduce(g: TaskGraph) -> TaskGraph:
    """Constant folding + algebraic identities + per-expression CSE.

    The result may share expression nodes (a DAG); evaluation semantics are
    unchanged and the distinct-operation count never increases.
    """
    root = map_exprs(g.root, reduce_expr)
    functions = {}
    for name, f in g.functions.items():
        if f.body is None:
            functions[name] = f
        else:
            functions[name] = type(f)(f.name, f.ins, f.outs, map_exprs(f.body, reduce_expr))
    return TaskGraph(dict(g.storage), functions, root)


# ---------------------------------------------------------------------------
# operation counting (distinct operator nodes, sharing-aware)

def expr_op_count(e: Expr) -> int:
    seen: set[int] = set()

    def walk(node: Expr):
        if id(node) in seen:
            return
        seen.add(id(node))
        if isinstance(node, Unary):
            walk(node.operand)
        elif isinstance(node, Binary):
            walk(node.lhs)
            walk(node.rhs)

    walk(e)
    ops = 0
    marked: set[int] = set()

    def count(node: Expr):
        nonlocal ops
        if id(node) in marked:
            return
        marked.add(id(node))
        if isinstance(node, Unary):
            ops += 1
            count(node.operand)
        elif isinstance(node, Binary):
            ops += 1
            count(node.lhs)
            count(node.rhs)

    count(e)
    return ops


def graph_op_count(g: TaskGraph) -> int:
    total = 0

    def walk(s: Stmt):
        nonlocal total
        if isinstance(s, Assign):
            total += expr_op_count(s.expr)
        elif isinstance(s, Seq):
            for sub in s.stmts:
                walk(sub)
        elif isinstance(s, While):
            if s.cond is not None:
                total += expr_op_count(s.cond)
            walk(s.body)
        elif isinstance(s, If):
            total += expr_op_count(s.cond)
            walk(s.then)
            if s.orelse is not None:
                walk(s.orelse)

    walk(g.root)
    for f in g.functions.values():
        if f.body is not None:
            walk(f.body)
    return total
