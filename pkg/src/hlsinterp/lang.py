"""Mini imperative source language for accelerator main loops and function bodies.

The language deliberately covers only constructs with direct hardware
equivalents: fixed-width integer storage, arithmetic/comparison expressions,
``if``/``else``, ``while``, a bounded ``for`` sugar, a ``loop`` construct for
the cyclic top level, and calls into a function registry. No pointers, no
recursion, no dynamic allocation, no floating point.

Semantics are two's-complement: expression intermediates wrap at 64 bits,
stores wrap to the declared width of the target element. Files use the
``.hlsw`` extension; the grammar is published in docs/grammar.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import ParseError, FuelExhausted, SimError

# ---------------------------------------------------------------------------
# fixed-width arithmetic

_U64 = (1 << 64) - 1
_BIAS64 = 1 << 63


def wrap64(v: int) -> int:
    """Wrap an unbounded int into signed 64-bit two's complement."""
    return ((v + _BIAS64) & _U64) - _BIAS64


def wrap_width(v: int, width: int) -> int:
    """Wrap a value into signed two's complement of the given bit width."""
    if width >= 64:
        return wrap64(v)
    bias = 1 << (width - 1)
    return ((v + bias) & ((1 << width) - 1)) - bias


# ---------------------------------------------------------------------------
# AST

class Expr:
    kind = "Expr"


@dataclass(frozen=True, eq=False)
class Literal(Expr):
    value: int


@dataclass(frozen=True, eq=False)
class Ref(Expr):
    name: str


@dataclass(frozen=True, eq=False)
class Unary(Expr):
    op: str
    operand: Expr


@dataclass(frozen=True, eq=False)
class Binary(Expr):
    op: str
    lhs: Expr
    rhs: Expr


class Stmt:
    kind = "Stmt"


@dataclass(frozen=True, eq=False)
class Assign(Stmt):
    kind = "Assign"
    target: str
    expr: Expr


@dataclass(frozen=True, eq=False)
class Seq(Stmt):
    kind = "Seq"
    stmts: tuple[Stmt, ...]


@dataclass(frozen=True, eq=False)
class While(Stmt):
    """General while loop; ``cond is None`` encodes the cyclic ``loop`` form."""
    kind = "While"
    cond: Optional[Expr]
    body: Stmt


@dataclass(frozen=True, eq=False)
class If(Stmt):
    kind = "If"
    cond: Expr
    then: Stmt
    orelse: Optional[Stmt] = None


@dataclass(frozen=True, eq=False)
class Call(Stmt):
    kind = "Call"
    function: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class StorageDecl:
    name: str
    width_bits: int
    is_input: bool = False


@dataclass(frozen=True)
class FunctionDef:
    """Declared function: formal in/out names plus an optional body.

    Externs (no body) stand for library functions known only by interface;
    they translate to declared-state-count stubs and need an impl to execute.
    """
    name: str
    ins: tuple[str, ...]
    outs: tuple[str, ...]
    body: Optional[Stmt] = None

    @property
    def arity(self) -> int:
        return len(self.ins) + len(self.outs)


@dataclass(frozen=True)
class TaskGraph:
    storage: dict[str, StorageDecl]
    functions: dict[str, FunctionDef]
    root: Stmt


# ---------------------------------------------------------------------------
# tokenizer

_KEYWORDS = {"reg", "input", "func", "extern", "in", "out",
             "while", "loop", "if", "else", "for", "call"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><<|>>|<=|>=|==|!=|[-+*&|^~<>=(){};:,])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    type: str  # 'int' | 'ident' | keyword | operator | 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        lexeme = m.group(0)
        kind = m.lastgroup
        if kind == "int":
            toks.append(Token("int", lexeme, line, col))
        elif kind == "ident":
            toks.append(Token(lexeme if lexeme in _KEYWORDS else "ident", lexeme, line, col))
        elif kind == "op":
            toks.append(Token(lexeme, lexeme, line, col))
        nl = lexeme.count("\n")
        if nl:
            line += nl
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    toks.append(Token("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# parser (recursive descent)

class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, ttype: str) -> Token:
        t = self.peek()
        if t.type != ttype:
            shown = t.text or "end of input"
            raise ParseError(f"expected {ttype!r}, found {shown!r}", t.line, t.col)
        return self.next()

    def error(self, message: str) -> ParseError:
        t = self.peek()
        return ParseError(message, t.line, t.col)

    # -- program structure

    def parse_program(self) -> TaskGraph:
        storage: dict[str, StorageDecl] = {}
        functions: dict[str, FunctionDef] = {}
        stmts: list[Stmt] = []
        while self.peek().type != "eof":
            t = self.peek()
            if t.type in ("reg", "input"):
                d = self.storage_decl()
                if d.name in storage or d.name in functions:
                    raise ParseError(f"duplicate declaration of {d.name!r}", t.line, t.col)
                storage[d.name] = d
            elif t.type in ("func", "extern"):
                f = self.func_decl()
                if f.name in functions or f.name in storage:
                    raise ParseError(f"duplicate declaration of {f.name!r}", t.line, t.col)
                functions[f.name] = f
            else:
                stmts.append(self.statement(storage, functions))
        if not stmts and not storage and not functions:
            raise self.error("empty program")
        root = stmts[0] if len(stmts) == 1 else Seq(tuple(stmts))
        return TaskGraph(storage, functions, root)

    def storage_decl(self) -> StorageDecl:
        is_input = self.next().type == "input"
        name = self.expect("ident").text
        self.expect(":")
        width_tok = self.expect("int")
        width = int(width_tok.text)
        if width < 1:
            raise ParseError("storage width must be >= 1", width_tok.line, width_tok.col)
        self.expect(";")
        return StorageDecl(name, width, is_input)

    def func_decl(self) -> FunctionDef:
        is_extern = self.next().type == "extern"
        name = self.expect("ident").text
        self.expect("(")
        ins: list[str] = []
        outs: list[str] = []
        if self.peek().type != ")":
            while True:
                d = self.peek()
                if d.type not in ("in", "out"):
                    raise self.error("expected 'in' or 'out' parameter direction")
                self.next()
                pname = self.expect("ident").text
                if pname in ins or pname in outs:
                    raise ParseError(f"duplicate parameter {pname!r}", d.line, d.col)
                (ins if d.type == "in" else outs).append(pname)
                if self.peek().type != ",":
                    break
                self.next()
        self.expect(")")
        if is_extern:
            self.expect(";")
            return FunctionDef(name, tuple(ins), tuple(outs), None)
        formals = {p: StorageDecl(p, 64) for p in ins + outs}
        body = self.block(formals, {})
        return FunctionDef(name, tuple(ins), tuple(outs), body)

    # -- statements

    def block(self, storage, functions) -> Stmt:
        self.expect("{")
        stmts = []
        while self.peek().type != "}":
            if self.peek().type == "eof":
                raise self.error("unterminated block")
            stmts.append(self.statement(storage, functions))
        self.next()
        if len(stmts) == 1:
            return stmts[0]
        return Seq(tuple(stmts))

    def statement(self, storage, functions) -> Stmt:
        t = self.peek()
        if t.type == "while":
            self.next()
            self.expect("(")
            cond = self.expr(storage)
            self.expect(")")
            return While(cond, self.block(storage, functions))
        if t.type == "loop":
            self.next()
            return While(None, self.block(storage, functions))
        if t.type == "if":
            return self.if_stmt(storage, functions)
        if t.type == "for":
            return self.for_stmt(storage, functions)
        if t.type == "call":
            self.next()
            name_tok = self.expect("ident")
            fn = functions.get(name_tok.text)
            if fn is None:
                raise ParseError(f"call to undeclared function {name_tok.text!r}",
                                 name_tok.line, name_tok.col)
            self.expect("(")
            args = []
            if self.peek().type != ")":
                while True:
                    a = self.expect("ident")
                    if a.text not in storage:
                        raise ParseError(f"unresolved storage element {a.text!r}", a.line, a.col)
                    args.append(a.text)
                    if self.peek().type != ",":
                        break
                    self.next()
            self.expect(")")
            self.expect(";")
            if len(args) != fn.arity:
                raise ParseError(f"{fn.name} takes {fn.arity} arguments, got {len(args)}",
                                 name_tok.line, name_tok.col)
            return Call(fn.name, tuple(args))
        if t.type == "ident":
            return self.assign(storage, semicolon=True)
        raise self.error(f"expected a statement, found {t.text or 'end of input'!r}")

    def assign(self, storage, semicolon: bool) -> Assign:
        name_tok = self.expect("ident")
        if name_tok.text not in storage:
            raise ParseError(f"unresolved storage element {name_tok.text!r}",
                             name_tok.line, name_tok.col)
        self.expect("=")
        e = self.expr(storage)
        if semicolon:
            self.expect(";")
        return Assign(name_tok.text, e)

    def if_stmt(self, storage, functions) -> If:
        self.next()
        self.expect("(")
        cond = self.expr(storage)
        self.expect(")")
        then = self.block(storage, functions)
        orelse = None
        if self.peek().type == "else":
            self.next()
            if self.peek().type == "if":
                orelse = self.if_stmt(storage, functions)
            else:
                orelse = self.block(storage, functions)
        return If(cond, then, orelse)

    def for_stmt(self, storage, functions) -> Stmt:
        """``for (init; cond; step) body`` desugars to init + while."""
        self.next()
        self.expect("(")
        init = self.assign(storage, semicolon=True)
        cond = self.expr(storage)
        self.expect(";")
        step = self.assign(storage, semicolon=False)
        self.expect(")")
        body = self.block(storage, functions)
        inner = body.stmts if isinstance(body, Seq) else (body,)
        return Seq((init, While(cond, Seq(inner + (step,)))))

    # -- expressions

    def expr(self, storage) -> Expr:
        return self.cmp(storage)

    def cmp(self, storage) -> Expr:
        lhs = self.bitor(storage)
        if self.peek().type in ("<", "<=", ">", ">=", "==", "!="):
            op = self.next().type
            return Binary(op, lhs, self.bitor(storage))
        return lhs

    def _left_assoc(self, storage, ops, sub) -> Expr:
        lhs = sub(storage)
        while self.peek().type in ops:
            op = self.next().type
            lhs = Binary(op, lhs, sub(storage))
        return lhs

    def bitor(self, storage):
        return self._left_assoc(storage, ("|",), self.bitxor)

    def bitxor(self, storage):
        return self._left_assoc(storage, ("^",), self.bitand)

    def bitand(self, storage):
        return self._left_assoc(storage, ("&",), self.shift)

    def shift(self, storage):
        return self._left_assoc(storage, ("<<", ">>"), self.add)

    def add(self, storage):
        return self._left_assoc(storage, ("+", "-"), self.mul)

    def mul(self, storage):
        return self._left_assoc(storage, ("*",), self.unary)

    def unary(self, storage) -> Expr:
        t = self.peek()
        if t.type in ("-", "~"):
            self.next()
            return Unary(t.type, self.unary(storage))
        return self.primary(storage)

    def primary(self, storage) -> Expr:
        t = self.peek()
        if t.type == "int":
            self.next()
            return Literal(wrap64(int(t.text)))
        if t.type == "ident":
            self.next()
            if t.text not in storage:
                raise ParseError(f"unresolved storage element {t.text!r}", t.line, t.col)
            return Ref(t.text)
        if t.type == "(":
            self.next()
            e = self.expr(storage)
            self.expect(")")
            return e
        raise self.error(f"expected an expression, found {t.text or 'end of input'!r}")


def parse(text: str) -> TaskGraph:
    """Parse mini-language source. Deterministic; raises ParseError with
    line/column on syntax errors and unresolved identifiers."""
    return _Parser(text).parse_program()


# ---------------------------------------------------------------------------
# unparser

_PREC = {"|": 1, "^": 2, "&": 3, "<<": 4, ">>": 4, "+": 5, "-": 5, "*": 6}
_CMP_OPS = ("<", "<=", ">", ">=", "==", "!=")


def unparse_expr(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, Literal):
        return str(e.value) if e.value >= 0 else f"(0 - {-e.value})"
    if isinstance(e, Ref):
        return e.name
    if isinstance(e, Unary):
        return f"{e.op}{unparse_expr(e.operand, 7)}"
    if isinstance(e, Binary):
        prec = 0 if e.op in _CMP_OPS else _PREC[e.op]
        inner = f"{unparse_expr(e.lhs, prec)} {e.op} {unparse_expr(e.rhs, prec + 1)}"
        return f"({inner})" if prec < parent_prec else inner
    raise TypeError(f"not an expression node: {e!r}")


def _unparse_stmt(s: Stmt, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if isinstance(s, Assign):
        out.append(f"{pad}{s.target} = {unparse_expr(s.expr)};")
    elif isinstance(s, Call):
        out.append(f"{pad}call {s.function}({', '.join(s.args)});")
    elif isinstance(s, Seq):
        for sub in s.stmts:
            _unparse_stmt(sub, indent, out)
    elif isinstance(s, While):
        head = "loop {" if s.cond is None else f"while ({unparse_expr(s.cond)}) {{"
        out.append(pad + head)
        _unparse_stmt(s.body, indent + 1, out)
        out.append(pad + "}")
    elif isinstance(s, If):
        out.append(f"{pad}if ({unparse_expr(s.cond)}) {{")
        _unparse_stmt(s.then, indent + 1, out)
        if s.orelse is not None:
            out.append(pad + "} else {")
            _unparse_stmt(s.orelse, indent + 1, out)
        out.append(pad + "}")
    else:
        raise TypeError(f"not a statement node: {s!r}")


def unparse(g: TaskGraph) -> str:
    """Canonical text form; parse(unparse(g)) is structurally identical to g."""
    lines: list[str] = []
    for d in g.storage.values():
        kw = "input" if d.is_input else "reg"
        lines.append(f"{kw} {d.name}: {d.width_bits};")
    for f in g.functions.values():
        params = ", ".join([f"in {p}" for p in f.ins] + [f"out {p}" for p in f.outs])
        if f.body is None:
            lines.append(f"extern {f.name}({params});")
        else:
            lines.append(f"func {f.name}({params}) {{")
            _unparse_stmt(f.body, 1, lines)
            lines.append("}")
    _unparse_stmt(g.root, 0, lines)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# reference evaluator (the oracle side of co-simulation)

DEFAULT_FUEL = 1_000_000


@dataclass
class EvalResult:
    values: dict[str, int]
    steps: int
    loop_body_counts: dict[int, int] = field(default_factory=dict)


def eval_expr(e: Expr, env: dict[str, int]) -> int:
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, Ref):
        return env[e.name]
    if isinstance(e, Unary):
        v = eval_expr(e.operand, env)
        return wrap64(-v) if e.op == "-" else wrap64(~v)
    if isinstance(e, Binary):
        a = eval_expr(e.lhs, env)
        b = eval_expr(e.rhs, env)
        op = e.op
        if op == "+":
            return wrap64(a + b)
        if op == "-":
            return wrap64(a - b)
        if op == "*":
            return wrap64(a * b)
        if op == "<<":
            return wrap64(a << (b & 63))
        if op == ">>":
            return a >> (b & 63)
        if op == "&":
            return a & b
        if op == "|":
            return a | b
        if op == "^":
            return a ^ b
        if op == "<":
            return int(a < b)
        if op == "<=":
            return int(a <= b)
        if op == ">":
            return int(a > b)
        if op == ">=":
            return int(a >= b)
        if op == "==":
            return int(a == b)
        if op == "!=":
            return int(a != b)
    raise TypeError(f"not an expression node: {e!r}")


class _Evaluator:
    def __init__(self, g: TaskGraph, fuel: int, impls, count_loops: bool):
        self.g = g
        self.fuel = fuel
        self.impls = impls or {}
        self.loop_ids = {id(w): i for i, w in enumerate(collect_loops(g))} if count_loops else None
        self.loop_counts: dict[int, int] = {}
        self.steps = 0

    def burn(self):
        self.steps += 1
        if self.steps > self.fuel:
            raise FuelExhausted(f"evaluation exceeded {self.fuel} steps")

    def store(self, env, name, value):
        env[name] = wrap_width(value, self.g.storage[name].width_bits)

    def run(self, s: Stmt, env: dict[str, int]) -> None:
        if isinstance(s, Assign):
            self.burn()
            self.store(env, s.target, eval_expr(s.expr, env))
        elif isinstance(s, Seq):
            for sub in s.stmts:
                self.run(sub, env)
        elif isinstance(s, While):
            if s.cond is None:
                raise SimError("cyclic 'loop' cannot be evaluated to completion; "
                               "run it per period instead")
            lid = self.loop_ids.get(id(s)) if self.loop_ids is not None else None
            while True:
                self.burn()
                if not eval_expr(s.cond, env):
                    break
                if lid is not None:
                    self.loop_counts[lid] = self.loop_counts.get(lid, 0) + 1
                self.run(s.body, env)
        elif isinstance(s, If):
            self.burn()
            if eval_expr(s.cond, env):
                self.run(s.then, env)
            elif s.orelse is not None:
                self.run(s.orelse, env)
        elif isinstance(s, Call):
            self.call(s, env)
        else:
            raise TypeError(f"not a statement node: {s!r}")

    def call(self, s: Call, env: dict[str, int]) -> None:
        fn = self.g.functions[s.function]
        in_args = s.args[: len(fn.ins)]
        out_args = s.args[len(fn.ins):]
        if fn.body is not None:
            local = {p: env[a] for p, a in zip(fn.ins, in_args)}
            for p in fn.outs:
                local.setdefault(p, 0)
            inner = _Evaluator(TaskGraph({p: StorageDecl(p, 64) for p in local},
                                         {}, fn.body), self.fuel - self.steps, None, False)
            inner.run(fn.body, local)
            self.steps += inner.steps
            results = [local[p] for p in fn.outs]
        else:
            impl = self.impls.get(s.function)
            if impl is None:
                raise SimError(f"no implementation for extern function {s.function!r}")
            self.burn()
            results = list(impl(tuple(env[a] for a in in_args)))
            if len(results) != len(fn.outs):
                raise SimError(f"{s.function} returned {len(results)} values, "
                               f"declared {len(fn.outs)} outputs")
        for a, v in zip(out_args, results):
            self.store(env, a, v)


def evaluate(g: TaskGraph, env: Optional[dict[str, int]] = None,
             fuel: int = DEFAULT_FUEL, impls=None, count_loops: bool = False) -> EvalResult:
    """Direct tree-walking evaluation of a task graph over a storage valuation.

    Storage elements missing from ``env`` start at zero. ``impls`` maps extern
    function names to ``tuple(ins) -> sequence(outs)`` callables.
    """
    values = {name: 0 for name in g.storage}
    if env:
        for k, v in env.items():
            if k not in values:
                raise SimError(f"unknown storage element {k!r}")
            values[k] = wrap_width(v, g.storage[k].width_bits)
    ev = _Evaluator(g, fuel, impls, count_loops)
    ev.run(g.root, values)
    return EvalResult(values, ev.steps, ev.loop_counts)


# ---------------------------------------------------------------------------
# traversal and normalization helpers

def collect_loops(g: TaskGraph) -> list[While]:
    """While nodes of the root in pre-order (the loop-id space)."""
    found: list[While] = []

    def walk(s: Stmt):
        if isinstance(s, While):
            found.append(s)
            walk(s.body)
        elif isinstance(s, Seq):
            for sub in s.stmts:
                walk(sub)
        elif isinstance(s, If):
            walk(s.then)
            if s.orelse is not None:
                walk(s.orelse)

    walk(g.root)
    return found


def map_exprs(s: Stmt, fn: Callable[[Expr], Expr]) -> Stmt:
    """Rebuild a statement tree with every expression passed through fn."""
    if isinstance(s, Assign):
        return Assign(s.target, fn(s.expr))
    if isinstance(s, Seq):
        return Seq(tuple(map_exprs(sub, fn) for sub in s.stmts))
    if isinstance(s, While):
        return While(None if s.cond is None else fn(s.cond), map_exprs(s.body, fn))
    if isinstance(s, If):
        orelse = None if s.orelse is None else map_exprs(s.orelse, fn)
        return If(fn(s.cond), map_exprs(s.then, fn), orelse)
    if isinstance(s, Call):
        return s
    raise TypeError(f"not a statement node: {s!r}")


def rename_expr(e: Expr, mapping: dict[str, str]) -> Expr:
    if isinstance(e, Ref):
        return Ref(mapping.get(e.name, e.name))
    if isinstance(e, Unary):
        return Unary(e.op, rename_expr(e.operand, mapping))
    if isinstance(e, Binary):
        return Binary(e.op, rename_expr(e.lhs, mapping), rename_expr(e.rhs, mapping))
    return e


def rename_stmt(s: Stmt, mapping: dict[str, str]) -> Stmt:
    if isinstance(s, Assign):
        return Assign(mapping.get(s.target, s.target), rename_expr(s.expr, mapping))
    if isinstance(s, Call):
        return Call(s.function, tuple(mapping.get(a, a) for a in s.args))
    if isinstance(s, Seq):
        return Seq(tuple(rename_stmt(sub, mapping) for sub in s.stmts))
    if isinstance(s, While):
        cond = None if s.cond is None else rename_expr(s.cond, mapping)
        return While(cond, rename_stmt(s.body, mapping))
    if isinstance(s, If):
        orelse = None if s.orelse is None else rename_stmt(s.orelse, mapping)
        return If(rename_expr(s.cond, mapping), rename_stmt(s.then, mapping), orelse)
    raise TypeError(f"not a statement node: {s!r}")


def normalize(g: TaskGraph) -> TaskGraph:
    """Alpha-normalize storage names to v0, v1, ... in first-use order.

    Structure, widths and function names are preserved, so alpha-renamed
    programs normalize to identical graphs. Unused elements follow the used
    ones in declaration order.
    """
    order: list[str] = []

    def see(name: str):
        if name not in order:
            order.append(name)

    def walk_expr(e: Expr):
        if isinstance(e, Ref):
            see(e.name)
        elif isinstance(e, Unary):
            walk_expr(e.operand)
        elif isinstance(e, Binary):
            walk_expr(e.lhs)
            walk_expr(e.rhs)

    def walk(s: Stmt):
        if isinstance(s, Assign):
            see(s.target)
            walk_expr(s.expr)
        elif isinstance(s, Call):
            for a in s.args:
                see(a)
        elif isinstance(s, Seq):
            for sub in s.stmts:
                walk(sub)
        elif isinstance(s, While):
            if s.cond is not None:
                walk_expr(s.cond)
            walk(s.body)
        elif isinstance(s, If):
            walk_expr(s.cond)
            walk(s.then)
            if s.orelse is not None:
                walk(s.orelse)

    walk(g.root)
    for name in g.storage:
        see(name)
    mapping = {name: f"v{i}" for i, name in enumerate(order)}
    storage = {mapping[d.name]: StorageDecl(mapping[d.name], d.width_bits, d.is_input)
               for d in (g.storage[n] for n in order)}
    return TaskGraph(storage, dict(g.functions), rename_stmt(g.root, mapping))


def structural_key(g: TaskGraph) -> str:
    """Canonical text of the normalized graph; equal iff alpha-equivalent."""
    return unparse(normalize(g))
