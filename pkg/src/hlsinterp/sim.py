"""Execution engine for stored-program designs over concrete data.

One step dispatches one instruction: read the input params, apply the
function implementation, write the outputs (wrapped to element widths),
advance the program counter. Cyclic programs wrap the counter and count
periods, mirroring the powered-on behavior of the modelled circuit. Exactly
one function is active per step; the trace schema still reserves a
concurrency ``slot`` column (always 0) so a future parallel extension does
not break it.

Traces feed extract_activity, which averages per-slot consumed states over
whole periods into the ActivityProfile consumed by the power model.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .design import DesignSpec
from .errors import SimError
from .lang import StorageDecl, TaskGraph, evaluate, parse, wrap_width
from .power import ActivityProfile

TRACE_COLUMNS = ("period", "pc", "instance", "states", "pre_hash", "post_hash", "slot")


@dataclass(frozen=True)
class FunctionImpl:
    """Executable function: a pure mapping from input values to output values.

    ``state_cost`` is the number of machine states one invocation consumes;
    it may be a callable of the input tuple for data-dependent control.
    """
    name: str
    n_inputs: int
    n_outputs: int
    evaluator: Callable[[tuple], tuple]
    state_cost: Union[int, Callable[[tuple], int]] = 1

    def cost_for(self, ins: tuple) -> int:
        cost = self.state_cost(ins) if callable(self.state_cost) else self.state_cost
        if cost < 1:
            raise SimError(f"{self.name}: state cost must be >= 1, got {cost}")
        return int(cost)


def impl_from_graph(g: TaskGraph, name: str,
                    state_cost: Union[int, Callable] = 1) -> FunctionImpl:
    """Build an impl from a mini-language function definition with a body."""
    fn = g.functions.get(name)
    if fn is None or fn.body is None:
        raise SimError(f"no function body for {name!r}")
    body_graph = TaskGraph({p: StorageDecl(p, 64) for p in fn.ins + fn.outs},
                           {}, fn.body)

    def evaluator(ins: tuple) -> tuple:
        env = dict(zip(fn.ins, ins))
        result = evaluate(body_graph, env)
        return tuple(result.values[p] for p in fn.outs)

    return FunctionImpl(name, len(fn.ins), len(fn.outs), evaluator, state_cost)


def impl_from_source(name: str, source: str,
                     state_cost: Union[int, Callable] = 1) -> FunctionImpl:
    return impl_from_graph(parse(source), name, state_cost)


@dataclass(frozen=True)
class EngineState:
    values: dict[str, int]
    pc: int = 0
    period_count: int = 0


@dataclass(frozen=True)
class TraceRecord:
    period: int
    pc: int
    instance: str
    states: int
    pre_hash: str
    post_hash: str
    slot: int = 0  # reserved concurrency slot, always 0


def _hash_values(vals: tuple) -> str:
    return hashlib.blake2b(repr(vals).encode(), digest_size=4).hexdigest()


def initial_state(design: DesignSpec, env: Optional[dict] = None) -> EngineState:
    widths = {e.name: e.width_bits for e in design.storage}
    values = {name: 0 for name in widths}
    for k, v in (env or {}).items():
        if k not in widths:
            raise SimError(f"unknown storage element {k!r}")
        values[k] = wrap_width(v, widths[k])
    return EngineState(values)


def step(state: EngineState, design: DesignSpec,
         impls: dict[str, FunctionImpl]) -> tuple[EngineState, TraceRecord]:
    """Dispatch the instruction at pc; a pure transition on its inputs."""
    program = design.program
    if not 0 <= state.pc < len(program.instructions):
        raise SimError(f"program counter {state.pc} out of range")
    ins = program.instructions[state.pc]
    fn = design.functions[ins.function]
    impl = impls.get(ins.function)
    if impl is None:
        raise SimError(f"no implementation for function {ins.function!r}")
    if (impl.n_inputs, impl.n_outputs) != (fn.n_inputs, fn.n_outputs):
        raise SimError(f"{ins.function}: impl arity {impl.n_inputs}/{impl.n_outputs} "
                       f"does not match spec {fn.n_inputs}/{fn.n_outputs}")
    in_params = ins.params[: fn.n_inputs]
    out_params = ins.params[fn.n_inputs:]
    in_vals = tuple(state.values[p] for p in in_params)
    out_vals = tuple(impl.evaluator(in_vals))
    if len(out_vals) != fn.n_outputs:
        raise SimError(f"{ins.function}: evaluator wrote {len(out_vals)} values, "
                       f"declared {fn.n_outputs}")
    widths = {e.name: e.width_bits for e in design.storage}
    touched = tuple(in_params) + tuple(out_params)
    pre = _hash_values(tuple(state.values[p] for p in touched))
    values = dict(state.values)
    for p, v in zip(out_params, out_vals):
        values[p] = wrap_width(v, widths[p])
    post = _hash_values(tuple(values[p] for p in touched))
    record = TraceRecord(state.period_count, state.pc,
                         design.slot_keys()[state.pc],
                         impl.cost_for(in_vals), pre, post)
    pc = state.pc + 1
    period = state.period_count
    if pc == len(program.instructions):
        if program.cyclic:
            pc = 0
            period += 1
    return EngineState(values, pc, period), record


def run_periods(state: EngineState, design: DesignSpec,
                impls: dict[str, FunctionImpl],
                k: int) -> tuple[EngineState, list[TraceRecord]]:
    """Run exactly k full periods (k * program length steps)."""
    if k < 1:
        raise SimError(f"period count must be >= 1, got {k}")
    if not design.program.cyclic and k > 1:
        raise SimError("multiple periods require a cyclic program")
    trace: list[TraceRecord] = []
    for _ in range(k * len(design.program.instructions)):
        state, rec = step(state, design, impls)
        trace.append(rec)
    return state, trace


def extract_activity(trace: list[TraceRecord], period_states: int) -> ActivityProfile:
    """Average per-slot consumed states over the traced periods.

    Requires a whole number of periods (every period must dispatch the same
    slots); fractional state averages round half-to-even. Raises when the
    summed activity exceeds the period length.
    """
    if not trace:
        raise SimError("empty trace")
    by_period: dict[int, list[TraceRecord]] = {}
    for rec in trace:
        by_period.setdefault(rec.period, []).append(rec)
    slot_sets = {tuple(sorted(r.instance for r in recs)) for recs in by_period.values()}
    if len(slot_sets) != 1:
        raise SimError("trace does not cover a whole number of identical periods")
    periods = len(by_period)
    totals: dict[str, int] = {}
    for rec in trace:
        totals[rec.instance] = totals.get(rec.instance, 0) + rec.states
    active = {slot: round(total / periods) for slot, total in sorted(totals.items())}
    if sum(active.values()) > period_states:
        raise SimError(f"activity {sum(active.values())} exceeds period length "
                       f"{period_states}")
    return ActivityProfile(period_states, active)


def trace_to_csv(trace: list[TraceRecord]) -> str:
    lines = [",".join(TRACE_COLUMNS)]
    for r in trace:
        lines.append(f"{r.period},{r.pc},{r.instance},{r.states},{r.pre_hash},"
                     f"{r.post_hash},{r.slot}")
    return "\n".join(lines) + "\n"
