"""Accelerator design model.

A design is a triple of storage elements, a stored program and a function
registry, together with the routing structures used by the power model: a
square binary connection matrix (entry [i][j] set means instance i feeds
instance j; the diagonal marks top-level input) and a per-instance routing
cost vector expressed in bits.

Routing is indexed by *hardware instances*, which are distinct from program
slots: a program may invoke the same physical instance from several
instructions (e.g. one detector block scanned twice per period), so the
routing dimension can be smaller than the program length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import DimensionError, ValidationError


@dataclass(frozen=True)
class StorageElement:
    name: str
    width_bits: int
    is_input: bool = False  # written by the environment, not the program


@dataclass(frozen=True)
class FunctionSpec:
    """A library function: interface widths, arity, power figures, state count.

    ``variant_of`` names the baseline this entry is an interface-preserving
    optimized variant of. ``static_watts`` is optional because static power is
    only modelled when a full static fit is available.
    """

    name: str
    input_bits: int
    output_bits: int
    n_inputs: int
    n_outputs: int
    dyn_on_watts: float
    dyn_off_watts: float
    state_count: int
    static_watts: Optional[float] = None
    variant_of: Optional[str] = None

    @property
    def arity(self) -> int:
        return self.n_inputs + self.n_outputs


@dataclass(frozen=True)
class Instruction:
    """One stored-program step: function id plus storage params, inputs first.

    ``instance`` optionally names the hardware instance executing this slot
    ("density#0"); when omitted each slot gets its own instance.
    """

    function: str
    params: tuple[str, ...]
    instance: Optional[str] = None


@dataclass(frozen=True)
class ProgramSpec:
    instructions: tuple[Instruction, ...]
    cyclic: bool = True

    def __len__(self) -> int:
        return len(self.instructions)

    def slot_keys(self) -> tuple[str, ...]:
        """Stable per-slot ids: function name plus occurrence ("density#1")."""
        seen: dict[str, int] = {}
        keys = []
        for ins in self.instructions:
            k = seen.get(ins.function, 0)
            seen[ins.function] = k + 1
            keys.append(f"{ins.function}#{k}")
        return tuple(keys)


@dataclass(frozen=True)
class RoutingMatrix:
    n: int
    entries: tuple[tuple[int, ...], ...]

    @staticmethod
    def from_rows(rows) -> "RoutingMatrix":
        return RoutingMatrix(len(rows), tuple(tuple(int(v) for v in r) for r in rows))


@dataclass(frozen=True)
class CostVector:
    bits: tuple[int, ...]

    @staticmethod
    def from_list(vals) -> "CostVector":
        return CostVector(tuple(int(v) for v in vals))


@dataclass(frozen=True)
class InstanceRef:
    function: str
    occurrence: int

    @property
    def key(self) -> str:
        return f"{self.function}#{self.occurrence}"


@dataclass(frozen=True)
class MeasuredPower:
    dynamic_watts: float
    static_watts: float


@dataclass(frozen=True)
class DesignSpec:
    name: str
    storage: tuple[StorageElement, ...]
    program: ProgramSpec
    functions: dict[str, FunctionSpec]
    instances: tuple[InstanceRef, ...]
    routing: RoutingMatrix
    costs: CostVector

    def storage_map(self) -> dict[str, StorageElement]:
        return {e.name: e for e in self.storage}

    def instance_keys(self) -> tuple[str, ...]:
        return tuple(r.key for r in self.instances)

    def slot_keys(self) -> tuple[str, ...]:
        return self.program.slot_keys()

    def instance_of_slot(self, slot_index: int) -> str:
        """Hardware instance key executing the given program slot."""
        ins = self.program.instructions[slot_index]
        if ins.instance is not None:
            return ins.instance
        return self.slot_keys()[slot_index]


@dataclass(frozen=True)
class Diagnostic:
    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.subject}: {self.message}"


def validate_design(design: DesignSpec) -> list[Diagnostic]:
    """Check every structural invariant; returns one diagnostic per violation.

    Total by construction: diagnostics are the output, nothing raises for
    semantically bad content (malformed files fail earlier, at parse time).
    """
    out: list[Diagnostic] = []
    add = out.append

    seen_names: set[str] = set()
    for e in design.storage:
        if e.width_bits < 1:
            add(Diagnostic("storage-width", e.name, f"width_bits must be >= 1, got {e.width_bits}"))
        if e.name in seen_names:
            add(Diagnostic("storage-duplicate", e.name, "duplicate storage element name"))
        seen_names.add(e.name)

    baselines = design.functions
    for key, f in design.functions.items():
        if f.dyn_off_watts > f.dyn_on_watts:
            add(Diagnostic("function-power", key, "dyn_off_watts exceeds dyn_on_watts"))
        if f.state_count < 1:
            add(Diagnostic("function-states", key, "state_count must be >= 1"))
        if min(f.input_bits, f.output_bits, f.n_inputs, f.n_outputs) < 0:
            add(Diagnostic("function-interface", key, "negative interface field"))
        if f.dyn_on_watts < 0 or f.dyn_off_watts < 0:
            add(Diagnostic("function-power", key, "negative dynamic power"))
        if f.static_watts is not None and f.static_watts < 0:
            add(Diagnostic("function-power", key, "negative static power"))
        if f.variant_of is not None:
            base = baselines.get(f.variant_of)
            if base is not None and (
                base.input_bits != f.input_bits
                or base.output_bits != f.output_bits
                or base.n_inputs != f.n_inputs
                or base.n_outputs != f.n_outputs
            ):
                add(Diagnostic("variant-interface", key, f"interface differs from baseline {f.variant_of!r}"))

    if not design.program.instructions:
        add(Diagnostic("program-empty", design.name, "program has no instructions"))

    elements = {e.name for e in design.storage}
    instance_keys = set(design.instance_keys())
    inst_fn = {r.key: r.function for r in design.instances}
    for idx, ins in enumerate(design.program.instructions):
        subj = f"instruction[{idx}]"
        fn = design.functions.get(ins.function)
        if fn is None:
            add(Diagnostic("unresolved-function", subj, f"unknown function {ins.function!r}"))
        else:
            if len(ins.params) != fn.arity:
                add(Diagnostic("arity-mismatch", subj,
                               f"{ins.function} takes {fn.arity} params, got {len(ins.params)}"))
        for p in ins.params:
            if p not in elements:
                add(Diagnostic("unresolved-storage", subj, f"unknown storage element {p!r}"))
        if ins.instance is not None:
            if ins.instance not in instance_keys:
                add(Diagnostic("unresolved-instance", subj, f"unknown instance {ins.instance!r}"))
            elif inst_fn[ins.instance] != ins.function:
                add(Diagnostic("instance-function", subj,
                               f"instance {ins.instance!r} executes {inst_fn[ins.instance]!r}"))

    for idx, slot_key in enumerate(design.program.slot_keys()):
        ins = design.program.instructions[idx]
        key = ins.instance if ins.instance is not None else slot_key
        if ins.instance is None and key not in instance_keys:
            add(Diagnostic("unmapped-slot", f"instruction[{idx}]",
                           f"slot {key!r} has no hardware instance"))

    for r in design.instances:
        if r.function not in design.functions:
            add(Diagnostic("unresolved-function", r.key, "instance of unknown function"))

    rows = design.routing.entries
    if len(rows) != design.routing.n or any(len(r) != design.routing.n for r in rows):
        add(Diagnostic("non-square-matrix", design.name,
                       f"routing matrix is not {design.routing.n}x{design.routing.n}"))
    else:
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                if v not in (0, 1):
                    add(Diagnostic("non-binary-matrix", f"routing[{i}][{j}]", f"entry {v} not in {{0,1}}"))
    if design.routing.n != len(design.instances):
        add(Diagnostic("routing-dimension", design.name,
                       f"matrix is {design.routing.n}-dimensional but design has "
                       f"{len(design.instances)} instances"))
    if len(design.costs.bits) != design.routing.n:
        add(Diagnostic("cost-dimension", design.name,
                       f"cost vector has {len(design.costs.bits)} entries for n={design.routing.n}"))
    for i, b in enumerate(design.costs.bits):
        if b < 0:
            add(Diagnostic("cost-negative", f"costs[{i}]", f"negative bit count {b}"))

    return out


def check_design(design: DesignSpec) -> None:
    """Raise ValidationError when validate_design reports anything."""
    diags = validate_design(design)
    if diags:
        raise ValidationError(diags)


def routing_bits(routing: RoutingMatrix, costs: CostVector) -> int:
    """Total routed bits: the sum-vector contraction of matrix times costs."""
    if len(costs.bits) != routing.n:
        raise DimensionError(
            f"cost vector length {len(costs.bits)} != matrix dimension {routing.n}")
    if len(routing.entries) != routing.n or any(len(r) != routing.n for r in routing.entries):
        raise DimensionError("routing matrix is not square")
    total = 0
    for row in routing.entries:
        for a, d in zip(row, costs.bits):
            total += a * d
    return total


def derive_routing(
    program: ProgramSpec,
    functions: dict[str, FunctionSpec],
    storage: tuple[StorageElement, ...],
    instances: tuple[InstanceRef, ...],
) -> tuple[RoutingMatrix, CostVector]:
    """Reconstruct the routing pair from producer/consumer dataflow.

    entry[i][j] = 1 when instance i writes a storage element instance j reads;
    entry[i][i] = 1 when instance i reads a top-level input element (one marked
    as input, or read but never written). The cost for instance i is the sum of
    widths of the distinct elements it reads.

    The result depends only on the dataflow relation: reordering instructions
    that keeps producers and consumers intact yields the identical pair.
    """
    emap = {e.name: e for e in storage}
    index = {r.key: i for i, r in enumerate(instances)}
    inst_fn = {r.key: r.function for r in instances}

    slot_keys = program.slot_keys()
    reads: dict[int, set[str]] = {i: set() for i in range(len(instances))}
    writes: dict[int, set[str]] = {i: set() for i in range(len(instances))}
    for s, ins in enumerate(program.instructions):
        fn = functions.get(ins.function)
        if fn is None:
            raise ValidationError([Diagnostic("unresolved-function", f"instruction[{s}]",
                                              f"unknown function {ins.function!r}")])
        key = ins.instance if ins.instance is not None else slot_keys[s]
        if key not in index:
            raise ValidationError([Diagnostic("unresolved-instance", f"instruction[{s}]",
                                              f"instance {key!r} not in instance list")])
        if inst_fn[key] != ins.function:
            raise ValidationError([Diagnostic("instance-function", f"instruction[{s}]",
                                              f"instance {key!r} executes {inst_fn[key]!r}")])
        i = index[key]
        for p in ins.params[: fn.n_inputs]:
            reads[i].add(p)
        for p in ins.params[fn.n_inputs:]:
            writes[i].add(p)

    written_anywhere = set().union(*writes.values()) if writes else set()

    def external(name: str) -> bool:
        e = emap[name]
        return e.is_input or name not in written_anywhere

    n = len(instances)
    rows = [[0] * n for _ in range(n)]
    for i in range(n):
        for elem in reads[i]:
            if external(elem):
                rows[i][i] = 1
    for i in range(n):
        for elem in writes[i]:
            for j in range(n):
                if j != i and elem in reads[j]:
                    rows[i][j] = 1

    bits = [sum(emap[e].width_bits for e in sorted(reads[i])) for i in range(n)]
    return RoutingMatrix.from_rows(rows), CostVector.from_list(bits)


def default_instances(program: ProgramSpec) -> tuple[InstanceRef, ...]:
    """One hardware instance per program slot, in program order."""
    refs = []
    seen: dict[str, int] = {}
    for ins in program.instructions:
        k = seen.get(ins.function, 0)
        seen[ins.function] = k + 1
        refs.append(InstanceRef(ins.function, k))
    return tuple(refs)
