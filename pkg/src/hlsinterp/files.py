"""JSON file formats (schema version 1) for designs, libraries, activities,
measurements, calibrations and prediction reports.

All watt quantities are serialized as decimal strings so golden files stay
bit-identical across platforms; parsers accept strings or numbers. Unknown
keys are rejected.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Union

from .design import (
    CostVector,
    DesignSpec,
    FunctionSpec,
    InstanceRef,
    Instruction,
    MeasuredPower,
    ProgramSpec,
    RoutingMatrix,
    StorageElement,
)
from .errors import SchemaError
from .power import (
    ActivityProfile,
    CalibrationResult,
    PowerEstimate,
    PowerParams,
    PredictionReport,
)

SCHEMA_VERSION = 1

Source = Union[str, Path, dict]


def _load(source: Source) -> dict:
    if isinstance(source, dict):
        return source
    text = Path(source).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{source}: invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise SchemaError(f"{source}: top level must be an object")
    return obj


def _check_keys(obj: dict, where: str, required: tuple, optional: tuple = ()) -> None:
    for k in required:
        if k not in obj:
            raise SchemaError(f"{where}: missing key {k!r}")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise SchemaError(f"{where}: unknown keys {sorted(unknown)}")


def _check_schema(obj: dict, where: str) -> None:
    if obj.get("schema") != SCHEMA_VERSION:
        raise SchemaError(f"{where}: expected \"schema\": {SCHEMA_VERSION}")


def _watts(obj, where: str, key: str, optional: bool = False) -> Optional[float]:
    if key not in obj or obj[key] is None:
        if optional:
            return None
        raise SchemaError(f"{where}: missing key {key!r}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (str, int, float)):
        raise SchemaError(f"{where}: {key} must be a decimal string or number")
    try:
        f = float(v)
    except ValueError:
        raise SchemaError(f"{where}: {key} is not a decimal: {v!r}") from None
    if f != f or f in (float("inf"), float("-inf")):
        raise SchemaError(f"{where}: {key} must be finite")
    return f


def _fmt(v: Optional[float]) -> Optional[str]:
    return None if v is None else repr(float(v))


def _int(obj, where: str, key: str) -> int:
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where}: {key} must be an integer")
    return v


# ---------------------------------------------------------------------------
# function specs and libraries

_FN_REQUIRED = ("input_bits", "output_bits", "n_inputs", "n_outputs",
                "dyn_on_watts", "dyn_off_watts", "state_count")
_FN_OPTIONAL = ("name", "static_watts", "variant_of")


def _function_spec(key: str, obj: dict, where: str) -> FunctionSpec:
    _check_keys(obj, f"{where}.{key}", _FN_REQUIRED, _FN_OPTIONAL)
    return FunctionSpec(
        name=obj.get("name", key),
        input_bits=_int(obj, where, "input_bits"),
        output_bits=_int(obj, where, "output_bits"),
        n_inputs=_int(obj, where, "n_inputs"),
        n_outputs=_int(obj, where, "n_outputs"),
        dyn_on_watts=_watts(obj, where, "dyn_on_watts"),
        dyn_off_watts=_watts(obj, where, "dyn_off_watts"),
        state_count=_int(obj, where, "state_count"),
        static_watts=_watts(obj, where, "static_watts", optional=True),
        variant_of=obj.get("variant_of"),
    )


def _function_dict(fn: FunctionSpec) -> dict:
    out = {
        "name": fn.name,
        "input_bits": fn.input_bits,
        "output_bits": fn.output_bits,
        "n_inputs": fn.n_inputs,
        "n_outputs": fn.n_outputs,
        "dyn_on_watts": _fmt(fn.dyn_on_watts),
        "dyn_off_watts": _fmt(fn.dyn_off_watts),
        "state_count": fn.state_count,
    }
    if fn.static_watts is not None:
        out["static_watts"] = _fmt(fn.static_watts)
    if fn.variant_of is not None:
        out["variant_of"] = fn.variant_of
    return out


def load_library(source: Source) -> dict[str, FunctionSpec]:
    obj = _load(source)
    _check_schema(obj, "library")
    _check_keys(obj, "library", ("schema", "functions"), ("note",))
    if not isinstance(obj["functions"], dict):
        raise SchemaError("library: functions must be an object")
    return {k: _function_spec(k, v, "library.functions")
            for k, v in obj["functions"].items()}


def dump_library(functions: dict[str, FunctionSpec], note: Optional[str] = None) -> dict:
    out = {"schema": SCHEMA_VERSION,
           "functions": {k: _function_dict(fn) for k, fn in functions.items()}}
    if note:
        out["note"] = note
    return out


# ---------------------------------------------------------------------------
# designs

def load_design(source: Source) -> DesignSpec:
    obj = _load(source)
    _check_schema(obj, "design")
    _check_keys(obj, "design",
                ("schema", "name", "storage", "program", "functions",
                 "instances", "routing", "costs"), ("note",))
    storage = []
    for e in obj["storage"]:
        _check_keys(e, "design.storage", ("name", "width_bits"), ("input",))
        storage.append(StorageElement(e["name"], _int(e, "storage", "width_bits"),
                                      bool(e.get("input", False))))
    pr = obj["program"]
    _check_keys(pr, "design.program", ("instructions",), ("cyclic",))
    instructions = []
    for ins in pr["instructions"]:
        _check_keys(ins, "design.program.instructions", ("function", "params"),
                    ("instance",))
        instructions.append(Instruction(ins["function"], tuple(ins["params"]),
                                        ins.get("instance")))
    program = ProgramSpec(tuple(instructions), bool(pr.get("cyclic", True)))
    functions = {k: _function_spec(k, v, "design.functions")
                 for k, v in obj["functions"].items()}
    instances = []
    for key in obj["instances"]:
        fn, _, occ = key.partition("#")
        if not occ.isdigit():
            raise SchemaError(f"design.instances: bad instance key {key!r}")
        instances.append(InstanceRef(fn, int(occ)))
    rt = obj["routing"]
    _check_keys(rt, "design.routing", ("n", "rows"))
    routing = RoutingMatrix(_int(rt, "routing", "n"),
                            tuple(tuple(int(v) for v in row) for row in rt["rows"]))
    cv = obj["costs"]
    _check_keys(cv, "design.costs", ("bits",))
    costs = CostVector(tuple(int(v) for v in cv["bits"]))
    return DesignSpec(obj["name"], tuple(storage), program, functions,
                      tuple(instances), routing, costs)


def dump_design(design: DesignSpec, note: Optional[str] = None) -> dict:
    out = {
        "schema": SCHEMA_VERSION,
        "name": design.name,
        "storage": [
            {"name": e.name, "width_bits": e.width_bits, **({"input": True} if e.is_input else {})}
            for e in design.storage
        ],
        "program": {
            "cyclic": design.program.cyclic,
            "instructions": [
                {"function": i.function, "params": list(i.params),
                 **({"instance": i.instance} if i.instance is not None else {})}
                for i in design.program.instructions
            ],
        },
        "functions": {k: _function_dict(fn) for k, fn in design.functions.items()},
        "instances": [r.key for r in design.instances],
        "routing": {"n": design.routing.n, "rows": [list(r) for r in design.routing.entries]},
        "costs": {"bits": list(design.costs.bits)},
    }
    if note:
        out["note"] = note
    return out


# ---------------------------------------------------------------------------
# activities, measurements, calibrations, params

def load_activity(source: Source) -> tuple[str, ActivityProfile]:
    obj = _load(source)
    _check_schema(obj, "activity")
    _check_keys(obj, "activity", ("schema", "design", "period_states", "active"),
                ("l_div", "note"))
    active = {k: int(v) for k, v in obj["active"].items()}
    l_div = obj.get("l_div")
    if l_div is not None:
        l_div = int(l_div)
    return obj["design"], ActivityProfile(_int(obj, "activity", "period_states"),
                                          active, l_div)


def dump_activity(design_name: str, profile: ActivityProfile,
                  note: Optional[str] = None) -> dict:
    out = {"schema": SCHEMA_VERSION, "design": design_name,
           "period_states": profile.period_states,
           "active": dict(sorted(profile.active.items()))}
    if profile.l_div is not None:
        out["l_div"] = profile.l_div
    if note:
        out["note"] = note
    return out


def load_measurement(source: Source) -> tuple[str, MeasuredPower]:
    obj = _load(source)
    _check_schema(obj, "measurement")
    _check_keys(obj, "measurement",
                ("schema", "design", "dynamic_watts", "static_watts"), ("note",))
    return obj["design"], MeasuredPower(_watts(obj, "measurement", "dynamic_watts"),
                                        _watts(obj, "measurement", "static_watts"))


def dump_measurement(design_name: str, m: MeasuredPower) -> dict:
    return {"schema": SCHEMA_VERSION, "design": design_name,
            "dynamic_watts": _fmt(m.dynamic_watts),
            "static_watts": _fmt(m.static_watts)}


def load_calibration(source: Source) -> CalibrationResult:
    obj = _load(source)
    _check_schema(obj, "calibration")
    _check_keys(obj, "calibration",
                ("schema", "pr1_watts_per_bit", "residual_watts", "routing_bits",
                 "noise_std", "sigma", "gamma_watts", "pd_c_watts"),
                ("source_design", "note"))
    return CalibrationResult(
        pr1_watts_per_bit=_watts(obj, "calibration", "pr1_watts_per_bit"),
        residual_watts=_watts(obj, "calibration", "residual_watts"),
        routing_bits=_int(obj, "calibration", "routing_bits"),
        noise_std=_watts(obj, "calibration", "noise_std"),
        sigma=_watts(obj, "calibration", "sigma"),
        gamma_watts=_watts(obj, "calibration", "gamma_watts"),
        pd_c_watts=_watts(obj, "calibration", "pd_c_watts"),
    )


def dump_calibration(cal: CalibrationResult, source_design: Optional[str] = None) -> dict:
    out = {
        "schema": SCHEMA_VERSION,
        "pr1_watts_per_bit": _fmt(cal.pr1_watts_per_bit),
        "residual_watts": _fmt(cal.residual_watts),
        "routing_bits": cal.routing_bits,
        "noise_std": _fmt(cal.noise_std),
        "sigma": _fmt(cal.sigma),
        "gamma_watts": _fmt(cal.gamma_watts),
        "pd_c_watts": _fmt(cal.pd_c_watts),
    }
    if source_design:
        out["source_design"] = source_design
    return out


def load_params(source: Source) -> PowerParams:
    obj = _load(source)
    _check_schema(obj, "params")
    _check_keys(obj, "params", ("schema",),
                ("ps_c_watts", "pd_c_watts", "pr1_watts_per_bit",
                 "pr1_static_watts_per_bit", "sigma", "seed", "l_div", "note"))
    return PowerParams(
        ps_c_watts=_watts(obj, "params", "ps_c_watts", optional=True) or 0.0,
        pd_c_watts=_watts(obj, "params", "pd_c_watts", optional=True) or 0.0,
        pr1_watts_per_bit=_watts(obj, "params", "pr1_watts_per_bit", optional=True),
        pr1_static_watts_per_bit=_watts(obj, "params", "pr1_static_watts_per_bit",
                                        optional=True),
        sigma=_watts(obj, "params", "sigma", optional=True) or 0.0,
        seed=int(obj.get("seed", 0)),
        l_div=int(obj["l_div"]) if obj.get("l_div") is not None else None,
    )


# ---------------------------------------------------------------------------
# prediction reports

def _estimate_dict(est: PowerEstimate) -> dict:
    return {"mean_watts": _fmt(est.mean_watts), "std_watts": _fmt(est.std_watts),
            "breakdown": {k: _fmt(v) for k, v in est.breakdown.items()}}


def _estimate_from(obj: dict, where: str) -> PowerEstimate:
    _check_keys(obj, where, ("mean_watts", "std_watts", "breakdown"))
    return PowerEstimate(_watts(obj, where, "mean_watts"),
                         _watts(obj, where, "std_watts"),
                         {k: float(v) for k, v in obj["breakdown"].items()})


def dump_report(report: PredictionReport) -> dict:
    out = {
        "schema": SCHEMA_VERSION,
        "design": report.design,
        "dynamic": _estimate_dict(report.dynamic),
    }
    if report.static is not None:
        out["static"] = _estimate_dict(report.static)
    if report.measured is not None:
        out["measured"] = {"dynamic_watts": _fmt(report.measured.dynamic_watts),
                           "static_watts": _fmt(report.measured.static_watts)}
        out["abs_error_watts"] = _fmt(report.abs_error_watts)
        out["rel_error"] = _fmt(report.rel_error)
    return out


def load_report(source: Source) -> PredictionReport:
    obj = _load(source)
    _check_schema(obj, "report")
    _check_keys(obj, "report", ("schema", "design", "dynamic"),
                ("static", "measured", "abs_error_watts", "rel_error", "note"))
    measured = None
    abs_err = rel_err = None
    if "measured" in obj:
        m = obj["measured"]
        _check_keys(m, "report.measured", ("dynamic_watts", "static_watts"))
        measured = MeasuredPower(_watts(m, "report.measured", "dynamic_watts"),
                                 _watts(m, "report.measured", "static_watts"))
        abs_err = _watts(obj, "report", "abs_error_watts", optional=True)
        rel_err = _watts(obj, "report", "rel_error", optional=True)
    static = _estimate_from(obj["static"], "report.static") if "static" in obj else None
    return PredictionReport(obj["design"], _estimate_from(obj["dynamic"], "report.dynamic"),
                            static, measured, abs_err, rel_err)


# ---------------------------------------------------------------------------
# auxiliary files

def load_stub_counts(source: Source) -> dict[str, int]:
    obj = _load(source)
    _check_schema(obj, "stub-counts")
    _check_keys(obj, "stub-counts", ("schema", "state_counts"), ("note",))
    return {k: int(v) for k, v in obj["state_counts"].items()}


def load_impls(source: Source):
    """Implementation file: mini-language bodies plus per-call state costs."""
    from .sim import impl_from_source
    obj = _load(source)
    _check_schema(obj, "impls")
    _check_keys(obj, "impls", ("schema", "functions"), ("note",))
    impls = {}
    for name, spec in obj["functions"].items():
        _check_keys(spec, f"impls.{name}", ("source", "state_cost"))
        impls[name] = impl_from_source(name, spec["source"], int(spec["state_cost"]))
    return impls


def load_resources(source: Source) -> dict[str, dict[str, int]]:
    """Synthesis resource usage constants: fixture data, never recomputed."""
    obj = _load(source)
    _check_schema(obj, "resources")
    _check_keys(obj, "resources", ("schema", "designs"), ("note",))
    out = {}
    for name, row in obj["designs"].items():
        _check_keys(row, f"resources.{name}", ("logic_slices", "flip_flops"))
        out[name] = {"logic_slices": int(row["logic_slices"]),
                     "flip_flops": int(row["flip_flops"])}
    return out


def write_json(path: Union[str, Path], obj: dict) -> None:
    """Atomic write with a stable layout (sorted keys preserved as given)."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2) + "\n")
    tmp.replace(path)
