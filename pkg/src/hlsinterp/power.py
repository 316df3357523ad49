"""Power estimation and calibration for interpreter-style accelerator designs.

Dynamic power decomposes into an interpreter constant, the period-averaged
function mix, and a routing term linear in the routed bit count:

    mean = pd_c + gamma + pr1 * routing_bits(R, D)

where gamma is computed in active-state-count form: with n_j active states
out of L period states for program slot j,

    gamma = sum_j [ n_j * on_j + (L - n_j) * off_j ] / L_div

L comes from the activity profile; the divisor defaults to L but can be
overridden (profile or parameters) for fixtures that must reproduce a
published figure computed with a different denominator. Static power uses
the same routing contraction with its own per-bit coefficient.

Calibration inverts the dynamic form on one measured design to recover the
per-bit routing power, with measurement noise shrinking by the bit count.
Noise is a single additive Gaussian per estimate (never per-function), only
sampled explicitly; estimates themselves are deterministic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Optional

from .design import DesignSpec, FunctionSpec, MeasuredPower, routing_bits
from .errors import InfeasibleError, PowerModelError


@dataclass(frozen=True)
class PowerParams:
    ps_c_watts: float = 0.0
    pd_c_watts: float = 0.0
    pr1_watts_per_bit: Optional[float] = None
    pr1_static_watts_per_bit: Optional[float] = None  # defaults to pr1 when unset
    sigma: float = 0.0
    seed: int = 0
    l_div: Optional[int] = None

    def __post_init__(self):
        if self.sigma < 0:
            raise PowerModelError("sigma must be >= 0")


@dataclass(frozen=True)
class ActivityProfile:
    """Active-state counts per program slot over one period of L states.

    ``l_div`` optionally pins the gamma divisor for this profile (fixtures
    reproducing published figures); it defaults to ``period_states``.
    """
    period_states: int
    active: dict[str, int]
    l_div: Optional[int] = None

    def __post_init__(self):
        if self.period_states < 1:
            raise PowerModelError("period_states must be >= 1")
        for slot, n in self.active.items():
            if n < 0:
                raise PowerModelError(f"negative active-state count for {slot}")
        if sum(self.active.values()) > self.period_states:
            raise PowerModelError(
                f"active states {sum(self.active.values())} exceed period length "
                f"{self.period_states}")


@dataclass(frozen=True)
class PowerEstimate:
    mean_watts: float
    std_watts: float
    breakdown: dict[str, float]

    @staticmethod
    def from_breakdown(breakdown: dict[str, float], std: float) -> "PowerEstimate":
        return PowerEstimate(sum(breakdown.values()), std, dict(breakdown))


@dataclass(frozen=True)
class GammaParts:
    numerator_watts: float
    divisor: int
    value: float


@dataclass(frozen=True)
class CalibrationResult:
    pr1_watts_per_bit: float
    residual_watts: float
    routing_bits: int
    noise_std: float
    sigma: float
    gamma_watts: float
    pd_c_watts: float


@dataclass(frozen=True)
class PredictionReport:
    design: str
    dynamic: PowerEstimate
    static: Optional[PowerEstimate] = None
    measured: Optional[MeasuredPower] = None
    abs_error_watts: Optional[float] = None
    rel_error: Optional[float] = None


def _slot_specs(design: DesignSpec, activity: ActivityProfile,
                library: Optional[dict]) -> list[tuple[str, int, FunctionSpec]]:
    functions = library if library is not None else design.functions
    slots = design.slot_keys()
    if set(activity.active) != set(slots):
        missing = set(slots) - set(activity.active)
        extra = set(activity.active) - set(slots)
        raise PowerModelError(
            f"activity/design slot mismatch (missing {sorted(missing)}, "
            f"unknown {sorted(extra)})")
    out = []
    for slot, ins in zip(slots, design.program.instructions):
        fn = functions.get(ins.function)
        if fn is None:
            raise PowerModelError(f"function {ins.function!r} missing from library")
        out.append((slot, activity.active[slot], fn))
    return out


def gamma_parts(design: DesignSpec, activity: ActivityProfile,
                library: Optional[dict] = None,
                l_div: Optional[int] = None) -> GammaParts:
    """Numerator, divisor and value of the function-mix average."""
    L = activity.period_states
    numerator = 0.0
    for _slot, n, fn in _slot_specs(design, activity, library):
        if n > L:
            raise PowerModelError(f"slot {_slot} active {n} of {L} states")
        numerator += n * fn.dyn_on_watts + (L - n) * fn.dyn_off_watts
    divisor = l_div or activity.l_div or L
    if divisor < 1:
        raise PowerModelError("gamma divisor must be >= 1")
    return GammaParts(numerator, divisor, numerator / divisor)


def gamma(design: DesignSpec, activity: ActivityProfile,
          library: Optional[dict] = None, l_div: Optional[int] = None) -> float:
    """Period-averaged dynamic power of the function mix (watts)."""
    return gamma_parts(design, activity, library, l_div).value


def dynamic_power(design: DesignSpec, activity: ActivityProfile,
                  library: Optional[dict] = None,
                  params: PowerParams = PowerParams()) -> PowerEstimate:
    """Mean dynamic power: interpreter constant + function mix + routing."""
    bits = routing_bits(design.routing, design.costs)
    pr1 = params.pr1_watts_per_bit
    if pr1 is None:
        if bits > 0:
            raise InfeasibleError(
                "routing coefficient not calibrated (pr1_watts_per_bit unset)")
        pr1 = 0.0
    g = gamma(design, activity, library, params.l_div)
    breakdown = {
        "interpreter_watts": params.pd_c_watts,
        "function_mix_watts": g,
        "routing_watts": pr1 * bits,
    }
    return PowerEstimate.from_breakdown(breakdown, params.sigma)


def static_power(design: DesignSpec, params: PowerParams = PowerParams(),
                 library: Optional[dict] = None) -> PowerEstimate:
    """Mean static power: constant + per-slot function statics + routing."""
    functions = library if library is not None else design.functions
    total = 0.0
    for ins in design.program.instructions:
        fn = functions[ins.function]
        if fn.static_watts is None:
            raise PowerModelError(f"static_watts not set for function {ins.function!r}")
        total += fn.static_watts
    bits = routing_bits(design.routing, design.costs)
    coeff = params.pr1_static_watts_per_bit
    if coeff is None:
        coeff = params.pr1_watts_per_bit
    if coeff is None:
        if bits > 0:
            raise InfeasibleError("no static routing coefficient available")
        coeff = 0.0
    breakdown = {
        "interpreter_watts": params.ps_c_watts,
        "function_static_watts": total,
        "routing_watts": coeff * bits,
    }
    return PowerEstimate.from_breakdown(breakdown, params.sigma)


def calibrate_routing(measured_dynamic_watts: float, gamma_watts: float,
                      bits: int,
                      params: PowerParams = PowerParams()) -> CalibrationResult:
    """Fit the per-bit routing power from one measured design.

    pr1 = (measured - pd_c - gamma) / bits; the reported noise std is
    sigma / bits (averaging over the routed bits shrinks the variance by
    the squared bit count).
    """
    if bits < 1:
        raise InfeasibleError(f"routing bit count must be >= 1, got {bits}")
    residual = measured_dynamic_watts - params.pd_c_watts - gamma_watts
    if residual < 0:
        raise InfeasibleError(
            f"negative routing residual {residual:.6f} W: measured power is below "
            "the modelled function mix")
    return CalibrationResult(
        pr1_watts_per_bit=residual / bits,
        residual_watts=residual,
        routing_bits=bits,
        noise_std=params.sigma / bits,
        sigma=params.sigma,
        gamma_watts=gamma_watts,
        pd_c_watts=params.pd_c_watts,
    )


def substitute_optimized(design: DesignSpec,
                         optimized_library: dict[str, FunctionSpec]) -> DesignSpec:
    """Swap in optimized variants for every baseline function they name.

    Replacement happens under the baseline registry key, so instructions,
    instances, routing and activity slots are untouched; all occurrences of a
    baseline switch at once. Returns the design unchanged when no variant
    applies.
    """
    variants: dict[str, FunctionSpec] = {}
    for spec in optimized_library.values():
        if spec.variant_of:
            variants[spec.variant_of] = spec
    replaced = False
    functions = dict(design.functions)
    for key, fn in design.functions.items():
        v = variants.get(key)
        if v is None:
            continue
        if (v.input_bits, v.output_bits, v.n_inputs, v.n_outputs) != (
                fn.input_bits, fn.output_bits, fn.n_inputs, fn.n_outputs):
            raise PowerModelError(
                f"variant {v.name!r} does not preserve the interface of {key!r}")
        functions[key] = v
        replaced = True
    if not replaced:
        return design
    return replace(design, name=design.name + "'", functions=functions)


def cap_activity(activity: ActivityProfile, design: DesignSpec,
                 library: Optional[dict] = None) -> ActivityProfile:
    """Clamp per-slot active states to each function's state count (applied
    after substitution, where a variant may have fewer states)."""
    functions = library if library is not None else design.functions
    slots = design.slot_keys()
    active = dict(activity.active)
    for slot, ins in zip(slots, design.program.instructions):
        fn = functions[ins.function]
        if slot in active:
            active[slot] = min(active[slot], fn.state_count)
    return ActivityProfile(activity.period_states, active, activity.l_div)


def predict(design: DesignSpec, activity: ActivityProfile,
            library: Optional[dict] = None,
            params: PowerParams = PowerParams(),
            measured: Optional[MeasuredPower] = None) -> PredictionReport:
    """Estimate a design's power with calibrated parameters; when a
    measurement is supplied, report absolute and relative dynamic error."""
    if params.pr1_watts_per_bit is None:
        raise InfeasibleError("prediction requires a calibrated pr1_watts_per_bit")
    dyn = dynamic_power(design, activity, library, params)
    functions = library if library is not None else design.functions
    stat = None
    if all(fn.static_watts is not None for fn in functions.values()):
        stat = static_power(design, params, library)
    abs_err = rel_err = None
    if measured is not None:
        abs_err = abs(dyn.mean_watts - measured.dynamic_watts)
        rel_err = abs_err / measured.dynamic_watts if measured.dynamic_watts else None
    return PredictionReport(design.name, dyn, stat, measured, abs_err, rel_err)


def sample_power(estimate: PowerEstimate, params: PowerParams) -> float:
    """Draw one noisy observation of an estimate; deterministic mean when
    sigma is zero, reproducible for a fixed seed otherwise. Each call uses a
    fresh generator, so concurrent estimates never share sampler state."""
    if estimate.std_watts == 0:
        return estimate.mean_watts
    rng = random.Random(params.seed)
    return estimate.mean_watts + rng.gauss(0.0, estimate.std_watts)
