"""hlsinterp: interpreter-style accelerator modeling.

Designs are modelled as a stored program dispatching over a function library
with explicit storage; the toolkit lowers mini-language sources to
hierarchical state machines, co-simulates both forms, and predicts design
power from calibrations performed on prior designs.
"""

from .design import (
    CostVector,
    DesignSpec,
    Diagnostic,
    FunctionSpec,
    InstanceRef,
    Instruction,
    MeasuredPower,
    ProgramSpec,
    RoutingMatrix,
    StorageElement,
    derive_routing,
    routing_bits,
    validate_design,
)
from .errors import (
    DimensionError,
    FlattenError,
    FuelExhausted,
    HlsInterpError,
    InfeasibleError,
    ParseError,
    PowerModelError,
    SchemaError,
    SimError,
    TransformError,
    ValidationError,
)
from .fsm import (
    canonical_hash,
    dump,
    run_fsm,
    run_graph,
    state_count,
    translate,
)
from .lang import TaskGraph, evaluate, normalize, parse, unparse
from .passes import arithmetic_reduce, graph_op_count, loop_perforate
from .power import (
    ActivityProfile,
    CalibrationResult,
    PowerEstimate,
    PowerParams,
    PredictionReport,
    calibrate_routing,
    cap_activity,
    dynamic_power,
    gamma,
    gamma_parts,
    predict,
    sample_power,
    static_power,
    substitute_optimized,
)
from .sim import (
    EngineState,
    FunctionImpl,
    TraceRecord,
    extract_activity,
    impl_from_source,
    initial_state,
    run_periods,
    step,
    trace_to_csv,
)

__version__ = "0.1.0"
