"""fusilli: declarative stream pipelines compiled to single fused C loops.

The package guarantees complete fusion structurally: the code-construction
interface cannot express a function call, a heap allocation, or an aggregate
value, so any pipeline built from map/filter/take/drop/zip/flat_map compiles
to one first-order imperative loop nest.
"""

__version__ = "0.1.0"

from .backend import (
    ARITH_OPS,
    BOOL,
    CMP_OPS,
    FLOAT,
    INT,
    UNIT,
    ArrT,
    Backend,
    BackendMixError,
    CodegenError,
    CodeVal,
    EmitUnit,
    TypeMismatchError,
    UnboundVarError,
    VarRef,
    validate_unit,
)
from .cgen import CSrc, FusionReport, STRICT_CFLAGS, c_tokens, fusion_scan, render
from .combinators import Stream, iota, of_arr, range_, zip_with
from .interp import DEFAULT_FUEL, EvalTrap, Interp, eval_count, eval_traced, eval_unit
from .peval import PEval, wrap
from .pipeline import (
    PipelineDesc,
    PipelineError,
    build_unit,
    check_pipeline,
    compile_to_c,
    from_json,
    parse_pipeline,
    pretty_pipeline,
    to_json,
)
from .streams import Linearized, StreamRep, StreamReuseError, linearize

__all__ = [name for name in dir() if not name.startswith("_")]
