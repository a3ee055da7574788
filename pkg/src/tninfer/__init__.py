"""Exact inference for discrete graphical models by tensor network contraction."""

from .algebra import REAL, TROPICAL, RealScaled, Tropical, semiring_add, semiring_mul, to_log10
from .errors import (
    CapacityError,
    InconsistentEvidenceError,
    InferenceError,
    ParseError,
    ShapeError,
)
from .order import ComplexityReport, complexity_report, exhaustive_order, greedy_order
from .tasks import (
    MarginalTable,
    MpeSolution,
    SampleBatch,
    compute_mar,
    compute_mmap,
    compute_mpe,
    compute_pr,
    draw_samples,
)
from .tensor import LabeledTensor, TensorNetwork, contract_network, contract_pair, slice_tensor, unity_tensor
from .uai import ModelSpec, build_network, parse_evidence, parse_model, parse_query, write_result

__version__ = "0.1.0"
