"""toffsim: dense simulation and resource calculus for measurement-based
Toffoli gates built from distilled two-qubit ancillas.

Subpackages split along the pipeline: `core` (labeled-qubit simulator),
`gadgets` (ancilla synthesis and the Toffoli measurement gadget), `distill`
(ancilla purification algebra and costs), `noisy_meas` (cat-state mediated
transversal measurements under errors), `error_models` (decoherent and
coherent error statistics), `concat` (log-space concatenation estimates).
"""

from ._kernels import BACKEND as kernel_backend
from .core import (
    GateSpec,
    MeasurementRecord,
    PauliOperator,
    QuantumState,
    Qubit,
    apply_gate,
    apply_matrix,
    discard,
    fidelity,
    gate,
    measure_operator,
    tensor,
)

__version__ = "0.1.0"

__all__ = [
    "GateSpec",
    "MeasurementRecord",
    "PauliOperator",
    "QuantumState",
    "Qubit",
    "apply_gate",
    "apply_matrix",
    "discard",
    "fidelity",
    "gate",
    "kernel_backend",
    "measure_operator",
    "tensor",
    "__version__",
]
