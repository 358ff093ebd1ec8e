"""Dense quantum-state kernel: registers, Pauli words, measurements, noise."""

from .pauli import PauliWord
from .states import (
    DEFAULT_MAX_QUBITS,
    DensityMatrix,
    Layout,
    QubitBudgetError,
    RegisterError,
    StateVector,
    apply_cnot_layer,
    apply_hadamard_layer,
    apply_pauli,
    attach_epr,
    basis_state,
    controlled_apply,
    controlled_word,
    dump_json,
    epr_state,
    fidelity,
    from_amplitudes,
    load_json,
    max_qubits,
    partial_trace,
    purify,
    reduce_pure,
    tensor,
    to_density,
    trace_distance,
    zero_state,
)
from .measure import (
    DenseProjector,
    DiagProjector,
    KetProjector,
    MeasurementError,
    Pvm,
    WordProjector,
    bell_kets,
    bell_measure,
    bell_pvm,
    contract_epr,
    measure_pvm,
    pvm_branches,
    pvm_distribution,
)
from .channels import depolarize

__all__ = [
    "DEFAULT_MAX_QUBITS",
    "DensityMatrix",
    "DenseProjector",
    "DiagProjector",
    "KetProjector",
    "Layout",
    "MeasurementError",
    "PauliWord",
    "Pvm",
    "QubitBudgetError",
    "RegisterError",
    "StateVector",
    "WordProjector",
    "apply_cnot_layer",
    "apply_hadamard_layer",
    "apply_pauli",
    "attach_epr",
    "basis_state",
    "bell_kets",
    "bell_measure",
    "bell_pvm",
    "contract_epr",
    "controlled_apply",
    "controlled_word",
    "depolarize",
    "dump_json",
    "epr_state",
    "fidelity",
    "from_amplitudes",
    "load_json",
    "max_qubits",
    "measure_pvm",
    "partial_trace",
    "purify",
    "pvm_branches",
    "pvm_distribution",
    "reduce_pure",
    "tensor",
    "to_density",
    "trace_distance",
    "zero_state",
]
