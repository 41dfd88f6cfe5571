"""Hybrid quantum-classical sequence classification.

A recurrent cell keeps its memory as an n-qubit statevector, evolves it
with an input-conditioned unitary per token, and reads it out through
query-conditioned Hermitian observables over a shared Pauli pool.
Training runs exact reverse-mode (adjoint) gradients through the
simulation; parameter-shift and finite differences serve as oracles.
"""

from .cell import (
    CellConfig,
    QlamParams,
    ReadoutTrace,
    decode_observable,
    final_logits,
    forward,
    init_qlam_params,
    predict,
    query,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .circuits import AnsatzConfig, CircuitParams, apply_ansatz, apply_encoding, step
from .data import (
    DatasetBundle,
    FoldPlan,
    SequenceSample,
    load_cifar10_bin,
    load_dataset,
    load_idx,
    make_folds,
    to_sequence,
)
from .errors import (
    ConfigError,
    DataError,
    NumericError,
    ParseError,
    QlamError,
    ShapeError,
    ValidationError,
)
from .gradients import GradBundle, loss_and_grad, param_shift_grad
from .nn import adam_step, cosine_lr, softmax_cross_entropy
from .observables import (
    Observable,
    PauliString,
    ShotConfig,
    build_observable,
    default_pauli_pool,
    expectation_exact,
    expectation_sampled,
    pauli_expectation,
)
from .statevector import StateVector, new_zero_state, norm
from .trainer import (
    MetricsRow,
    TrainConfig,
    TrainResult,
    evaluate,
    read_metrics,
    run_folds,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AnsatzConfig", "CellConfig", "CircuitParams", "ConfigError", "DataError",
    "DatasetBundle", "FoldPlan", "GradBundle", "MetricsRow", "NumericError",
    "Observable", "ParseError", "PauliString", "QlamError", "QlamParams",
    "ReadoutTrace", "SequenceSample", "ShapeError", "ShotConfig", "StateVector",
    "TrainConfig", "TrainResult", "ValidationError", "adam_step", "apply_ansatz",
    "apply_encoding", "build_observable", "cosine_lr", "decode_observable",
    "default_pauli_pool", "evaluate", "expectation_exact", "expectation_sampled",
    "final_logits", "forward", "init_qlam_params", "load_checkpoint",
    "load_cifar10_bin", "load_dataset", "load_idx", "loss_and_grad", "make_folds",
    "new_zero_state", "norm", "param_shift_grad", "pauli_expectation", "predict",
    "query", "read_metrics", "run_folds", "save_checkpoint",
    "softmax_cross_entropy", "step", "to_sequence", "train",
]
