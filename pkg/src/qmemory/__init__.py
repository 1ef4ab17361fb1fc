"""Quantum statistical memory of stochastic processes, exact and inferred.

The exact side starts from a unifilar hidden Markov model
(:func:`zoo_machine`, :func:`validate_machine`) and computes the classical
statistical complexity and the quantum statistical memory of its phaseless
unitary model. The inference side estimates the same quantity from a finite
symbol sequence (:func:`estimate_cq`) together with an effective Markov
order (:func:`effective_markov_order`).
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import ConfigError, DataError, NumericalError, QMemoryError
from .inference import (
    InferredModel,
    JointDistribution,
    estimate_cq,
    infer_from_words,
    inferred_gram,
    inferred_joint,
    sweep,
)
from .perturbation import (
    PerturbationSpec,
    ScalingReport,
    WeylReport,
    first_order_delta_gram,
    noise_scaling_experiment,
    perturb,
    random_deviation,
    weyl_check,
)
from .process import (
    Machine,
    MachineDefinition,
    SymbolSequence,
    load_zoo,
    sample_sequence,
    stationary_distribution,
    validate_machine,
    word_probabilities,
    word_probability,
    zoo_machine,
    zoo_names,
)
from .quantum import (
    GramMatrix,
    OverlapMatrix,
    SpectralReport,
    UnitaryModel,
    gram_from_overlaps,
    memory_overlaps,
    quantum_statistical_memory,
    reconstruct_model,
    spectral_entropy,
    statistical_complexity,
)
from .rng import derive_seed
from .words import (
    ConditionalTable,
    EmoProfile,
    WordDistribution,
    conditional_next,
    count_words,
    effective_markov_order,
    l_max_guideline,
    trace_distance,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NumericalError",
    "QMemoryError",
    "BACKEND",
    "ConditionalTable",
    "EmoProfile",
    "GramMatrix",
    "InferredModel",
    "JointDistribution",
    "Machine",
    "MachineDefinition",
    "OverlapMatrix",
    "PerturbationSpec",
    "ScalingReport",
    "SpectralReport",
    "SymbolSequence",
    "UnitaryModel",
    "WeylReport",
    "WordDistribution",
    "conditional_next",
    "count_words",
    "derive_seed",
    "effective_markov_order",
    "estimate_cq",
    "first_order_delta_gram",
    "gram_from_overlaps",
    "infer_from_words",
    "inferred_gram",
    "inferred_joint",
    "l_max_guideline",
    "load_zoo",
    "memory_overlaps",
    "noise_scaling_experiment",
    "perturb",
    "quantum_statistical_memory",
    "random_deviation",
    "reconstruct_model",
    "sample_sequence",
    "spectral_entropy",
    "stationary_distribution",
    "statistical_complexity",
    "sweep",
    "trace_distance",
    "validate_machine",
    "weyl_check",
    "word_probabilities",
    "word_probability",
    "zoo_machine",
    "zoo_names",
]
