"""Finite-dimensional quantum measurement toolkit.

States and observables, POVMs, completely positive instruments, indirect
measurement models and their dilations, and joint statistics of
measurement sequences.
"""
from ._backend import backend_name
from .dilation import (
    IndirectModel,
    model_induced_povm,
    model_instrument,
    model_nonselective_state,
    model_output_distribution,
    model_post_state,
    realize,
)
from .errors import DimensionMismatch, ParseError, QInstrumentError, ValidationError
from .instrument import (
    ChoiMatrix,
    Instrument,
    Operation,
    RawSuperoperator,
    apply,
    choi_matrix,
    conditional_distribution,
    dual_apply,
    effect,
    induced_povm,
    is_completely_positive,
    joint_distribution,
    kraus_from_choi,
    luders_instrument,
    outcome_probability,
    post_state,
    selective_operation,
    tensor_extend,
    transpose_pseudo_instrument,
    von_neumann_instrument,
)
from .povm import Povm, event_probability, outcome_distribution, spectral_povm, validate_povm
from .quantum import (
    DensityOperator,
    Observable,
    OutcomeDistribution,
    born_distribution,
    evolve,
    make_density,
    mean_and_std,
    mix,
    pure_state,
    robertson_gap,
    spectral_measure,
)
from .seqsim import (
    JointDistribution,
    MeasurementStep,
    Scenario,
    generalized_wigner_joint,
    sample_trajectories,
    wigner_joint,
)

__version__ = "0.1.0"
