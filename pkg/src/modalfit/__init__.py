"""Structure-preserving vector fitting for modally damped second-order systems.

Three fitting methods share one fixed-point engine:

``vf``
    classical vector fitting, returning a first-order pole-residue model;
``sovf1``
    structured numerator over an unstructured denominator;
``sovf2``
    structured numerator and denominator, with expansion points moved by a
    quadratic eigenvalue problem.

The structured methods return a :class:`SecondOrderModel`
``H(s) = sum_j omega_j b_j / (s^2 + 2 psi_j omega_j s + omega_j^2)``.
"""

from .bench import (
    DenseSecondOrderSystem,
    ModalDecomposition,
    add_noise,
    make_point_grid,
    make_rayleigh_chain,
    modal_decompose,
    sample_dense,
)
from .engine import fit, fit_sovf1, fit_sovf2, fit_vf, init_pole_set, init_poles, warm_start_pairs
from .exceptions import (
    DegeneratePairError,
    ModalFitError,
    NotRepresentableError,
    PairingError,
    PoleEvaluationError,
    RealnessError,
    ResonanceError,
    SingularMassError,
    StructureError,
    SupportPointError,
)
from .lsq import LSSolution, WeightedLS, solve_weighted_ls
from .poles import split_pairs, stabilize, zeros_so1, zeros_so2, zeros_unstructured
from .transfer import (
    eval_first_order,
    eval_full,
    eval_model,
    eval_partial,
    eval_second_order,
    eval_unstructured,
    expand_to_first_order,
    pointwise_relative_error,
)
from .types import (
    FirstOrderModel,
    FitReport,
    FrequencySampleSet,
    FullyStructuredBarycentric,
    InitStrategy,
    IterationConfig,
    IterationRecord,
    PartialStructuredBarycentric,
    PolePair,
    PolePairSet,
    PoleSet,
    SecondOrderModel,
    Termination,
    UnstructuredBarycentric,
)

__version__ = "0.1.0"
