"""Possibilistic rule-based systems: inference, parameter learning and inversion with min-max algebra."""

from .core import (
    Domain,
    ValidationError,
    antipignistic,
    antipignistic_inverse,
    maxeps_product,
    min_specificity,
    minmax_product,
    necessity_measure,
    possibility_measure,
)
from .partition import PartitionIndex, build_partition, psi_index
from .inference import (
    Cascade,
    PremiseDegrees,
    Proposition,
    Rule,
    RuleSet,
    chain,
    infer,
    inference_matrix,
    premise_degrees,
)
from .learning import (
    EquationSystem,
    NoReliableSamples,
    Sample,
    SolveResult,
    ThresholdConfig,
    build_system,
    cascade_learn,
    chebyshev_distance,
    learn_ruleset,
    reliable,
    solve,
    threshold_search,
)
from .backprop import Conflict, OmegaSystem, PremiseSolution, UnsupportedPremiseShape, solve_omega, targeted_inputs

__version__ = "0.1.0"
