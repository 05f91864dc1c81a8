"""Robust adaptive submodular maximization: greedy policies, exact oracle and property checkers."""
from .constraints import Cardinality, ExplicitSystem, PartitionMatroid, verify_p_system
from .model import (
    Instance,
    Prior,
    TableUtility,
    ValidationError,
    ResourceCapError,
    SearchSpaceTooLarge,
    SupportTooLarge,
    partial,
)
from .oracle import eval_exact, eval_expected_wc, opt_average_case, opt_worst_case
from .policies import Environment, optimal_q_cardinality, optimal_q_matroid, policy_from_dict

__version__ = "0.1.0"
