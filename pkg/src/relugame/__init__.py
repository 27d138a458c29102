"""Feed-forward ReLU and Softplus networks viewed as zero-sum stopping games."""

from .bounds import IntervalVector, LayerIntervals, boundary, interval_propagate, value_with_boundary
from .certify import (Certificate, CertificateError, Refusal, cell_membership, certify_accept,
                      certify_reject, check_certificate, classify, reject_cell_membership)
from .entropic import (EntropicError, EntropicValueTable, GibbsPolicy, entropic_value,
                       entropic_value_given_policy, free_energy_report, gibbs_policies,
                       tau_limit_report)
from .game import (CEMETERY, MINUS, PLUS, GameError, GameGraph, GameState, TerminalReward,
                   build_game, export_dot, terminal_reward_from_input)
from .network import (NetworkError, NetworkSpec, forward_relu, forward_softplus, load_network,
                      random_network, save_network, validate)
from .paths import (PathError, Trajectory, enumerate_paths, maxmin_bruteforce, monte_carlo_value,
                    path_probability, path_reward, value_by_enumeration)
from .value import (PolicyError, PolicyPair, ValueTable, check_game_equivalence,
                    fixed_policy_value_max, fixed_policy_value_min, lipschitz_bound,
                    optimal_policies, policy_fingerprint, policy_pair_value, shapley_value)

__version__ = "0.1.0"

__all__ = [
    "IntervalVector",
    "LayerIntervals",
    "boundary",
    "interval_propagate",
    "value_with_boundary",
    "Certificate",
    "CertificateError",
    "Refusal",
    "cell_membership",
    "certify_accept",
    "certify_reject",
    "check_certificate",
    "classify",
    "reject_cell_membership",
    "EntropicError",
    "EntropicValueTable",
    "GibbsPolicy",
    "entropic_value",
    "entropic_value_given_policy",
    "free_energy_report",
    "gibbs_policies",
    "tau_limit_report",
    "CEMETERY",
    "MINUS",
    "PLUS",
    "GameError",
    "GameGraph",
    "GameState",
    "TerminalReward",
    "build_game",
    "export_dot",
    "terminal_reward_from_input",
    "NetworkError",
    "NetworkSpec",
    "forward_relu",
    "forward_softplus",
    "load_network",
    "random_network",
    "save_network",
    "validate",
    "PathError",
    "Trajectory",
    "enumerate_paths",
    "maxmin_bruteforce",
    "monte_carlo_value",
    "path_probability",
    "path_reward",
    "value_by_enumeration",
    "PolicyError",
    "PolicyPair",
    "ValueTable",
    "check_game_equivalence",
    "fixed_policy_value_max",
    "fixed_policy_value_min",
    "lipschitz_bound",
    "optimal_policies",
    "policy_fingerprint",
    "policy_pair_value",
    "shapley_value",
]
