"""Expanding-window RLNC broadcast design for layered video GOPs."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .analytic import (eta, layer_decoding_probs, reception_prob, throughput_weights,
                       uncoded_eta, uncoded_layer_success)
from .channel import SimResult, apply_mdp_policy, apply_policy, generate_pattern, monte_carlo
from .core import (ChannelSpec, ContractViolation, GopLayout, ReceptionVector,
                   ResourceLimitError, TxPolicy, decoding_steps, l_max, validate_weights)
from .mdp import MdpSolution, solve_multi, solve_single, transition
from .optimize import (AggregateSpec, ParetoPoint, enumerate_policies, jain_index,
                       optimize_multi, optimize_single, pareto_sweep, select_opt_layer)
from .packetize import GopFrameSizes, layout_for, transmission_budget
