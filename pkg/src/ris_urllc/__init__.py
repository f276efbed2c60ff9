"""RIS-aided MISO URLLC downlink lab.

Simulates a multi-antenna base station serving single-antenna actuators
through a reconfigurable reflecting surface with phase-dependent element
amplitudes, scores decisions with finite-blocklength rates, and learns the
joint (phases, beamformers, blocklengths) allocation with a from-scratch
twin-delayed deterministic policy gradient agent.
"""

__version__ = "0.1.0"

from .config import (ConfigError, LearnConfig, ScenarioConfig, geometry,
                     load_config, noise_power)
from .channel import ChannelSet, SteeringSpec, draw_channels, pathloss_linear, steering_vector
from .ris import RisState, amplitude_response, build_ris_state, effective_channels
from .fbl import bler, capacity, dispersion, fbl_bits, q_func, q_inv, sinr_vector, total_objective
from .precoding import BeamformerSet, mmse_precoder, solve_hermitian, zf_precoder
from .env import AllocationDecision, RisUrllcEnv, decode_action, encode_state
from .td3 import ReplayBuffer, Td3Agent, train

__all__ = [
    "ConfigError", "LearnConfig", "ScenarioConfig", "geometry", "load_config",
    "noise_power", "ChannelSet", "SteeringSpec", "draw_channels",
    "pathloss_linear", "steering_vector", "RisState", "amplitude_response",
    "build_ris_state", "effective_channels", "bler", "capacity", "dispersion",
    "fbl_bits", "q_func", "q_inv", "sinr_vector", "total_objective",
    "BeamformerSet", "mmse_precoder", "solve_hermitian", "zf_precoder",
    "AllocationDecision", "RisUrllcEnv", "decode_action", "encode_state",
    "ReplayBuffer", "Td3Agent", "train",
]
