"""RIS reconfiguration: phases, phase-coupled amplitudes, effective channels.

A practical reflecting element cannot hold unit amplitude at every phase;
its amplitude follows

    beta(theta) = (1 - beta_min) * ((sin(theta - phi) + 1) / 2)**alpha + beta_min

which dips to beta_min at theta = phi - pi/2 and recovers to 1 at
theta = phi + pi/2.  The "ideal" mode pins every amplitude to 1.  Because
the amplitude is derived from the phase by construction, the amplitude
equality constraint can never be violated downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .config import ScenarioConfig


def wrap_phase(theta):
    """Wrap angles into [-pi, pi); +pi lands on -pi."""
    return np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


def amplitude_response(theta, beta_min: float, alpha: float, phi: float):
    """Element amplitude in [beta_min, 1] for phase ``theta`` (scalar or array)."""
    if beta_min == 1.0:
        return np.ones_like(np.asarray(theta, dtype=float))
    s = (np.sin(np.asarray(theta, dtype=float) - phi) + 1.0) / 2.0
    return (1.0 - beta_min) * s ** alpha + beta_min


@dataclass(frozen=True)
class RisState:
    """Phases in [-pi, pi), matching amplitudes, and the mode that tied them."""
    theta: np.ndarray       # (N,) rad
    beta: np.ndarray        # (N,) in [beta_min, 1]
    mode: str               # "ideal" | "practical"

    @property
    def reflection_row(self) -> np.ndarray:
        """(N,) row of beta_n * exp(j theta_n); left-multiplies the cascaded channel."""
        return self.beta * np.exp(1j * self.theta)

    @property
    def reconfiguration_matrix(self) -> np.ndarray:
        """Diagonal N x N matrix applied by the surface."""
        return np.diag(self.reflection_row)


def build_ris_state(theta, cfg: ScenarioConfig, mode: str | None = None) -> RisState:
    """Wrap phases and derive amplitudes per the configured element model."""
    mode = cfg.ris_mode if mode is None else mode
    if mode not in ("ideal", "practical"):
        raise ValueError(f"unknown RIS mode {mode!r}")
    theta = wrap_phase(theta)
    if theta.ndim != 1:
        raise ValueError("theta must be a flat phase vector")
    if mode == "ideal":
        beta = np.ones_like(theta)
    else:
        beta = amplitude_response(theta, cfg.beta_min, cfg.alpha_steep, cfg.phi_shift)
    return RisState(theta=theta, beta=beta, mode=mode)


@dataclass(frozen=True)
class EffectiveChannels:
    """Per-actuator cascaded channels H_tilde[k] = diag(conj(h_k)) @ H, (K, N, M)."""
    h_tilde: np.ndarray


def effective_channels(ris: RisState, ch: ChannelSet) -> tuple[EffectiveChannels, np.ndarray]:
    """Cascade the surface into each link.

    Returns the per-actuator N x M matrices plus the composite rows
    g[k] = reflection_row @ h_tilde[k], shape (K, M): the end-to-end channel
    each beamformer sees.  Row-times-matrix here is algebraically identical
    to conj(h_k) . diag(beta e^{j theta}) . H, which the tests cross-check.
    """
    n_ris, _ = ch.H.shape
    if ris.theta.shape != (n_ris,):
        raise ValueError(
            f"RIS state has {ris.theta.shape[0]} elements, channel expects {n_ris}")
    h_tilde = ch.h_ris.conj()[:, :, None] * ch.H[None, :, :]
    g = np.einsum("n,knm->km", ris.reflection_row, h_tilde)
    return EffectiveChannels(h_tilde=h_tilde), g
