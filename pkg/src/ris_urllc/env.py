"""MDP wrapper around the physical model.

The learner emits a flat action in [-1, 1]^(K + 2KM + N) laid out as

    [ blocklength raws (K) | beamformer magnitudes (K*M) |
      beamformer angles (K*M) | surface phases (N) ]

and decoding maps it onto a guaranteed-feasible decision: phases are the
tanh outputs times pi; beamformers are assembled from per-antenna
magnitude/angle pairs and rescaled so the transmit power meets the budget
exactly; blocklengths share the budget above the per-actuator minimum in
proportion to the shifted raws, then round down to integers.  No penalty
terms are ever needed because infeasible decisions cannot be produced.

The observation is a flat vector (length 2K(K+1) + (N+1)(KM+1) + KM):

    s1: |inner_kk'| then angle(inner_kk') over all K^2 pairs, where
        inner_kk' = g_k . w_k' couples actuator k's composite row with
        beamformer k' (previous step's decision),
    s2: ||g_k||_2 (K), ||w_k||_2 (K), angle(g_k) (K*M),
        angle(H_tilde_k) (K*N*M), angle(w_k) (K*M),
    s3: surface phases (N),
    s4: previous scaled reward (1).

Magnitude entries are divided by config-derived reference scales (coherent
composite gain, per-actuator power share) so every feature is O(1); raw
channel gains at these path losses are ~1e-7 and would otherwise be
invisible to the networks.  Angles stay in [-pi, pi); the angle of an
exact zero is 0 by convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import ChannelSampler, ChannelSet, pathloss_linear
from .config import LearnConfig, ScenarioConfig, geometry, noise_power
from .fbl import sinr_vector, total_objective
from .precoding import BeamformerSet, equal_blocklengths
from .ris import RisState, build_ris_state, effective_channels, wrap_phase

# Blocklength scaler constants: GUARD avoids 0/0 when every raw sits at -1;
# SNAP absorbs the guard's downward bias before the floor so a full-budget
# action still hits the exact integer split (sum stays <= C_total for any
# K*SNAP < 1).
CBL_GUARD = 1e-6
CBL_SNAP = 1e-5


def action_length(cfg: ScenarioConfig) -> int:
    return cfg.K + 2 * cfg.K * cfg.M + cfg.N


def state_length(cfg: ScenarioConfig) -> int:
    k, m, n = cfg.K, cfg.M, cfg.N
    return 2 * k * (k + 1) + (n + 1) * (k * m + 1) + k * m


@dataclass(frozen=True)
class ActionLayout:
    """Slices of the flat action vector."""
    cbl: slice
    mag: slice
    ang: slice
    phase: slice
    length: int


@lru_cache(maxsize=32)
def action_layout(cfg: ScenarioConfig) -> ActionLayout:
    k, km, n = cfg.K, cfg.K * cfg.M, cfg.N
    return ActionLayout(
        cbl=slice(0, k),
        mag=slice(k, k + km),
        ang=slice(k + km, k + 2 * km),
        phase=slice(k + 2 * km, k + 2 * km + n),
        length=k + 2 * km + n,
    )


@dataclass(frozen=True)
class StateScales:
    """Reference magnitudes used to normalize the non-angle state entries."""
    inner: float    # |g_k . w_k'| scale
    row: float      # ||g_k||_2 scale
    power: float    # ||w_k||_2 scale


@lru_cache(maxsize=32)
def state_scales(cfg: ScenarioConfig) -> StateScales:
    geo = geometry(cfg)
    beta_inc = pathloss_linear(geo.bs_ris.distance, cfg.PL0, cfg.nu)
    beta_ris = np.mean([pathloss_linear(link.distance, cfg.PL0, cfg.nu)
                        for link in geo.ris_actuator])
    ref_gain = cfg.N * math.sqrt(beta_inc * beta_ris)   # coherent composite amplitude
    share = math.sqrt(cfg.p_total / cfg.K)
    return StateScales(inner=ref_gain * share,
                       row=ref_gain * math.sqrt(cfg.M),
                       power=share)


@dataclass(frozen=True)
class AllocationDecision:
    """The full feasible decision triple."""
    ris: RisState
    bf: BeamformerSet
    c: np.ndarray            # (K,) integer blocklengths


@dataclass(frozen=True)
class TransitionTuple:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray


def decode_action(a, cfg: ScenarioConfig, equal_cbl: bool = False) -> AllocationDecision:
    """Map a raw [-1, 1] action onto a feasible (phases, beamformers, blocklengths).

    ``equal_cbl`` ignores the blocklength raws and forces the even split
    (the non-optimized-blocklength ablation).  Raw entries outside [-1, 1]
    are rejected: the policy clips before acting, so they indicate a bug.
    """
    lay = action_layout(cfg)
    a = np.asarray(a, dtype=float)
    if a.shape != (lay.length,):
        raise ValueError(f"action length {a.shape} != ({lay.length},)")
    if np.any(a < -1.0) or np.any(a > 1.0) or not np.all(np.isfinite(a)):
        raise ValueError("raw action entries must lie in [-1, 1]")

    ris = build_ris_state(np.pi * a[lay.phase], cfg)

    mag = (a[lay.mag] + 1.0) / 2.0
    ang = np.pi * a[lay.ang]
    w = (mag * np.exp(1j * ang)).reshape(cfg.K, cfg.M)
    total = np.sum(np.abs(w) ** 2)
    if total > 0.0:
        w *= math.sqrt(cfg.p_total / total)
    bf = BeamformerSet.from_vectors(w)

    if equal_cbl:
        c = equal_blocklengths(cfg.C_total, cfg.K)
    else:
        frac = (a[lay.cbl] + 1.0) / 2.0
        c_min = np.asarray(cfg.c_min, dtype=float)
        budget = cfg.C_total - c_min.sum()
        cont = budget * frac / (frac.sum() + CBL_GUARD) + c_min
        c = np.floor(cont + CBL_SNAP).astype(int)

    decision = AllocationDecision(ris=ris, bf=bf, c=c)
    _check_feasible(decision, cfg)
    return decision


def _check_feasible(d: AllocationDecision, cfg: ScenarioConfig) -> None:
    """Post-hoc guard for the four problem constraints (cheap, always on)."""
    if np.any(d.ris.theta < -np.pi) or np.any(d.ris.theta >= np.pi):
        raise RuntimeError("C1 violated: phase outside [-pi, pi)")
    total = float(np.sum(d.bf.powers))
    if total > cfg.p_total * (1.0 + 1e-9):
        raise RuntimeError(f"C3 violated: transmit power {total} > {cfg.p_total}")
    if int(np.sum(d.c)) > cfg.C_total or np.any(d.c < np.asarray(cfg.c_min)):
        raise RuntimeError(f"C4 violated: blocklengths {d.c}")


def encode_state(ch: ChannelSet, ris: RisState, bf: BeamformerSet,
                 prev_reward: float, cfg: ScenarioConfig) -> np.ndarray:
    """Assemble the flat observation vector (layout in the module docstring)."""
    scales = state_scales(cfg)
    h_tilde = ch.h_ris.conj()[:, :, None] * ch.H[None, :, :]     # (K, N, M)
    g = np.einsum("n,knm->km", ris.reflection_row, h_tilde)      # (K, M)
    inner = g @ bf.w.T                                           # inner[k, k']

    s1 = np.concatenate([np.abs(inner).ravel() / scales.inner,
                         _angle(inner).ravel()])
    s2 = np.concatenate([
        np.linalg.norm(g, axis=1) / scales.row,
        np.sqrt(bf.powers) / scales.power,
        _angle(g).ravel(),
        _angle(h_tilde).ravel(),
        _angle(bf.w).ravel(),
    ])
    s3 = ris.theta
    s4 = np.array([prev_reward])
    return np.concatenate([s1, s2, s3, s4])


def _angle(x: np.ndarray) -> np.ndarray:
    """Complex argument wrapped to [-pi, pi); angle(0) = 0."""
    return wrap_phase(np.angle(x))


class RisUrllcEnv:
    """Episode mechanics: frozen per-episode channel, step-wise decisions.

    reset() draws a fresh channel from the provided stream, decodes a
    uniformly random initial action (the "randomly initiate" step) and
    returns the first observation.  step() applies a decision to the frozen
    channel and returns the next observation plus the scaled reward; the
    raw bit total is in the info dict.
    """

    def __init__(self, cfg: ScenarioConfig, learn: LearnConfig,
                 equal_cbl: bool = False, horizon: int | None = None):
        self.cfg = cfg
        self.learn = learn
        self.equal_cbl = equal_cbl
        self.horizon = learn.n_steps if horizon is None else horizon
        self.sampler = ChannelSampler(cfg)
        self.sigma2 = noise_power(cfg)
        self.channel: ChannelSet | None = None
        self.decision: AllocationDecision | None = None
        self._steps_taken = 0
        self._active = False

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        """New episode: fresh channel, random initial decision.

        Stream order is fixed (channel draw, then initial action), so equal
        substreams give bit-identical episodes.
        """
        return self.reset_to(self.sampler.draw(rng), rng)

    def reset_to(self, channel: ChannelSet, rng: np.random.Generator) -> np.ndarray:
        """Start an episode on a caller-provided channel (evaluation reuse)."""
        self.channel = channel
        raw0 = rng.uniform(-1.0, 1.0, action_length(self.cfg))
        self.decision = decode_action(raw0, self.cfg, self.equal_cbl)
        l_tot, _ = self._score(self.decision)
        self._prev_scaled = self.learn.reward_scale * l_tot
        self._steps_taken = 0
        self._active = True
        return encode_state(self.channel, self.decision.ris, self.decision.bf,
                            self._prev_scaled, self.cfg)

    def step(self, a) -> tuple[np.ndarray, float, dict]:
        if not self._active:
            raise RuntimeError("step() on a finished episode; call reset() first")
        decision = decode_action(a, self.cfg, self.equal_cbl)
        l_tot, sinr = self._score(decision)
        reward = self.learn.reward_scale * l_tot
        s_next = encode_state(self.channel, decision.ris, decision.bf,
                              reward, self.cfg)
        self.decision = decision
        self._prev_scaled = reward
        self._steps_taken += 1
        if self._steps_taken >= self.horizon:
            self._active = False
        return s_next, reward, {"l_tot": l_tot, "sinr": sinr, "decision": decision}

    def _score(self, decision: AllocationDecision) -> tuple[float, np.ndarray]:
        _, g = effective_channels(decision.ris, self.channel)
        sinr = sinr_vector(g, decision.bf.w, self.sigma2)
        l_tot, _, _ = total_objective(sinr, decision.c, self.cfg.eps_th)
        return l_tot, sinr
