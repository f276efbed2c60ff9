"""Comparator schemes evaluated on shared channel draws.

Non-learned comparators:

  zf_random_phase  uniform phases, zero-forcing beamformers, even blocklengths
  mmse             uniform phases, regularized-inverse beamformers, even split
  shannon_ideal    uniform phases on an impairment-free surface, zero forcing,
                   even split, scored by sum c_k log2(1 + SINR_k) -- the
                   infinite-blocklength upper reference curve

All schemes draw their phases from per-realization substreams of the given
seed, so a scheme's score on realization i is reproducible and every
scheme sees exactly the same channel on realization i.
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelSet
from .config import ScenarioConfig, noise_power
from .env import AllocationDecision
from .fbl import capacity, sinr_vector, total_objective
from .precoding import (equal_blocklengths, mmse_precoder, random_phase_baseline,
                        zf_precoder)
from .ris import build_ris_state, effective_channels
from .rng import substream

BASELINE_SCHEMES = ("zf_random_phase", "mmse", "shannon_ideal")
COMPARATORS = ("td3", "td3_equal_cbl") + BASELINE_SCHEMES


def decision_score(decision: AllocationDecision, ch: ChannelSet,
                   cfg: ScenarioConfig, sigma2: float | None = None
                   ) -> tuple[float, np.ndarray]:
    """Raw FBL bit total and per-actuator SINRs of a decision on a channel."""
    sigma2 = noise_power(cfg) if sigma2 is None else sigma2
    _, g = effective_channels(decision.ris, ch)
    sinr = sinr_vector(g, decision.bf.w, sigma2)
    l_tot, _, _ = total_objective(sinr, decision.c, cfg.eps_th)
    return l_tot, sinr


def shannon_ideal_score(decision: AllocationDecision, ch: ChannelSet,
                        cfg: ScenarioConfig, sigma2: float | None = None) -> float:
    """sum c_k log2(1+SINR_k) for the same decision on an impairment-free surface."""
    sigma2 = noise_power(cfg) if sigma2 is None else sigma2
    ris_ideal = build_ris_state(decision.ris.theta, cfg, mode="ideal")
    _, g = effective_channels(ris_ideal, ch)
    sinr = sinr_vector(g, decision.bf.w, sigma2)
    return float(np.sum(np.asarray(decision.c, dtype=float) * capacity(sinr)))


def baseline_decision(scheme: str, cfg: ScenarioConfig, ch: ChannelSet,
                      rng: np.random.Generator) -> AllocationDecision:
    if scheme == "zf_random_phase":
        ris, bf, c = random_phase_baseline(cfg, ch, rng)
    elif scheme == "mmse":
        theta = rng.uniform(-np.pi, np.pi, cfg.N)
        ris = build_ris_state(theta, cfg)
        _, g = effective_channels(ris, ch)
        bf = mmse_precoder(g, cfg.p_total, noise_power(cfg))
        c = equal_blocklengths(cfg.C_total, cfg.K)
    elif scheme == "shannon_ideal":
        theta = rng.uniform(-np.pi, np.pi, cfg.N)
        ris = build_ris_state(theta, cfg, mode="ideal")
        _, g = effective_channels(ris, ch)
        bf = zf_precoder(g, cfg.p_total)
        c = equal_blocklengths(cfg.C_total, cfg.K)
    else:
        raise ValueError(f"unknown scheme {scheme!r} (have {BASELINE_SCHEMES})")
    return AllocationDecision(ris=ris, bf=bf, c=np.asarray(c, dtype=int))


def max_interference_leakage(decision: AllocationDecision, ch: ChannelSet,
                             cfg: ScenarioConfig) -> float:
    """max_{i != k} |g_k . w_i| / |g_k . w_k| -- the zero-forcing diagnostic."""
    _, g = effective_channels(decision.ris, ch)
    prod = np.abs(g @ decision.bf.w.T)
    sig = np.diag(prod).copy()
    np.fill_diagonal(prod, 0.0)
    return float(np.max(prod / sig[:, None]))


def evaluate_scheme(scheme: str, cfg: ScenarioConfig,
                    channels: list[ChannelSet], seed: int
                    ) -> tuple[np.ndarray, list[AllocationDecision]]:
    """Scheme score on every provided channel draw."""
    sigma2 = noise_power(cfg)
    scores = np.empty(len(channels))
    decisions = []
    for i, ch in enumerate(channels):
        rng = substream(seed, f"scheme-{scheme}", i)
        decision = baseline_decision(scheme, cfg, ch, rng)
        if scheme == "shannon_ideal":
            scores[i] = shannon_ideal_score(decision, ch, cfg, sigma2)
        else:
            scores[i], _ = decision_score(decision, ch, cfg, sigma2)
        decisions.append(decision)
    return scores, decisions
