"""Classical precoding baselines on the composite channel.

Zero-forcing inverts the stacked composite rows so each beamformer kills
all cross-actuator interference; MMSE regularizes the same inversion by
K*sigma2/p_total, trading leakage for gain at low SNR.  Both split the
power budget equally across actuators after normalization.  The random
phase comparator draws the surface phases uniformly and applies ZF with an
even blocklength split; the learned policies are measured against it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr

from .channel import ChannelSet
from .config import ScenarioConfig
from .ris import RisState, build_ris_state, effective_channels

COND_LIMIT = 1e12


class SingularSystemError(ValueError):
    """Linear system is singular / ill-conditioned beyond COND_LIMIT."""

    def __init__(self, msg: str, cond: float, row: int | None = None):
        super().__init__(msg)
        self.cond = cond
        self.row = row


@dataclass(frozen=True)
class BeamformerSet:
    """K beamforming vectors (rows of w) and their per-actuator powers."""
    w: np.ndarray           # (K, M) complex
    powers: np.ndarray      # (K,) ||w_k||^2

    @classmethod
    def from_vectors(cls, w: np.ndarray) -> "BeamformerSet":
        return cls(w=w, powers=np.sum(np.abs(w) ** 2, axis=1))


def solve_hermitian(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A X = B for small complex systems, refusing ill-conditioned A.

    Backed by LAPACK; the caller-facing contract is the residual
    ||A X - B||_F <= 1e-9 ||B||_F, verified here because these systems are
    tiny (K <= 8) and a silent bad solve would poison every precoder built
    on top.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"A must be square, got {a.shape}")
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularSystemError(
            f"system is ill-conditioned (cond ~ {cond:.3e} > {COND_LIMIT:.0e})", cond)
    x = np.linalg.solve(a, b)
    resid = np.linalg.norm(a @ x - b)
    if resid > 1e-9 * max(np.linalg.norm(b), np.finfo(float).tiny):
        raise SingularSystemError(
            f"solve residual {resid:.3e} exceeds tolerance", cond)
    return x


def _deficient_row(g: np.ndarray) -> int:
    """Index of the composite row most responsible for rank deficiency."""
    # pivoted QR on the conjugated rows: the last pivot owns the smallest
    # diagonal of R, i.e. the row best explained by the others.
    _, _, piv = qr(g.conj().T, mode="economic", pivoting=True)
    return int(piv[-1])


def _equal_power_columns(directions: np.ndarray, p_total: float) -> BeamformerSet:
    """Normalize direction columns (M, K) to ||w_k||^2 = p_total / K each."""
    k = directions.shape[1]
    norms = np.linalg.norm(directions, axis=0)
    if np.any(norms == 0):
        raise SingularSystemError("precoder produced a zero direction", np.inf)
    w = (directions / norms * np.sqrt(p_total / k)).T
    return BeamformerSet.from_vectors(w)


def zf_precoder(g: np.ndarray, p_total: float) -> BeamformerSet:
    """Zero-forcing beamformers W = G^H (G G^H)^-1, equal power per actuator.

    Per-column rescaling preserves the interference nulls, so
    g_i . w_k = 0 for i != k survives normalization exactly.
    """
    k, m = g.shape
    if k > m:
        raise ValueError(f"zero forcing needs K <= M, got K={k} > M={m}")
    gram = g @ g.conj().T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularSystemError(
            f"composite channel is rank deficient (cond ~ {cond:.3e})",
            cond, row=_deficient_row(g))
    directions = g.conj().T @ solve_hermitian(gram, np.eye(k, dtype=complex))
    return _equal_power_columns(directions, p_total)


def mmse_precoder(g: np.ndarray, p_total: float, sigma2: float) -> BeamformerSet:
    """Regularized inversion W = G^H (G G^H + (K sigma2 / p_total) I)^-1."""
    k, m = g.shape
    if k > m:
        raise ValueError(f"MMSE precoding needs K <= M, got K={k} > M={m}")
    gram = g @ g.conj().T + (k * sigma2 / p_total) * np.eye(k, dtype=complex)
    directions = g.conj().T @ solve_hermitian(gram, np.eye(k, dtype=complex))
    return _equal_power_columns(directions, p_total)


def equal_blocklengths(c_total: int, k: int) -> np.ndarray:
    """Even integer split of the blocklength budget; remainder to low indices."""
    base, rem = divmod(int(c_total), int(k))
    out = np.full(k, base, dtype=int)
    out[:rem] += 1
    return out


def random_phase_baseline(cfg: ScenarioConfig, ch: ChannelSet,
                          rng: np.random.Generator
                          ) -> tuple[RisState, BeamformerSet, np.ndarray]:
    """Uniformly random surface phases + ZF beamforming + equal blocklengths."""
    theta = rng.uniform(-np.pi, np.pi, cfg.N)
    ris = build_ris_state(theta, cfg)
    _, g = effective_channels(ris, ch)
    bf = zf_precoder(g, cfg.p_total)
    c = equal_blocklengths(cfg.C_total, cfg.K)
    return ris, bf, c
