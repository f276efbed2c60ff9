"""Finite-blocklength rate machinery.

For one actuator decoding a c-channel-use codeword at SINR s with target
block error probability eps, the achievable number of information bits is

    L = c * log2(1 + s) - Qinv(eps) * sqrt(c * V(s)) + log2(c)

with the channel dispersion V(s) = (1 - (1+s)^-2) / ln(2)^2.  Inverting for
the error probability at a given payload uses the same normal
approximation *without* the log2(c) correction:

    eps = Q( sqrt(c / V(s)) * (log2(1+s) - L/c) )

The two forms deliberately coexist (bler() inverts the uncorrected one);
round-trip identities in the tests are stated against the form they invert.

L is intentionally left unclamped: at very small SINR the penalty term can
push it negative, and keeping the raw value preserves the gradient signal
a learner needs to climb out of that regime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

_LN2 = np.log(2.0)
_SQRT2 = np.sqrt(2.0)
_SQRT_2PI = np.sqrt(2.0 * np.pi)

#: supremum of the channel dispersion, 1/ln(2)^2
V_MAX = 1.0 / _LN2 ** 2


def q_func(x):
    """Standard normal tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)


# Rational approximation coefficients for the inverse normal CDF
# (Acklam's method; |relative error| < 1.15e-9 before refinement).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _norm_ppf_seed(p: np.ndarray) -> np.ndarray:
    """Acklam's rational approximation of the standard normal quantile."""
    out = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)
    if np.any(lo):
        q = np.sqrt(-2.0 * np.log(p[lo]))
        out[lo] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
                  ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if np.any(hi):
        q = np.sqrt(-2.0 * np.log(1.0 - p[hi]))
        out[hi] = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
                   ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        out[mid] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
                   (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    return out


def q_inv(p):
    """Inverse of q_func: rational seed plus two Newton corrections on Q itself.

    Accepts scalars or arrays with entries in (0, 1); accuracy is a few ulp
    of Q at the returned point, comfortably below 1e-10 relative even at
    p = 1e-8.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise ValueError("q_inv requires probabilities strictly inside (0, 1)")
    x = -_norm_ppf_seed(np.atleast_1d(p_arr))
    for _ in range(2):
        pdf = np.exp(-0.5 * x * x) / _SQRT_2PI
        x = x + (q_func(x) - np.atleast_1d(p_arr)) / pdf
    return x[0] if p_arr.ndim == 0 else x.reshape(p_arr.shape)


def capacity(sinr):
    """Shannon capacity log2(1 + sinr) in bits per channel use."""
    return np.log1p(np.asarray(sinr, dtype=float)) / _LN2


def dispersion(sinr):
    """Channel dispersion V(s) = (1 - (1+s)^-2) / ln(2)^2, in [0, V_MAX).

    Evaluated as s(s+2)/(1+s)^2 to stay exact near s = 0.
    """
    s = np.asarray(sinr, dtype=float)
    if np.any(s < 0):
        raise ValueError("sinr must be >= 0")
    return (s * (s + 2.0)) / ((1.0 + s) ** 2 * _LN2 ** 2)


def fbl_bits(sinr, c, eps):
    """Achievable information bits at blocklength c, target BLER eps.

    Includes the +log2(c) correction; may be negative for tiny SINR.
    """
    s = np.asarray(sinr, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(c < 1):
        raise ValueError("blocklength must be >= 1")
    return c * capacity(s) - q_inv(eps) * np.sqrt(c * dispersion(s)) + np.log2(c)


def bler(sinr, c, bits):
    """Decoding error probability for ``bits`` of payload in c channel uses.

    Inverts the uncorrected normal approximation (no log2(c) term):
    eps = Q( sqrt(c/V) * (log2(1+s) - bits/c) ).
    """
    s = np.asarray(sinr, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(s <= 0):
        raise ValueError("bler requires sinr > 0 (dispersion vanishes at 0)")
    if np.any(c < 1):
        raise ValueError("blocklength must be >= 1")
    arg = np.sqrt(c / dispersion(s)) * (capacity(s) - np.asarray(bits, float) / c)
    return q_func(arg)


def sinr_vector(g: np.ndarray, w: np.ndarray, sigma2: float) -> np.ndarray:
    """Per-actuator SINR from composite rows g (K, M) and beamformers w (K, M).

    SINR_k = |g_k . w_k|^2 / (sum_{i != k} |g_k . w_i|^2 + sigma2).
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be > 0")
    if g.shape != w.shape:
        raise ValueError(f"shape mismatch: g {g.shape} vs w {w.shape}")
    prod = np.abs(g @ w.T) ** 2          # prod[k, i] = |g_k . w_i|^2
    sig = np.diag(prod).copy()
    interference = prod.sum(axis=1) - sig
    return sig / (interference + sigma2)


def total_objective(sinr: np.ndarray, c: np.ndarray, eps_th: float
                    ) -> tuple[float, np.ndarray, np.ndarray]:
    """Network objective: total FBL bits plus its per-actuator split.

    Returns (L_tot, cap_terms, disp_terms) where cap_terms[k]
    = c_k log2(1+s_k) + log2(c_k), disp_terms[k] = sqrt(c_k V(s_k)), and
    L_tot = sum(cap_terms - Qinv(eps_th) * disp_terms).
    """
    s = np.asarray(sinr, dtype=float)
    c = np.asarray(c, dtype=float)
    cap_terms = c * capacity(s) + np.log2(c)
    disp_terms = np.sqrt(c * dispersion(s))
    l_tot = float(np.sum(cap_terms - q_inv(eps_th) * disp_terms))
    return l_tot, cap_terms, disp_terms


@dataclass(frozen=True)
class RatePoint:
    """One evaluated operating point of the finite-blocklength curve."""
    sinr: float
    c: float
    eps: float
    L: float
    V: float


def rate_point(sinr: float, c: float, eps: float) -> RatePoint:
    return RatePoint(sinr=float(sinr), c=float(c), eps=float(eps),
                     L=float(fbl_bits(sinr, c, eps)), V=float(dispersion(sinr)))
