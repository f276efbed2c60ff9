"""Rician fading channel generation for the BS -> RIS -> actuator geometry.

The BS-RIS link is an N x M matrix mixing a deterministic rank-1
line-of-sight component (outer product of the two planar-array responses)
with i.i.d. circularly-symmetric Gaussian scatter; each RIS-actuator link
is a length-N vector built the same way.  Per-entry mean power equals the
linear path-loss gain on the link, for every Rician factor.

Channels are drawn from an explicitly-passed Generator so a draw is a pure
function of the stream; the training loop hands every episode its own
substream (see rng.substream).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, geometry

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SteeringSpec:
    """Angles and layout of one planar-array response."""
    azimuth: float          # rad
    elevation: float        # rad
    n1: int                 # elements along the first axis
    n2: int                 # elements along the second axis
    spacing_ratio: float    # element spacing / wavelength


def steering_vector(spec: SteeringSpec) -> np.ndarray:
    """Row-vectorized planar array response, shape (n1*n2,), unit modulus.

    Element (i, j) carries phase
        2*pi*(d/lambda) * [(i-1) cos(az) + (j-1) sin(az)] * sin(el),
    so the (1, 1) reference element is exactly 1+0j and a zero elevation
    collapses the whole vector to ones.
    """
    if not (np.isfinite(spec.azimuth) and np.isfinite(spec.elevation)):
        raise ValueError("steering angles must be finite")
    i = np.arange(spec.n1, dtype=float)[:, None]
    j = np.arange(spec.n2, dtype=float)[None, :]
    phase = _TWO_PI * spec.spacing_ratio * (
        i * np.cos(spec.azimuth) + j * np.sin(spec.azimuth)) * np.sin(spec.elevation)
    return np.exp(1j * phase).reshape(-1)


def pathloss_linear(distance: float, pl0_db: float, nu: float) -> float:
    """Linear power gain of the PL(dB) = PL0 - 10*nu*log10(D) law."""
    if distance <= 0:
        raise ValueError(f"distance must be > 0, got {distance}")
    return 10.0 ** ((pl0_db - 10.0 * nu * np.log10(distance)) / 10.0)


@dataclass(frozen=True)
class ChannelSet:
    """One realization of all links.

    H       : (N, M) BS->RIS matrix
    h_ris   : (K, N) row k is the RIS->actuator-k vector
    pathloss_inc : linear gain of the BS->RIS link
    pathloss_ris : (K,) linear gains of the RIS->actuator links
    """
    H: np.ndarray
    h_ris: np.ndarray
    pathloss_inc: float
    pathloss_ris: np.ndarray

    def __post_init__(self):
        n, m = self.H.shape
        k, n2 = self.h_ris.shape
        if n2 != n or len(self.pathloss_ris) != k:
            raise ValueError("inconsistent channel set dimensions")
        if self.pathloss_inc <= 0 or np.any(self.pathloss_ris <= 0):
            raise ValueError("path-loss gains must be strictly positive")


class ChannelSampler:
    """Precomputed geometry + LoS components; .draw(rng) yields a ChannelSet."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        geo = geometry(cfg)
        self.beta_inc = pathloss_linear(geo.bs_ris.distance, cfg.PL0, cfg.nu)
        self.beta_ris = np.array([
            pathloss_linear(link.distance, cfg.PL0, cfg.nu)
            for link in geo.ris_actuator])

        # arrival response at the RIS and departure response at the BS
        a_ris = steering_vector(SteeringSpec(
            geo.bs_ris.azimuth_b, geo.bs_ris.elevation_b, cfg.n_x, cfg.n_y,
            cfg.spacing_ratio))
        a_bs = steering_vector(SteeringSpec(
            geo.bs_ris.azimuth_a, geo.bs_ris.elevation_a, cfg.m_x, cfg.m_y,
            cfg.spacing_ratio))
        self.H_los = np.sqrt(self.beta_inc) * np.outer(a_ris.conj(), a_bs)

        self.h_los = np.empty((cfg.K, cfg.N), dtype=complex)
        for k, link in enumerate(geo.ris_actuator):
            a_k = steering_vector(SteeringSpec(
                link.azimuth_a, link.elevation_a, cfg.n_x, cfg.n_y,
                cfg.spacing_ratio))
            self.h_los[k] = np.sqrt(self.beta_ris[k]) * a_k

    def draw(self, rng: np.random.Generator) -> ChannelSet:
        """Draw one realization.  Stream order is fixed: H first, then each actuator."""
        cfg = self.cfg
        zeta = cfg.rician_incident
        H = (np.sqrt(zeta / (zeta + 1.0)) * self.H_los
             + np.sqrt(1.0 / (zeta + 1.0)) * _cn(rng, (cfg.N, cfg.M), self.beta_inc))
        h = np.empty_like(self.h_los)
        for k in range(cfg.K):
            zk = cfg.rician_ris[k]
            h[k] = (np.sqrt(zk / (zk + 1.0)) * self.h_los[k]
                    + np.sqrt(1.0 / (zk + 1.0)) * _cn(rng, (cfg.N,), self.beta_ris[k]))
        return ChannelSet(H=H, h_ris=h, pathloss_inc=self.beta_inc,
                          pathloss_ris=self.beta_ris.copy())


def _cn(rng: np.random.Generator, shape: tuple[int, ...], var: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussians, per-entry variance ``var``."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@lru_cache(maxsize=32)
def _sampler_for(cfg: ScenarioConfig) -> ChannelSampler:
    return ChannelSampler(cfg)


def draw_channels(cfg: ScenarioConfig, rng: np.random.Generator) -> ChannelSet:
    """One channel realization for ``cfg`` (sampler cached per config)."""
    return _sampler_for(cfg).draw(rng)


# ---------------------------------------------------------------------------
# binary dump/load for regression fixtures
# ---------------------------------------------------------------------------
# Layout (all little-endian): magic "RISCHAN1", int64 N, M, K, then H as
# row-major complex128, then h_ris rows (K x N complex128), then
# pathloss_inc float64 and pathloss_ris (K float64).

_MAGIC = b"RISCHAN1"


def dump_channels(ch: ChannelSet, path: str | Path) -> None:
    n, m = ch.H.shape
    k = ch.h_ris.shape[0]
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<3q", n, m, k))
        f.write(np.ascontiguousarray(ch.H, dtype="<c16").tobytes())
        f.write(np.ascontiguousarray(ch.h_ris, dtype="<c16").tobytes())
        f.write(struct.pack("<d", ch.pathloss_inc))
        f.write(np.ascontiguousarray(ch.pathloss_ris, dtype="<f8").tobytes())


def load_channels(path: str | Path) -> ChannelSet:
    raw = Path(path).read_bytes()
    if raw[:8] != _MAGIC:
        raise ValueError(f"{path}: not a channel dump (bad magic)")
    n, m, k = struct.unpack_from("<3q", raw, 8)
    off = 8 + 24
    H = np.frombuffer(raw, dtype="<c16", count=n * m, offset=off).reshape(n, m)
    off += n * m * 16
    h = np.frombuffer(raw, dtype="<c16", count=k * n, offset=off).reshape(k, n)
    off += k * n * 16
    (beta_inc,) = struct.unpack_from("<d", raw, off)
    off += 8
    beta_ris = np.frombuffer(raw, dtype="<f8", count=k, offset=off)
    return ChannelSet(H=H.astype(complex), h_ris=h.astype(complex),
                      pathloss_inc=beta_inc, pathloss_ris=beta_ris.astype(float))
