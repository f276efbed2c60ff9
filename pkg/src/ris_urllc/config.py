"""Scenario and learning configuration.

All physical, geometric and learning parameters live in two frozen
dataclasses.  Defaults are the factory-automation setup used throughout:
a 4-antenna BS at the origin, a 16-element reflecting surface at [40, 0],
four actuators on the y = 40 m line, 1 mW budget, 100 channel uses per
interval and a 1e-8 block-error target.  Validation rejects anything that
would break the optimization problem's constraints or the convergence
conditions of clipped double Q-learning (discount in [0,1), learning rate
in (0,1], finite reward variance via bounded power and blocklengths).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml


class ConfigError(ValueError):
    """Raised when a config document or field violates an invariant."""


def _balanced_factors(n: int) -> tuple[int, int]:
    """Split n into (n1, n2), n1 <= n2, with n1 the largest divisor <= sqrt(n)."""
    d = int(math.isqrt(n))
    while n % d:
        d -= 1
    return d, n // d


@dataclass(frozen=True)
class ScenarioConfig:
    # system dimensions
    K: int = 4                      # actuators
    M: int = 4                      # BS antennas (M = m_x * m_y)
    N: int = 16                     # RIS elements (N = n_x * n_y)
    m_x: int | None = None          # planar split of the BS array; balanced if None
    m_y: int | None = None
    n_x: int | None = None          # planar split of the RIS; balanced if None
    n_y: int | None = None

    # power / noise / reliability
    p_total: float = 1e-3           # BS transmit power budget, W
    eps_th: float = 1e-8            # per-actuator target BLER
    C_total: int = 100              # total channel uses per interval
    c_min: tuple[int, ...] = (10, 10, 10, 10)   # per-actuator minimum blocklength
    W: float = 1e5                  # bandwidth, Hz
    N0: float = -174.0              # noise density, dBm/Hz
    NF: float = 3.0                 # receiver noise figure, dB

    # fading / path loss
    rician_incident: float = 10.0               # BS->RIS Rician factor, linear
    rician_ris: tuple[float, ...] = (10.0, 10.0, 10.0, 10.0)  # RIS->actuator, linear
    PL0: float = -30.0              # path loss at 1 m, dB
    nu: float = 2.2                 # path loss exponent

    # RIS circuit model
    beta_min: float = 0.4           # minimum element amplitude
    alpha_steep: float = 1.9        # steepness of the amplitude dip
    phi_shift: float = 0.43 * math.pi   # phase offset of the dip, rad
    ris_mode: str = "practical"     # "practical" (phase-coupled amplitude) or "ideal"

    # geometry (2D plane + heights)
    spacing_ratio: float = 0.5      # element spacing over wavelength, d/lambda
    bs_pos: tuple[float, float] = (0.0, 0.0)
    ris_pos: tuple[float, float] = (40.0, 0.0)
    actuator_pos: tuple[tuple[float, float], ...] = (
        (16.0, 40.0), (32.0, 40.0), (48.0, 40.0), (64.0, 40.0))
    bs_height: float = 12.5
    ris_height: float = 12.5
    actuator_height: float = 1.5

    seed: int = 0                   # master RNG seed

    def __post_init__(self):
        _require(self.K >= 1, "K", "must be >= 1")
        _require(self.M >= 1, "M", "must be >= 1")
        _require(self.N >= 1, "N", "must be >= 1")
        _require(self.p_total > 0, "p_total", "must be > 0")
        _require(0 < self.eps_th < 0.5, "eps_th", "must lie in (0, 0.5)")
        _require(self.C_total >= 1, "C_total", "must be >= 1")
        _require(len(self.c_min) == self.K, "c_min", f"needs exactly K={self.K} entries")
        _require(all(c >= 1 for c in self.c_min), "c_min", "entries must be >= 1")
        _require(sum(self.c_min) <= self.C_total, "c_min",
                 f"sum {sum(self.c_min)} exceeds C_total={self.C_total} (C4 infeasible)")
        _require(self.W > 0, "W", "must be > 0")
        _require(self.rician_incident >= 0, "rician_incident", "must be >= 0")
        _require(len(self.rician_ris) == self.K, "rician_ris", f"needs exactly K={self.K} entries")
        _require(all(z >= 0 for z in self.rician_ris), "rician_ris", "entries must be >= 0")
        _require(0 <= self.beta_min <= 1, "beta_min", "must lie in [0, 1]")
        _require(self.alpha_steep >= 0, "alpha_steep", "must be >= 0")
        _require(self.phi_shift >= 0, "phi_shift", "must be >= 0")
        _require(self.ris_mode in ("practical", "ideal"), "ris_mode",
                 "must be 'practical' or 'ideal'")
        _require(0 < self.spacing_ratio <= 0.5, "spacing_ratio",
                 "must lie in (0, 0.5] (element spacing at most half a wavelength)")
        _require(len(self.actuator_pos) == self.K, "actuator_pos",
                 f"needs exactly K={self.K} entries")
        for name, want, n in (("m", self.M, (self.m_x, self.m_y)),
                              ("n", self.N, (self.n_x, self.n_y))):
            if n == (None, None):
                n1, n2 = _balanced_factors(want)
                object.__setattr__(self, f"{name}_x", n1)
                object.__setattr__(self, f"{name}_y", n2)
            else:
                _require(None not in n, f"{name}_x/{name}_y",
                         "set both planar factors or neither")
                _require(n[0] * n[1] == want, f"{name}_x/{name}_y",
                         f"product must equal {want}")
        # normalize container types so configs hash/compare cleanly
        object.__setattr__(self, "c_min", tuple(int(c) for c in self.c_min))
        object.__setattr__(self, "rician_ris", tuple(float(z) for z in self.rician_ris))
        object.__setattr__(self, "bs_pos", tuple(float(x) for x in self.bs_pos))
        object.__setattr__(self, "ris_pos", tuple(float(x) for x in self.ris_pos))
        object.__setattr__(self, "actuator_pos",
                           tuple(tuple(float(x) for x in p) for p in self.actuator_pos))


@dataclass(frozen=True)
class LearnConfig:
    lr_actor: float = 1e-4
    lr_critic: float = 1e-4
    gamma: float = 0.99             # discount; [0, 1) required for convergence
    tau: float = 0.005              # polyak coefficient for target nets
    buffer_capacity: int = 10_000
    batch_size: int = 64
    sigma_explore: float = math.sqrt(0.1)   # exploration noise std (variance 0.1)
    sigma_smooth: float = math.sqrt(0.1)    # target smoothing noise std
    smooth_clip: float = 0.5        # truncation of the target smoothing noise
    policy_delay: int = 4           # critic updates per actor/target update
    n_steps: int = 100              # steps per episode
    n_episodes: int = 5000
    eval_realizations: int = 100    # independent channel draws per evaluation
    eval_every: int = 50            # episodes between greedy evaluations
    eval_steps: int = 10            # greedy rollout length per evaluation draw
    actor_layers: tuple[int, ...] = (800, 400, 200)
    critic_trunk: tuple[int, ...] = (800,)      # per-input branch widths (state/action)
    critic_head: tuple[int, ...] = (600, 400)   # widths after the branch sum
    layernorm: bool = True          # layer normalization before hidden activations
    algo: str = "td3"               # "td3" or "ddpg" (single critic, no smoothing)
    reward_scale: float | None = None   # scale fed to the learner; 1/C_total if None

    def __post_init__(self):
        _require(0 < self.lr_actor <= 1, "lr_actor", "must lie in (0, 1]")
        _require(0 < self.lr_critic <= 1, "lr_critic", "must lie in (0, 1]")
        _require(0 <= self.gamma < 1, "gamma",
                 "must lie in [0, 1) for the learner to converge")
        _require(0 < self.tau < 1, "tau", "must lie in (0, 1)")
        _require(self.buffer_capacity >= 1, "buffer_capacity", "must be >= 1")
        _require(1 <= self.batch_size <= self.buffer_capacity, "batch_size",
                 "must lie in [1, buffer_capacity]")
        _require(self.sigma_explore >= 0, "sigma_explore", "must be >= 0")
        _require(self.sigma_smooth >= 0, "sigma_smooth", "must be >= 0")
        _require(self.smooth_clip >= 0, "smooth_clip", "must be >= 0")
        _require(self.policy_delay >= 1, "policy_delay", "must be >= 1")
        _require(self.n_steps >= 1, "n_steps", "must be >= 1")
        _require(self.n_episodes >= 1, "n_episodes", "must be >= 1")
        _require(self.eval_realizations >= 1, "eval_realizations", "must be >= 1")
        _require(self.eval_every >= 1, "eval_every", "must be >= 1")
        _require(self.eval_steps >= 1, "eval_steps", "must be >= 1")
        _require(self.algo in ("td3", "ddpg"), "algo", "must be 'td3' or 'ddpg'")
        for nm in ("actor_layers", "critic_trunk", "critic_head"):
            widths = getattr(self, nm)
            _require(len(widths) >= 1 and all(int(w) >= 1 for w in widths),
                     nm, "must be a non-empty list of positive widths")
            object.__setattr__(self, nm, tuple(int(w) for w in widths))
        if self.reward_scale is not None:
            _require(self.reward_scale > 0, "reward_scale", "must be > 0")


def _require(cond: bool, field_name: str, msg: str):
    if not cond:
        raise ConfigError(f"{field_name}: {msg}")


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------

# "paper": full-size networks and episode counts as published.
# "desk": small surface (N=8), narrow networks and short runs so a full
# training finishes in a couple of minutes on a laptop; used by the trend
# acceptance checks.
PROFILES: dict[str, dict[str, dict[str, Any]]] = {
    "paper": {"scenario": {}, "learn": {}},
    "desk": {
        "scenario": {"N": 8},
        "learn": {
            "actor_layers": [128, 64, 32],
            "critic_trunk": [128],
            "critic_head": [96, 64],
            "n_episodes": 300,
            "n_steps": 50,
            "eval_every": 10,
            "eval_steps": 10,
            "lr_actor": 1e-3,
            "lr_critic": 1e-3,
        },
    },
}

_SECTIONS = ("scenario", "learn")


def load_config(source: str | Path | None = None, *, profile: str = "paper",
                seed: int | None = None) -> tuple[ScenarioConfig, LearnConfig]:
    """Build validated configs from a YAML document.

    ``source`` may be a path, a YAML string, or None (pure defaults).  The
    document is a two-section key/value tree::

        scenario:
          N: 32
          p_total: 2.0e-3
        learn:
          n_episodes: 1000

    Precedence: dataclass defaults < profile overlay < document < ``seed``.
    Unknown sections or keys are errors, as are invariant violations.
    """
    if profile not in PROFILES:
        raise ConfigError(f"profile: unknown profile {profile!r} (have {sorted(PROFILES)})")
    doc = _parse_document(source)

    scen_keys = {f.name for f in fields(ScenarioConfig)}
    learn_keys = {f.name for f in fields(LearnConfig)}
    scen_kv: dict[str, Any] = dict(PROFILES[profile]["scenario"])
    learn_kv: dict[str, Any] = dict(PROFILES[profile]["learn"])
    for section, kv, keys in (("scenario", scen_kv, scen_keys), ("learn", learn_kv, learn_keys)):
        sub = doc.get(section, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"{section}: section must be a mapping")
        unknown = set(sub) - keys
        if unknown:
            raise ConfigError(f"{section}: unknown keys {sorted(unknown)}")
        kv.update(sub)
    unknown_sections = set(doc) - set(_SECTIONS)
    if unknown_sections:
        raise ConfigError(f"document: unknown sections {sorted(unknown_sections)}")

    if seed is not None:
        scen_kv["seed"] = int(seed)
    scen_kv = _tuplify(scen_kv)
    learn_kv = _tuplify(learn_kv)
    try:
        scen = ScenarioConfig(**scen_kv)
        learn = LearnConfig(**learn_kv)
    except TypeError as exc:   # wrong value kinds (e.g. list where scalar expected)
        raise ConfigError(str(exc)) from exc
    if learn.reward_scale is None:
        learn = LearnConfig(**{**config_to_dict(learn), "reward_scale": 1.0 / scen.C_total})
    return scen, learn


def _parse_document(source: str | Path | None) -> dict[str, Any]:
    if source is None:
        return {}
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                    and Path(source).is_file()):
        text = Path(source).read_text()
    else:
        text = str(source)
    doc = yaml.safe_load(text)
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError("document: top level must be a mapping")
    return doc


def _tuplify(kv: dict[str, Any]) -> dict[str, Any]:
    """YAML gives lists; the frozen configs want tuples (nested included)."""
    def conv(v):
        return tuple(conv(x) for x in v) if isinstance(v, (list, tuple)) else v
    return {k: conv(v) for k, v in kv.items()}


def config_to_dict(cfg: ScenarioConfig | LearnConfig) -> dict[str, Any]:
    """Plain-type dict (lists for tuples) suitable for YAML/JSON round-trips."""
    def conv(v):
        return [conv(x) for x in v] if isinstance(v, tuple) else v
    return {f.name: conv(getattr(cfg, f.name)) for f in fields(cfg)}


def dump_config(scen: ScenarioConfig, learn: LearnConfig) -> str:
    """Serialize both configs to a YAML document that load_config re-reads."""
    return yaml.safe_dump({"scenario": config_to_dict(scen),
                           "learn": config_to_dict(learn)},
                          sort_keys=True, default_flow_style=None)


# ---------------------------------------------------------------------------
# derived physical quantities
# ---------------------------------------------------------------------------

def noise_power(cfg: ScenarioConfig) -> float:
    """Receiver noise power in W: density x bandwidth, inflated by the noise figure.

    sigma^2 = 10^((N0_dBm/Hz + 10 log10 W + NF - 30) / 10)
    """
    dbm = cfg.N0 + 10.0 * math.log10(cfg.W) + cfg.NF
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class LinkGeometry:
    """One directed link a->b: 3D distance plus departure/arrival angles.

    Azimuth is the planar bearing of the far endpoint measured at the array
    (all arrays share the +x broadside axis); elevation is
    arctan(height difference / planar distance), signed toward the target.
    """
    distance: float
    azimuth_a: float     # at endpoint a, toward b
    elevation_a: float
    azimuth_b: float     # at endpoint b, toward a
    elevation_b: float


@dataclass(frozen=True)
class SceneGeometry:
    bs_ris: LinkGeometry
    ris_actuator: tuple[LinkGeometry, ...]    # one per actuator, RIS side first


def _link(pa: tuple[float, float], ha: float,
          pb: tuple[float, float], hb: float, label: str) -> LinkGeometry:
    dx, dy, dh = pb[0] - pa[0], pb[1] - pa[1], hb - ha
    planar = math.hypot(dx, dy)
    dist = math.hypot(planar, dh)
    if dist == 0.0:
        raise ConfigError(f"{label}: endpoints coincide")
    if planar == 0.0:
        raise ConfigError(f"{label}: endpoints vertically aligned, azimuth undefined")
    return LinkGeometry(
        distance=dist,
        azimuth_a=math.atan2(dy, dx),
        elevation_a=math.atan2(dh, planar),
        azimuth_b=math.atan2(-dy, -dx),
        elevation_b=math.atan2(-dh, planar),
    )


def geometry(cfg: ScenarioConfig) -> SceneGeometry:
    """Distances and per-endpoint angles for the BS-RIS and RIS-actuator links."""
    bs_ris = _link(cfg.bs_pos, cfg.bs_height, cfg.ris_pos, cfg.ris_height, "bs-ris")
    links = tuple(
        _link(cfg.ris_pos, cfg.ris_height, pos, cfg.actuator_height, f"ris-actuator[{k}]")
        for k, pos in enumerate(cfg.actuator_pos))
    return SceneGeometry(bs_ris=bs_ris, ris_actuator=links)
