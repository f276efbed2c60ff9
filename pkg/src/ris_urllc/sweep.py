"""Parameter sweeps reproducing the headline trend figures.

A sweep walks one scenario knob (transmit power, surface size, blocklength
budget, or minimum element amplitude) over a value list, runs each
comparator ``reps`` times per value, and scores everything on evaluation
channels shared across comparators within a value, so comparisons are
paired.  Cells run in a thread pool (RIS_URLLC_WORKERS, default 1) and the
results are reduced in a fixed order regardless of worker count.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import ConfigError, LearnConfig, ScenarioConfig
from .schemes import COMPARATORS, evaluate_scheme
from .td3 import evaluate_greedy, make_eval_channels, train

SWEEP_PARAMS = ("p_total", "N", "C_total", "beta_min")


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple
    reps: int
    comparators: tuple[str, ...]

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep-param: {self.param!r} not in {SWEEP_PARAMS}")
        if not self.values:
            raise ConfigError("values: empty sweep value list")
        if self.reps < 1:
            raise ConfigError("reps: must be >= 1")
        bad = set(self.comparators) - set(COMPARATORS)
        if bad:
            raise ConfigError(f"comparators: unknown {sorted(bad)} (have {COMPARATORS})")


@dataclass(frozen=True)
class SweepCellResult:
    param: str
    value: float
    rep: int
    comparator: str
    mean: float
    std: float
    config_hash: str


def apply_sweep_value(scen: ScenarioConfig, learn: LearnConfig, param: str,
                      value) -> tuple[ScenarioConfig, LearnConfig]:
    """Rebuild the configs with one swept knob changed (revalidated)."""
    if param == "N":
        scen = replace(scen, N=int(value), n_x=None, n_y=None)
    elif param == "p_total":
        scen = replace(scen, p_total=float(value))
    elif param == "C_total":
        scen = replace(scen, C_total=int(value))
        learn = replace(learn, reward_scale=1.0 / int(value))
    elif param == "beta_min":
        scen = replace(scen, beta_min=float(value))
    else:
        raise ConfigError(f"sweep-param: unknown {param!r}")
    return scen, learn


def _cell_seed(seed: int, *parts) -> int:
    return zlib.crc32(":".join(str(p) for p in (seed, *parts)).encode())


def run_sweep(scen: ScenarioConfig, learn: LearnConfig, spec: SweepSpec,
              seed: int, hash_fn, progress: bool = False
              ) -> tuple[list[SweepCellResult], str | None]:
    """Run all cells; returns (results, failure description or None).

    On a cell failure no further cells start; results collected so far are
    returned so the caller can persist partial output.
    """
    workers = max(1, int(os.environ.get("RIS_URLLC_WORKERS", "1")))

    cells = []
    for vi, value in enumerate(spec.values):
        cfg_v, learn_v = apply_sweep_value(scen, learn, spec.param, value)
        eval_seed = _cell_seed(seed, spec.param, vi, "eval")
        channels = make_eval_channels(cfg_v, eval_seed, learn_v.eval_realizations)
        for rep in range(spec.reps):
            for comp in spec.comparators:
                cells.append((vi, value, rep, comp, cfg_v, learn_v, eval_seed, channels))

    def run_cell(cell) -> SweepCellResult:
        vi, value, rep, comp, cfg_v, learn_v, eval_seed, channels = cell
        cseed = _cell_seed(seed, spec.param, vi, rep, comp)
        if comp in ("td3", "td3_equal_cbl"):
            equal = comp == "td3_equal_cbl"
            agent, _ = train(cfg_v, learn_v, seed=cseed, equal_cbl=equal,
                             eval_seed=eval_seed)
            scores, _ = evaluate_greedy(agent, cfg_v, learn_v, channels,
                                        eval_seed, equal_cbl=equal)
        else:
            scores, _ = evaluate_scheme(comp, cfg_v, channels, seed=cseed)
        return SweepCellResult(param=spec.param, value=float(value), rep=rep,
                               comparator=comp, mean=float(np.mean(scores)),
                               std=float(np.std(scores)),
                               config_hash=hash_fn(cfg_v, learn_v))

    results: list[SweepCellResult] = []
    failure: str | None = None
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_cell, cell) for cell in cells]
        for cell, fut in zip(cells, futures):
            try:
                results.append(fut.result())
                if progress:
                    r = results[-1]
                    print(f"sweep {r.param}={r.value} rep={r.rep} {r.comparator}: "
                          f"{r.mean:.2f} +- {r.std:.2f}", flush=True)
            except Exception as exc:   # abort on first failed cell
                failure = (f"cell param={spec.param} value={cell[1]} rep={cell[2]} "
                           f"comparator={cell[3]}: {exc}")
                for pending in futures:
                    pending.cancel()
                break
    return results, failure


def plot_data(results: list[SweepCellResult]) -> dict[str, list[tuple[float, float, float]]]:
    """Aggregate reps into per-comparator (x, mean, std) triples."""
    out: dict[str, list[tuple[float, float, float]]] = {}
    comps = sorted({r.comparator for r in results})
    values = sorted({r.value for r in results})
    for comp in comps:
        triples = []
        for v in values:
            means = [r.mean for r in results if r.comparator == comp and r.value == v]
            if means:
                triples.append((v, float(np.mean(means)), float(np.std(means))))
        out[comp] = triples
    return out
