"""Replica-exchange (parallel tempering) Monte Carlo sampler.

Protocol: fixed-order single-spin Metropolis sweeps at every rung, then a
replica-exchange pass over adjacent rungs (even pairs and odd pairs on
alternating rounds).  Each rung slot owns a splitmix64 substream derived
from the run seed, and swap decisions use a dedicated stream, so results
are bit-identical regardless of how many threads sweep the replicas.

Energies are carried incrementally and recomputed from scratch every
1000 sweeps; drift beyond 1e-6 or a non-finite energy aborts the run.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from numba import njit, prange

from .instances import Instance, SpinConfig, as_spin_config, flatten_terms
from .seeds import split_seed

RECOMPUTE_EVERY_SWEEPS = 1000
DRIFT_TOLERANCE = 1e-6
DEFAULT_SWAP_BUDGET = 10_000_000

# Sampling protocol constants used for the reference experiments: a 64-rung
# geometric ladder between beta 0.1 and 20, ten sweeps per swap, one sample
# every 50 swaps, 1e4 samples.  Warm-up grows with size and instance class.
PAPER_LADDER = (0.1, 20.0, 64)
PAPER_SWEEPS_PER_SWAP = 10
PAPER_SAMPLE_STRIDE = 50
PAPER_N_SAMPLES = 10_000
PAPER_WARMUP_RANGE = {
    "planted": (500_000, 2_000_000),
    "bimodal": (500_000, 24_000_000),
    "xorsat3": (500_000, 200_000_000),
}


class ConsistencyError(RuntimeError):
    """Internal numerical state went bad (NaN energy or drift)."""


@dataclass(frozen=True)
class Ladder:
    betas: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=np.float64)
        object.__setattr__(self, "betas", b)
        if b.ndim != 1 or len(b) < 1:
            raise ValueError("ladder needs at least one rung")
        if np.any(b <= 0):
            raise ValueError("all inverse temperatures must be positive")
        if np.any(np.diff(b) <= 0):
            raise ValueError("ladder must be strictly increasing")

    def __len__(self):
        return len(self.betas)

    def spacing_below(self, index: int) -> float:
        """Gap to the previous rung; the first rung reports its upper gap."""
        if len(self.betas) < 2:
            return 0.0
        i = max(1, index)
        return float(self.betas[i] - self.betas[i - 1])


def geometric_ladder(beta_min: float, beta_max: float, n: int) -> Ladder:
    """Geometric rung sequence beta_max * (beta_min/beta_max)^(i/(n-1)),
    returned ascending with exact endpoints."""
    if not (0 < beta_min < beta_max):
        raise ValueError("need 0 < beta_min < beta_max")
    if n < 2:
        raise ValueError("need at least two rungs")
    i = np.arange(n, dtype=np.float64)
    betas = beta_max * (beta_min / beta_max) ** (i / (n - 1))
    betas = betas[::-1].copy()
    betas[0], betas[-1] = beta_min, beta_max
    return Ladder(betas)


@dataclass(frozen=True)
class PtSchedule:
    warmup_swaps: int
    sweeps_per_swap: int
    sample_stride_swaps: int
    n_samples: int
    seed: int

    def __post_init__(self):
        for name in ("warmup_swaps", "sweeps_per_swap", "sample_stride_swaps", "n_samples"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def total_swaps(self) -> int:
        return self.warmup_swaps + self.sample_stride_swaps * self.n_samples


@dataclass
class SampleSeries:
    """Energy samples per rung plus exchange diagnostics."""

    betas: np.ndarray  # (R,)
    samples: np.ndarray  # (R, n_samples), extensive energies
    swap_accept: np.ndarray  # (R-1,) acceptance fraction per adjacent pair
    final_configs: np.ndarray  # (R, N) int8
    schedule: PtSchedule
    instance_hash: str = ""
    target_e: Optional[float] = None
    ground_hits: Optional[np.ndarray] = None  # (R,) counts of samples <= target

    @property
    def n_rungs(self) -> int:
        return len(self.betas)

    def save(self, csv_path, meta_path=None) -> None:
        """CSV of (rung_index, beta, sample_index, energy) + JSON sidecar."""
        csv_path = Path(csv_path)
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rung_index", "beta", "sample_index", "energy"])
            for r in range(self.n_rungs):
                beta = repr(float(self.betas[r]))
                for k in range(self.samples.shape[1]):
                    w.writerow([r, beta, k, repr(float(self.samples[r, k]))])
        meta = {
            "schedule": asdict(self.schedule),
            "seed": self.schedule.seed,
            "instance_hash": self.instance_hash,
            "betas": [float(b) for b in self.betas],
            "swap_accept": [float(a) for a in self.swap_accept],
            "target_e": self.target_e,
            "ground_hits": None if self.ground_hits is None else [int(h) for h in self.ground_hits],
        }
        meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".meta.json")
        meta_path.write_text(json.dumps(meta, sort_keys=True, indent=1))


# --------------------------------------------------------------------------
# numba kernels
# --------------------------------------------------------------------------

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _u01(states, r):
    states[r] = states[r] + _GOLD
    z = states[r]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return float(z >> _S11) * _INV53


@njit(cache=True)
def _refresh_terms(spins, val, coeff, support):
    e = 0.0
    for t in range(coeff.shape[0]):
        v = coeff[t]
        for a in range(3):
            j = support[t, a]
            if j >= 0:
                v *= spins[j]
        val[t] = v
        e += v
    return e


@njit(cache=True)
def _sweep_stream(spins, val, indptr, term_idx, beta, states, r, e):
    # One fixed-order Metropolis sweep; val caches each term's current value.
    n = spins.shape[0]
    for i in range(n):
        d = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            d += val[term_idx[p]]
        d_e = -2.0 * d
        u = _u01(states, r)
        if d_e <= 0.0 or u < np.exp(-beta * d_e):
            spins[i] = -spins[i]
            e += d_e
            for p in range(indptr[i], indptr[i + 1]):
                val[term_idx[p]] = -val[term_idx[p]]
    return e


@njit(cache=True)
def _sweep_uniforms(spins, val, indptr, term_idx, beta, uniforms, e):
    n = spins.shape[0]
    for i in range(n):
        d = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            d += val[term_idx[p]]
        d_e = -2.0 * d
        if d_e <= 0.0 or uniforms[i] < np.exp(-beta * d_e):
            spins[i] = -spins[i]
            e += d_e
            for p in range(indptr[i], indptr[i + 1]):
                val[term_idx[p]] = -val[term_idx[p]]
    return e


@njit(parallel=True, cache=True)
def _pt_kernel(coeff, support, indptr, term_idx, betas, states,
               warmup, sweeps_per_swap, stride, n_samples):
    n = indptr.shape[0] - 1
    n_terms = coeff.shape[0]
    n_rungs = betas.shape[0]
    spins = np.empty((n_rungs, n), dtype=np.int8)
    val = np.empty((n_rungs, n_terms), dtype=np.float64)
    energies = np.empty(n_rungs, dtype=np.float64)
    samples = np.zeros((n_rungs, n_samples), dtype=np.float64)
    accept = np.zeros(n_rungs - 1 if n_rungs > 1 else 1, dtype=np.int64)
    propose = np.zeros(n_rungs - 1 if n_rungs > 1 else 1, dtype=np.int64)
    flags = np.zeros(n_rungs, dtype=np.int64)

    for r in range(n_rungs):
        for j in range(n):
            spins[r, j] = 1 if _u01(states, r) < 0.5 else -1
        energies[r] = _refresh_terms(spins[r], val[r], coeff, support)
        if not np.isfinite(energies[r]):
            flags[r] = 1
    status = 0
    for r in range(n_rungs):
        if flags[r] != 0:
            status = 1

    total_rounds = warmup + stride * n_samples
    sample_idx = 0
    if status == 0:
        for rr in range(total_rounds):
            sweeps_before = rr * sweeps_per_swap
            sweeps_after = sweeps_before + sweeps_per_swap
            do_refresh = (sweeps_after // RECOMPUTE_EVERY_SWEEPS) > (sweeps_before // RECOMPUTE_EVERY_SWEEPS)
            for r in prange(n_rungs):
                e = energies[r]
                for _ in range(sweeps_per_swap):
                    e = _sweep_stream(spins[r], val[r], indptr, term_idx, betas[r], states, r, e)
                if do_refresh:
                    e_full = _refresh_terms(spins[r], val[r], coeff, support)
                    if not np.isfinite(e_full) or abs(e_full - e) > DRIFT_TOLERANCE:
                        flags[r] = 1
                    e = e_full
                energies[r] = e
            for r in range(n_rungs):
                if flags[r] != 0:
                    status = 1
            if status != 0:
                break
            start = rr & 1
            for i in range(start, n_rungs - 1, 2):
                u = _u01(states, n_rungs)
                x = (betas[i + 1] - betas[i]) * (energies[i + 1] - energies[i])
                propose[i] += 1
                if x >= 0.0 or u < np.exp(x):
                    accept[i] += 1
                    for j in range(n):
                        tmp = spins[i, j]
                        spins[i, j] = spins[i + 1, j]
                        spins[i + 1, j] = tmp
                    for t in range(n_terms):
                        tv = val[i, t]
                        val[i, t] = val[i + 1, t]
                        val[i + 1, t] = tv
                    te = energies[i]
                    energies[i] = energies[i + 1]
                    energies[i + 1] = te
            if rr >= warmup and (rr - warmup) % stride == stride - 1:
                for r in range(n_rungs):
                    samples[r, sample_idx] = energies[r]
                sample_idx += 1
    return samples, accept, propose, spins, energies, status


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------

def metropolis_sweep(instance: Instance, config: SpinConfig, beta: float,
                     rng: np.random.Generator):
    """One fixed-order single-spin Metropolis sweep.

    Proposes flips of spins 0..N-1 in order, accepting each with
    min(1, exp(-beta * dE)); dE comes incrementally from the terms that
    contain the proposed spin.  Returns (new_config, energy).
    """
    cfg = as_spin_config(config).copy()
    if len(cfg) != instance.n_spins:
        raise ValueError("config length mismatch")
    coeff, support, indptr, term_idx = flatten_terms(instance)
    val = np.empty(len(coeff), dtype=np.float64)
    e0 = _refresh_terms(cfg, val, coeff, support)
    uniforms = rng.random(instance.n_spins)
    e1 = _sweep_uniforms(cfg, val, indptr, term_idx, float(beta), uniforms, e0)
    return cfg, float(e1)


@dataclass
class Replicas:
    """One configuration (and its energy) per ladder rung."""

    configs: np.ndarray  # (R, N) int8
    energies: np.ndarray  # (R,)
    swap_parity: int = 0

    @staticmethod
    def init_random(instance: Instance, ladder: Ladder, rng: np.random.Generator) -> "Replicas":
        from .instances import energy as inst_energy

        configs = rng.choice(np.array([-1, 1], dtype=np.int8),
                             size=(len(ladder), instance.n_spins))
        energies = np.array([inst_energy(instance, c) for c in configs])
        return Replicas(configs, energies)


def swap_step(replicas: Replicas, ladder: Ladder, rng: np.random.Generator):
    """Propose exchanges on adjacent rung pairs; mutates `replicas`.

    Even-indexed pairs and odd-indexed pairs alternate between calls.
    Pair (i, i+1) swaps with probability
    min(1, exp[(beta_{i+1}-beta_i)(E_{i+1}-E_i)]); configurations and
    energies travel together.  Returns [(pair_lo, accepted), ...].
    """
    if replicas.configs.shape[0] != len(ladder):
        raise ValueError("one replica per ladder rung required")
    betas = ladder.betas
    records = []
    start = replicas.swap_parity & 1
    for i in range(start, len(betas) - 1, 2):
        u = rng.random()
        x = (betas[i + 1] - betas[i]) * (replicas.energies[i + 1] - replicas.energies[i])
        accepted = x >= 0.0 or u < np.exp(x)
        if accepted:
            replicas.configs[[i, i + 1]] = replicas.configs[[i + 1, i]]
            replicas.energies[[i, i + 1]] = replicas.energies[[i + 1, i]]
        records.append((i, bool(accepted)))
    replicas.swap_parity += 1
    return records


def pt_run(
    instance: Instance,
    ladder: Ladder,
    schedule: PtSchedule,
    target_e: Optional[float] = None,
    max_total_swaps: int = DEFAULT_SWAP_BUDGET,
) -> SampleSeries:
    """Run parallel tempering and collect one energy series per rung.

    Warm-up lasts ``warmup_swaps`` swap rounds (each ``sweeps_per_swap``
    sweeps on every replica followed by an exchange pass); afterwards one
    energy per rung is recorded every ``sample_stride_swaps`` rounds until
    ``n_samples`` are stored.  Identical inputs give identical output,
    independent of thread count.
    """
    if schedule.total_swaps > max_total_swaps:
        raise ValueError(
            f"schedule wants {schedule.total_swaps} swap rounds, over the "
            f"budget of {max_total_swaps}; raise max_total_swaps to proceed"
        )
    coeff, support, indptr, term_idx = flatten_terms(instance)
    states = np.array(
        [split_seed(schedule.seed, r) for r in range(len(ladder) + 1)], dtype=np.uint64
    )
    samples, accept, propose, spins, energies, status = _pt_kernel(
        coeff, support, indptr, term_idx, ladder.betas, states,
        schedule.warmup_swaps, schedule.sweeps_per_swap,
        schedule.sample_stride_swaps, schedule.n_samples,
    )
    if status != 0:
        raise ConsistencyError(
            "PT run aborted: non-finite energy or incremental-energy drift "
            f"beyond {DRIFT_TOLERANCE}"
        )
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(propose > 0, accept / np.maximum(propose, 1), 0.0)
    if target_e is None and instance.known_e0 is not None:
        target_e = instance.known_e0
    hits = None
    if target_e is not None:
        hits = (samples <= target_e + 1e-9).sum(axis=1).astype(np.int64)
    return SampleSeries(
        betas=ladder.betas.copy(),
        samples=samples,
        swap_accept=frac if len(ladder) > 1 else np.zeros(0),
        final_configs=spins,
        schedule=schedule,
        instance_hash=instance.content_hash(),
        target_e=None if target_e is None else float(target_e),
        ground_hits=hits,
    )
