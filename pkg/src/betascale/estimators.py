"""Observables from energy samples (or from an exact level list).

Standard errors come from blocking with 20 contiguous blocks throughout,
so the 2-sigma / 3-sigma tolerances used by the validation suites have a
fixed meaning.  Target probabilities are always P(E <= E_T), which
coincides with the ground-state weight when E_T = E0.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .exact import DensityOfStates
from .ptmc import Ladder, SampleSeries

N_BLOCKS = 20
ENERGY_TIE_TOL = 1e-9


@dataclass(frozen=True)
class ThermalEstimates:
    beta: float
    n_spins: int
    mean_e: float
    mean_e_err: float
    c_beta: float
    c_beta_err: float
    sigma_h: float
    p_le_target: float
    p_le_err: float
    target_e: float
    residual_fraction: Optional[float] = None  # eps with <H> = (1-eps) E0


@dataclass
class EnergyHistogram:
    """Binned extensive energies at one beta; counts may be reweighted."""

    beta: float
    edges: np.ndarray  # (n_bins+1,)
    counts: np.ndarray  # (n_bins,)
    mean: Optional[float] = None
    std: Optional[float] = None

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def save_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_lo", "bin_hi", "count"])
            for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
                w.writerow([repr(float(lo)), repr(float(hi)), repr(float(c))])


def blocked_stat(samples: np.ndarray, stat, n_blocks: int = N_BLOCKS):
    """(value, stderr) of `stat` by blocking into contiguous blocks.

    The trailing remainder of len(samples) % n_blocks is dropped so every
    block has equal weight.
    """
    samples = np.asarray(samples, dtype=np.float64)
    m = len(samples) // n_blocks
    if m < 1:
        raise ValueError(f"need at least {n_blocks} samples for blocking")
    use = samples[: m * n_blocks]
    vals = np.array([stat(use[k * m:(k + 1) * m]) for k in range(n_blocks)])
    return float(stat(use)), float(vals.std(ddof=1) / np.sqrt(n_blocks))


def estimates_from_samples(
    samples: Sequence[float],
    n_spins: int,
    beta: float,
    target_e: float,
    e0: Optional[float] = None,
    n_blocks: int = N_BLOCKS,
) -> ThermalEstimates:
    """Mean intensive energy, specific heat, and target probability
    for one rung's extensive-energy samples."""
    samples = np.asarray(samples, dtype=np.float64)
    if len(samples) < 100:
        raise ValueError("refusing estimates from fewer than 100 samples")
    n = n_spins

    mean_e, mean_err = blocked_stat(samples, lambda x: x.mean() / n, n_blocks)
    c_beta, c_err = blocked_stat(samples, lambda x: -np.var(x / n) * n, n_blocks)
    p, p_err = blocked_stat(
        samples, lambda x: np.mean(x <= target_e + ENERGY_TIE_TOL), n_blocks
    )
    eps = None
    if e0 is not None and e0 != 0:
        eps = float(1.0 - (mean_e * n) / e0)
    return ThermalEstimates(
        beta=float(beta),
        n_spins=n,
        mean_e=mean_e,
        mean_e_err=mean_err,
        c_beta=c_beta,
        c_beta_err=c_err,
        sigma_h=float(np.sqrt(max(0.0, -n * c_beta))),
        p_le_target=p,
        p_le_err=p_err,
        target_e=float(target_e),
        residual_fraction=eps,
    )


def estimates_from_dos(
    dos: DensityOfStates, beta: float, target_e: float, e0: Optional[float] = None
) -> ThermalEstimates:
    """Same observables, computed from an exact level list (zero stderr)."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    logw = np.log(dos.degeneracies.astype(np.float64)) - beta * dos.energies
    w = np.exp(logw - logw.max())
    p_levels = w / w.sum()
    n = dos.n_spins
    mean_h = float(np.dot(p_levels, dos.energies))
    var_h = float(np.dot(p_levels, (dos.energies - mean_h) ** 2))
    p_le = float(p_levels[dos.energies <= target_e + ENERGY_TIE_TOL].sum())
    eps = None
    if e0 is not None and e0 != 0:
        eps = float(1.0 - mean_h / e0)
    return ThermalEstimates(
        beta=float(beta),
        n_spins=n,
        mean_e=mean_h / n,
        mean_e_err=0.0,
        c_beta=-var_h / n,
        c_beta_err=0.0,
        sigma_h=float(np.sqrt(var_h)),
        p_le_target=min(p_le, 1.0),
        p_le_err=0.0,
        target_e=float(target_e),
        residual_fraction=eps,
    )


def third_moment_diagnostic(samples: Sequence[float], n_spins: int):
    """Skewness of the standardized energy and the implied dc/dbeta.

    eta = (e - <e>) / sqrt(-c_beta / N); returns (<eta^3>, dc/dbeta) with
    dc/dbeta = <eta^3> * sqrt(N) * (-c_beta)^{3/2}.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if len(samples) < 1000:
        raise ValueError("need >= 1000 samples for the third-moment diagnostic")
    e = samples / n_spins
    sd = e.std()
    if sd == 0:
        raise ValueError("third-moment diagnostic undefined for zero variance")
    eta3 = float(np.mean((e - e.mean()) ** 3) / sd ** 3)
    c_beta = -n_spins * sd ** 2
    dc = eta3 * np.sqrt(n_spins) * (-c_beta) ** 1.5
    return eta3, float(dc)


def third_moment_exact(dos: DensityOfStates, beta: float):
    """Exact-DOS version of `third_moment_diagnostic`."""
    from .exact import central_moment

    n = dos.n_spins
    var_h = central_moment(dos, beta, 2)
    if var_h == 0:
        raise ValueError("third-moment diagnostic undefined for zero variance")
    mu3_h = central_moment(dos, beta, 3)
    sd_e = np.sqrt(var_h) / n
    eta3 = float((mu3_h / n ** 3) / sd_e ** 3)
    c_beta = -var_h / n
    dc = eta3 * np.sqrt(n) * (-c_beta) ** 1.5
    return eta3, float(dc)


def histogram_from_dos(dos: DensityOfStates, beta: float) -> EnergyHistogram:
    """Level-resolved Boltzmann histogram: one bin per exact level."""
    logw = np.log(dos.degeneracies.astype(np.float64)) - beta * dos.energies
    w = np.exp(logw - logw.max())
    w /= w.sum()
    edges = _lattice_edges(dos.energies)
    mean = float(np.dot(w, dos.energies))
    std = float(np.sqrt(np.dot(w, (dos.energies - mean) ** 2)))
    return EnergyHistogram(beta=beta, edges=edges, counts=w, mean=mean, std=std)


def _lattice_edges(values: np.ndarray) -> np.ndarray:
    """Edges with one bin centered on each distinct value."""
    vals = np.unique(values)
    if len(vals) == 1:
        return np.array([vals[0] - 0.5, vals[0] + 0.5])
    mids = 0.5 * (vals[:-1] + vals[1:])
    lo = vals[0] - (mids[0] - vals[0])
    hi = vals[-1] + (vals[-1] - mids[-1])
    return np.concatenate([[lo], mids, [hi]])


def build_histogram(values: Sequence[float], beta: float) -> EnergyHistogram:
    """Histogram with spectrum-aware binning.

    Discrete spectra (all gaps integer multiples of the smallest observed
    gap) get one bin per lattice point; otherwise Freedman-Diaconis.
    """
    values = np.asarray(values, dtype=np.float64)
    uniq = np.unique(values)
    if len(uniq) == 1:
        edges = np.array([uniq[0] - 0.5, uniq[0] + 0.5])
    else:
        gaps = np.diff(uniq)
        d = gaps.min()
        ratios = gaps / d
        if np.all(np.abs(ratios - np.round(ratios)) < 1e-6):
            k = np.round((uniq - uniq[0]) / d).astype(int)
            grid = uniq[0] + d * np.arange(k[-1] + 1)
            edges = np.concatenate([grid - d / 2, [grid[-1] + d / 2]])
        else:
            iqr = np.subtract(*np.percentile(values, [75, 25]))
            width = 2 * iqr / len(values) ** (1 / 3)
            if width <= 0:
                width = (uniq[-1] - uniq[0]) / max(1, int(np.sqrt(len(values))))
            n_bins = max(1, int(np.ceil((uniq[-1] - uniq[0]) / width)))
            edges = np.linspace(uniq[0], uniq[-1], n_bins + 1)
            edges[-1] += 1e-9 * max(1.0, abs(edges[-1]))
    counts, _ = np.histogram(values, bins=edges)
    return EnergyHistogram(
        beta=beta,
        edges=edges,
        counts=counts.astype(np.float64),
        mean=float(values.mean()),
        std=float(values.std()),
    )


def reweight_histogram(hist: EnergyHistogram, delta_beta: float) -> EnergyHistogram:
    """Push a histogram from beta to beta + delta_beta.

    Each bin is weighted by exp(-delta_beta * E_bin) (log-space guarded)
    and the total is renormalized to the input's total.  Exact for
    histograms built from a level list; statistical for sampled ones.
    """
    counts = np.asarray(hist.counts, dtype=np.float64)
    if counts.sum() <= 0:
        raise ValueError("cannot reweight an empty histogram")
    centers = hist.centers
    out = np.zeros_like(counts)
    mask = counts > 0
    logw = np.log(counts[mask]) - delta_beta * centers[mask]
    w = np.exp(logw - logw.max())
    out[mask] = w * (counts.sum() / w.sum())
    mean = float(np.dot(out, centers) / out.sum())
    std = float(np.sqrt(np.dot(out, (centers - mean) ** 2) / out.sum()))
    return EnergyHistogram(
        beta=hist.beta + delta_beta, edges=hist.edges.copy(), counts=out,
        mean=mean, std=std,
    )


def beta_star_from_ladder(
    series: SampleSeries, ladder: Ladder, target_e: float, q: float
):
    """Smallest rung whose estimated P(E <= target) reaches q.

    Returns (beta_star, uncertainty) with the uncertainty set to the
    spacing between the qualifying rung and its predecessor, or None when
    no rung qualifies.
    """
    if not (0 < q < 1):
        raise ValueError("q must lie strictly between 0 and 1")
    if series.samples.size == 0:
        raise ValueError("empty sample series")
    p_hat = (series.samples <= target_e + ENERGY_TIE_TOL).mean(axis=1)
    for r in range(series.n_rungs):
        if p_hat[r] >= q:
            return float(ladder.betas[r]), ladder.spacing_below(r)
    return None


@dataclass(frozen=True)
class BlockThermalizationResult:
    passed: bool
    c_values: tuple  # (last half, second quarter, second eighth)
    c_errors: tuple

    labels = ("last_half", "second_quarter", "second_eighth")


def block_thermalization_test(
    samples: Sequence[float], n_spins: int
) -> BlockThermalizationResult:
    """Equilibration check: the specific heat from the last half, the
    second quarter, and the second eighth of the series must agree within
    mutual 2 sigma."""
    samples = np.asarray(samples, dtype=np.float64)
    n = len(samples)
    if n % 8 != 0:
        raise ValueError("sample count must be divisible by 8")
    if n < 8 * N_BLOCKS:
        raise ValueError(f"need at least {8 * N_BLOCKS} samples")
    blocks = [samples[n // 2:], samples[n // 4: n // 2], samples[n // 8: n // 4]]
    stat = lambda x: -np.var(x / n_spins) * n_spins
    cs, errs = zip(*(blocked_stat(b, stat) for b in blocks))
    ok = True
    for i in range(3):
        for j in range(i + 1, 3):
            tol = 2.0 * np.hypot(errs[i], errs[j])
            if abs(cs[i] - cs[j]) > tol:
                ok = False
    return BlockThermalizationResult(passed=ok, c_values=tuple(cs), c_errors=tuple(errs))


def residual_distribution(series: SampleSeries, e0: float):
    """Histogram of E - E0 for every rung, annotated with mean and std."""
    out = []
    for r in range(series.n_rungs):
        h = build_histogram(series.samples[r] - e0, beta=float(series.betas[r]))
        out.append(h)
    return out


def estimates_to_json(estimates: Sequence[ThermalEstimates], path, header: Optional[dict] = None):
    rows = [
        {
            "beta": est.beta,
            "mean_e": est.mean_e,
            "mean_e_err": est.mean_e_err,
            "c_beta": est.c_beta,
            "c_beta_err": est.c_beta_err,
            "sigma_h": est.sigma_h,
            "p_le_target": est.p_le_target,
            "p_le_err": est.p_le_err,
            "target_e": est.target_e,
            "residual_fraction": est.residual_fraction,
        }
        for est in estimates
    ]
    doc = {"rungs": rows}
    if header:
        doc.update(header)
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1))
