"""Closed forms for the two analytically solvable reference problems:
independent spins in a uniform field and the Grover-style cost function,
plus the ground-state Gibbs weight along the interpolation path of each.

All 2^N bookkeeping is carried in log space; N is capped at 60 to stay
inside double precision.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

GROVER_N_CAP = 60


@dataclass(frozen=True)
class AnnealPoint:
    """One point on an interpolation path.

    `gap` is the spectral gap of the relevant subproblem (single-qubit gap
    for the decoupled-spins model, two-level gap Delta(s) for Grover) and
    `overlap` the ground-state weight factor (Lambda(s) or cos(theta))."""

    s: float
    gap: float
    overlap: float
    p_gs: float


# -- independent spins in a global field ------------------------------------

def indep_spins_thermo(n: int, beta: float):
    """(mu/N, sigma/sqrt(N), p0) for N free spins with field 1/2.

    mu/N = -tanh(beta/2)/2, sigma/sqrt(N) = sech(beta/2)/2, and
    p0 = [1/(1+e^-beta)]^N evaluated in log space.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    mu_per_n = -0.5 * np.tanh(beta / 2.0)
    sigma_per_sqrt_n = 0.5 / np.cosh(beta / 2.0)
    log_p0 = -n * np.log1p(np.exp(-beta))
    return float(mu_per_n), float(sigma_per_sqrt_n), float(np.exp(log_p0))


def indep_spins_beta_of_p0(n: int, p0: float):
    """(exact, large-N expansion) inverse temperature holding p0 fixed.

    Exact: beta = -ln(p0^{-1/N} - 1).  Expansion:
    beta = ln N - ln(-ln p0) + ln(p0)/(2N).
    """
    if not (0.0 < p0 < 1.0):
        raise ValueError("p0 must lie strictly between 0 and 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    beta_exact = -np.log(np.expm1(-np.log(p0) / n))
    beta_expansion = np.log(n) - np.log(-np.log(p0)) + np.log(p0) / (2.0 * n)
    return float(beta_exact), float(beta_expansion)


# -- Grover-style cost function ----------------------------------------------

def grover_thermo(n: int, beta: float):
    """(log Z, mu, sigma, p0) for one state at -N and 2^N - 1 states at -N+1."""
    if n < 1 or n > GROVER_N_CAP:
        raise ValueError(f"n must be in [1, {GROVER_N_CAP}]")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    m = 2.0 ** n - 1.0
    log_m = np.log(m)
    log_z = beta * n + np.log1p(m * np.exp(-beta))
    p0 = 1.0 / (1.0 + np.exp(np.clip(log_m - beta, -745.0, 709.0)))
    mu = -n + 1.0 - p0
    log_sigma = beta / 2.0 + 0.5 * log_m - np.logaddexp(log_m, beta)
    return float(log_z), float(mu), float(np.exp(log_sigma)), float(p0)


def grover_beta_of_p0(n: int, p0: float):
    """(exact, large-N expansion) of beta holding the Grover p0 fixed.

    Exact: beta = ln(2^N - 1) - ln(1/p0 - 1).  Expansion:
    beta = N ln 2 - ln(1/p0 - 1) - 2^-N.
    """
    if not (0.0 < p0 < 1.0):
        raise ValueError("p0 must lie strictly between 0 and 1")
    if n < 1 or n > GROVER_N_CAP:
        raise ValueError(f"n must be in [1, {GROVER_N_CAP}]")
    beta_exact = np.log(2.0 ** n - 1.0) - np.log(1.0 / p0 - 1.0)
    beta_expansion = n * np.log(2.0) - np.log(1.0 / p0 - 1.0) - 2.0 ** (-n)
    return float(beta_exact), float(beta_expansion)


# -- Gibbs weight of the final ground state along the interpolation ---------

def qubit_gap_overlap(s: float):
    """Gap, overlap, and their s-derivatives for one interpolating qubit.

    lam(s) = sqrt((1-s)^2 + s^2) is the full single-qubit spectral gap and
    Lambda(s) = (1 + s/lam)/2 the ground-state weight of the target state;
    these satisfy 2 Lambda' lam + (2 Lambda - 1) lam' = 1 identically.
    """
    lam = np.sqrt((1.0 - s) ** 2 + s ** 2)
    dlam = (2.0 * s - 1.0) / lam
    overlap = 0.5 * (1.0 + s / lam)
    doverlap = (1.0 - s) / (2.0 * lam ** 3)
    return float(lam), float(dlam), float(overlap), float(doverlap)


def qubit_anneal_identity(s: float) -> float:
    """The combination 2 Lambda' lam + (2 Lambda - 1) lam' (analytically 1)."""
    lam, dlam, overlap, doverlap = qubit_gap_overlap(s)
    return 2.0 * doverlap * lam + (2.0 * overlap - 1.0) * dlam


def qubit_anneal_gibbs_weight(n: int, beta: float, s_grid: Sequence[float]):
    """Ground-state Gibbs weight of N decoupled interpolating qubits.

    Per qubit p1(s) = Lambda tanh(beta lam / 2) + 1/(1 + e^{beta lam});
    the N-fold product is carried in log space.  At s=1 this reduces to
    the independent-spins p0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    points = []
    for s in s_grid:
        if not (0.0 <= s <= 1.0):
            raise ValueError("s must lie in [0, 1]")
        lam, _, overlap, _ = qubit_gap_overlap(s)
        p1 = overlap * np.tanh(beta * lam / 2.0) + 1.0 / (1.0 + np.exp(min(beta * lam, 709.0)))
        p_gs = np.exp(n * np.log(p1))
        points.append(AnnealPoint(s=float(s), gap=lam, overlap=overlap, p_gs=float(p_gs)))
    return points


def grover_angles(n: int, s: float):
    """(Delta, cos(theta), sin(theta)) of the Grover two-level subspace.

    Delta uses the cancellation-free form
    sqrt(2^-N + (1 - 2^-N)(1 - 2s)^2) and cos(theta) the rearrangement
    ((2s-1) + 2(1-s) 2^-N)/Delta, stable near s = 1/2.
    """
    if n < 1 or n > GROVER_N_CAP:
        raise ValueError(f"n must be in [1, {GROVER_N_CAP}]")
    if not (0.0 <= s <= 1.0):
        raise ValueError("s must lie in [0, 1]")
    inv = 2.0 ** (-n)
    delta = np.sqrt(inv + (1.0 - inv) * (1.0 - 2.0 * s) ** 2)
    cos_t = ((2.0 * s - 1.0) + 2.0 * (1.0 - s) * inv) / delta
    sin_t = 2.0 * (1.0 - s) * np.sqrt(inv) * np.sqrt(1.0 - inv) / delta
    return float(delta), float(cos_t), float(sin_t)


def grover_anneal_gibbs_weight(n: int, beta: float, s_grid: Sequence[float]):
    """Gibbs weight of the marked state along the Grover interpolation.

    p(s) = [cosh(b D/2) + cos(theta) sinh(b D/2)] /
           [2 cosh(b D/2) + (2^N - 2) e^{-b/2}],
    evaluated with all exponentials <= 1 so large beta stays finite.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    points = []
    for s in s_grid:
        delta, cos_t, _ = grover_angles(n, s)
        ed = np.exp(-beta * delta)
        etail = np.exp(-beta * (1.0 + delta) / 2.0)
        num = 0.5 * ((1.0 + cos_t) + (1.0 - cos_t) * ed)
        den = 1.0 + ed + (2.0 ** n - 2.0) * etail
        points.append(
            AnnealPoint(s=float(s), gap=delta, overlap=cos_t, p_gs=float(num / den))
        )
    return points


def write_anneal_curve(points: Sequence[AnnealPoint], path, header_comment: str = ""):
    """CSV of (s, gap, overlap, p_gs) for plotting."""
    with open(Path(path), "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow(["s", "gap", "overlap", "p_gs"])
        for pt in points:
            w.writerow([repr(pt.s), repr(pt.gap), repr(pt.overlap), repr(pt.p_gs)])
