"""Exhaustive-enumeration ground truth for small instances.

The density of states is exact: a Gray-code walk touches every one of the
2^N configurations with an incremental energy update that only visits the
terms containing the flipped spin.  When all coefficients are integers or
half-integers the binning is exact integer arithmetic on 2E.  Everything
downstream (thermodynamics, entropy curve, beta*) is a deterministic
function of the level list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit, prange, types
from numba.typed import Dict as NumbaDict

from .instances import Instance, flatten_terms

DEFAULT_ENUMERATION_CAP = 26


@dataclass(frozen=True)
class DensityOfStates:
    """Exact level list: energies ascending, integer degeneracies."""

    n_spins: int
    energies: np.ndarray  # float64, strictly increasing
    degeneracies: np.ndarray  # int64, all >= 1

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=np.float64)
        g = np.asarray(self.degeneracies, dtype=np.int64)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "degeneracies", g)
        if e.shape != g.shape or e.ndim != 1 or len(e) == 0:
            raise ValueError("energies and degeneracies must be matching 1-d arrays")
        if np.any(np.diff(e) <= 0):
            raise ValueError("energies must be strictly increasing")
        if np.any(g < 1):
            raise ValueError("every level needs degeneracy >= 1")
        if int(g.sum()) != 2 ** self.n_spins:
            raise ValueError("degeneracies must sum to 2^N")

    @property
    def levels(self) -> list:
        return [(float(e), int(g)) for e, g in zip(self.energies, self.degeneracies)]

    @property
    def e0(self) -> float:
        return float(self.energies[0])

    @property
    def gap(self) -> float:
        if len(self.energies) < 2:
            return 0.0
        return float(self.energies[1] - self.energies[0])

    def save(self, path) -> None:
        doc = {"n_spins": self.n_spins, "levels": [[float(e), int(g)] for e, g in self.levels]}
        Path(path).write_text(json.dumps(doc, sort_keys=True))

    @staticmethod
    def load(path) -> "DensityOfStates":
        doc = json.loads(Path(path).read_text())
        lv = np.asarray(doc["levels"], dtype=np.float64)
        return DensityOfStates(int(doc["n_spins"]), lv[:, 0], lv[:, 1].astype(np.int64))


@dataclass(frozen=True)
class ExactThermo:
    """Thermodynamics at one beta.  c_beta <= 0 in this sign convention."""

    beta: float
    log_z: float
    mean_e: float  # intensive, <H>/N
    c_beta: float  # intensive, d<e>/dbeta = -N var(e)
    sigma_h: float  # extensive, sqrt(-N c_beta) = std(H)
    p_le_target: float
    target_e: float


@njit(cache=True)
def _gray_init(spins, val, coeff, support, lo):
    g = lo ^ (lo >> 1)
    for j in range(spins.shape[0]):
        spins[j] = -1 if (g >> j) & 1 else 1
    e = 0
    for t in range(coeff.shape[0]):
        v = coeff[t]
        for a in range(3):
            jj = support[t, a]
            if jj >= 0:
                v *= spins[jj]
        val[t] = v
        e += v
    return e


@njit(parallel=True, cache=True)
def _dos_int_kernel(n, coeff2, support, indptr, term_idx, chunks_log2, smax):
    width = 2 * smax + 1
    n_chunks = 1 << chunks_log2
    chunk_size = (1 << n) >> chunks_log2
    counts = np.zeros((n_chunks, width), dtype=np.int64)
    for chunk in prange(n_chunks):
        lo = chunk * chunk_size
        spins = np.empty(n, dtype=np.int64)
        val = np.empty(coeff2.shape[0], dtype=np.int64)
        e = _gray_init(spins, val, coeff2, support, lo)
        counts[chunk, e + smax] += 1
        for m in range(lo + 1, lo + chunk_size):
            b = 0
            mm = m
            while mm & 1 == 0:
                mm >>= 1
                b += 1
            d = 0
            for p in range(indptr[b], indptr[b + 1]):
                t = term_idx[p]
                v = -val[t]
                val[t] = v
                d += v
            e += 2 * d
            counts[chunk, e + smax] += 1
    out = np.zeros(width, dtype=np.int64)
    for c in range(n_chunks):
        for k in range(width):
            out[k] += counts[c, k]
    return out


@njit(cache=True)
def _dos_float_kernel(n, coeff, support, indptr, term_idx):
    # Serial fallback for non-half-integer couplings: energies quantized to
    # ~1e-9 for binning, with periodic full recomputation so incremental
    # float drift stays below the bin resolution.
    scale = float(1 << 30)
    counts = NumbaDict.empty(types.int64, types.int64)
    reps = NumbaDict.empty(types.int64, types.float64)
    spins = np.empty(n, dtype=np.int64)
    valf = np.empty(coeff.shape[0], dtype=np.float64)
    e = _gray_init(spins, valf, coeff, support, 0)
    key = np.int64(round(e * scale))
    counts[key] = 1
    reps[key] = e
    total = 1 << n
    for m in range(1, total):
        b = 0
        mm = m
        while mm & 1 == 0:
            mm >>= 1
            b += 1
        d = 0.0
        for p in range(indptr[b], indptr[b + 1]):
            t = term_idx[p]
            v = -valf[t]
            valf[t] = v
            d += v
        e += 2.0 * d
        if m & 1023 == 0:
            e = _gray_init(spins, valf, coeff, support, m)
        key = np.int64(round(e * scale))
        if key in counts:
            counts[key] += 1
        else:
            counts[key] = 1
            reps[key] = e
    n_levels = len(counts)
    keys = np.empty(n_levels, dtype=np.int64)
    i = 0
    for k in counts:
        keys[i] = k
        i += 1
    keys.sort()
    es = np.empty(n_levels, dtype=np.float64)
    gs = np.empty(n_levels, dtype=np.int64)
    for i in range(n_levels):
        es[i] = reps[keys[i]]
        gs[i] = counts[keys[i]]
    return es, gs


def _half_integer_scale(coeff: np.ndarray):
    doubled = coeff * 2.0
    rounded = np.round(doubled)
    if np.all(np.abs(doubled - rounded) < 1e-9):
        return rounded.astype(np.int64)
    return None


def enumerate_dos(instance: Instance, max_spins: int = DEFAULT_ENUMERATION_CAP) -> DensityOfStates:
    """Exact density of states by Gray-code enumeration.

    Refuses instances beyond `max_spins` (default 26): the walk is O(2^N).
    Work is split over the top bits of the configuration index into
    independent sub-ranges whose counts merge exactly, so thread count
    never changes the result.
    """
    n = instance.n_spins
    if n > max_spins:
        raise ValueError(
            f"enumeration over 2^{n} states refused (cap {max_spins}); "
            "raise max_spins explicitly if you really want this"
        )
    coeff, support, indptr, term_idx = flatten_terms(instance)
    if len(instance.terms) == 0:
        return DensityOfStates(n, np.array([0.0]), np.array([2 ** n], dtype=np.int64))

    coeff2 = _half_integer_scale(coeff)
    if coeff2 is not None and int(np.abs(coeff2).sum()) <= 5_000_000:
        smax = int(np.abs(coeff2).sum())
        chunks_log2 = min(6, max(0, n - 14))
        counts = _dos_int_kernel(n, coeff2, support, indptr, term_idx, chunks_log2, smax)
        nz = np.nonzero(counts)[0]
        energies = (nz - smax) / 2.0
        degeneracies = counts[nz]
    else:
        energies, degeneracies = _dos_float_kernel(n, coeff, support, indptr, term_idx)
    return DensityOfStates(n, energies, degeneracies)


def _level_probabilities(dos: DensityOfStates, beta: float):
    x = np.log(dos.degeneracies.astype(np.float64)) - beta * dos.energies
    shift = x.max()
    w = np.exp(x - shift)
    z = w.sum()
    return w / z, shift + np.log(z)


def thermo_from_dos(dos: DensityOfStates, beta: float, target_e: float) -> ExactThermo:
    """Exact <e>, c_beta, sigma(H), and P(E <= target) at one beta."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    p, log_z = _level_probabilities(dos, beta)
    e_mean = float(np.dot(p, dos.energies))
    var = float(np.dot(p, (dos.energies - e_mean) ** 2))
    n = dos.n_spins
    p_le = float(p[dos.energies <= target_e + 1e-9].sum())
    return ExactThermo(
        beta=beta,
        log_z=float(log_z),
        mean_e=e_mean / n,
        c_beta=-var / n,
        sigma_h=float(np.sqrt(var)),
        p_le_target=min(p_le, 1.0),
        target_e=target_e,
    )


def central_moment(dos: DensityOfStates, beta: float, order: int) -> float:
    """Exact central moment of the extensive energy, <(H - <H>)^order>."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    p, _ = _level_probabilities(dos, beta)
    mean = np.dot(p, dos.energies)
    return float(np.dot(p, (dos.energies - mean) ** order))


def entropy_and_psi(dos: DensityOfStates, beta: float):
    """Entropy density per level and the maximizer of s(e) - beta*e.

    Returns ([(e_n, s(e_n)), ...], e_star).  Ties in the functional break
    toward the lower energy.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    n = dos.n_spins
    e = dos.energies / n
    s = np.log(dos.degeneracies.astype(np.float64)) / n
    psi = s - beta * e
    e_star = float(e[int(np.argmax(psi))])  # argmax takes the first, lowest-e maximizer
    return list(zip(e.tolist(), s.tolist())), e_star


def beta_star_exact(
    dos: DensityOfStates,
    target_e: float,
    q: float,
    rel_tol: float = 1e-6,
) -> float:
    """Smallest beta with P_beta(E <= target_e) >= q, by bisection.

    Returns 0 when the infinite-temperature distribution already satisfies
    the demand.
    """
    if not (0.0 < q < 1.0):
        raise ValueError("q must lie strictly between 0 and 1")
    if target_e < dos.e0 - 1e-9:
        raise ValueError("target energy below the ground state is unreachable")

    def p_le(beta):
        return thermo_from_dos(dos, beta, target_e).p_le_target

    if p_le(0.0) >= q:
        return 0.0
    hi = 1.0
    while p_le(hi) < q:
        hi *= 2.0
        if hi > 2 ** 60:
            raise RuntimeError("bisection bracket blew up; malformed level list?")
    lo = hi / 2.0 if hi > 1.0 else 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if p_le(mid) >= q:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
