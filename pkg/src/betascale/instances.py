"""Instance classes: Chimera graphs, planted frustrated-loop spin glasses,
random bimodal couplings, and 3-regular 3-XORSAT hypergraphs.

All generators are pure functions of (inputs, seed): identical calls give
bitwise-identical instances.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .seeds import split_seed

# Couplings may accumulate when frustrated loops share an edge; the generator
# rejects loops that would push any |J| beyond this, keeping strengths bounded
# and discretized.
MAX_COUPLING = 2.0

SpinConfig = np.ndarray  # 1-d int8 array of +-1


class GenerationError(RuntimeError):
    """An instance generator exhausted its retry budget."""


def as_spin_config(values: Sequence[int]) -> SpinConfig:
    arr = np.asarray(values, dtype=np.int8)
    if arr.ndim != 1 or not np.all(np.abs(arr) == 1):
        raise ValueError("spin configuration must be a flat sequence of +-1")
    return arr


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph; edges are sorted (i, j) pairs with i < j."""

    n_nodes: int
    edges: frozenset

    def __post_init__(self):
        if self.n_nodes < 0:
            raise ValueError("n_nodes must be nonnegative")
        for (i, j) in self.edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < j < self.n_nodes):
                raise ValueError(f"edge ({i},{j}) out of range or unsorted")

    @staticmethod
    def from_edges(n_nodes: int, edges: Iterable[tuple]) -> "Graph":
        return Graph(n_nodes, frozenset((min(i, j), max(i, j)) for i, j in edges))

    def neighbors(self) -> list:
        adj = [[] for _ in range(self.n_nodes)]
        for (i, j) in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return [sorted(a) for a in adj]

    def degree(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        for (i, j) in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def induced(self, nodes: Sequence[int]) -> "Graph":
        """Subgraph on `nodes`, renumbered 0..len(nodes)-1 in sorted order.

        Supports fault-masked lattices (dead qubits dropped from a Chimera
        graph) without a dedicated generator path.
        """
        keep = sorted(set(nodes))
        if keep and not (0 <= keep[0] and keep[-1] < self.n_nodes):
            raise ValueError("induced nodes out of range")
        index = {v: k for k, v in enumerate(keep)}
        edges = [(index[i], index[j]) for (i, j) in self.edges if i in index and j in index]
        return Graph.from_edges(len(keep), edges)

    def is_connected_on_support(self) -> bool:
        """True when the nodes with degree >= 1 form one component."""
        adj = self.neighbors()
        support = [v for v in range(self.n_nodes) if adj[v]]
        if not support:
            return False
        seen = {support[0]}
        stack = [support[0]]
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == len(support)


@dataclass(frozen=True)
class Term:
    """One k-local coupling: coefficient * prod(s_i for i in support)."""

    support: tuple
    coefficient: float

    def __post_init__(self):
        sup = tuple(int(i) for i in self.support)
        object.__setattr__(self, "support", sup)
        if not (1 <= len(sup) <= 3):
            raise ValueError("term arity must be 1, 2, or 3")
        if list(sup) != sorted(set(sup)):
            raise ValueError("support must be sorted and free of repeats")
        if not abs(self.coefficient) <= MAX_COUPLING:
            raise ValueError(f"|coefficient| must be <= {MAX_COUPLING}")


@dataclass(frozen=True)
class Instance:
    """A k-local (k <= 3) Ising cost function over n_spins variables."""

    n_spins: int
    terms: tuple
    class_tag: str = "custom"
    seed: int = 0
    planted_config: Optional[SpinConfig] = None
    known_e0: Optional[float] = None
    known_gap: Optional[float] = None

    def __post_init__(self):
        if self.class_tag not in ("planted", "bimodal", "xorsat3", "custom"):
            raise ValueError(f"unknown class_tag {self.class_tag!r}")
        for t in self.terms:
            if t.support[-1] >= self.n_spins:
                raise ValueError(f"term support {t.support} exceeds n_spins={self.n_spins}")
        if self.class_tag == "xorsat3":
            for t in self.terms:
                if len(t.support) != 3 or t.coefficient != 1.0:
                    raise ValueError("xorsat3 terms must be arity-3 with coefficient +1")
        if self.planted_config is not None:
            cfg = as_spin_config(self.planted_config)
            object.__setattr__(self, "planted_config", cfg)
            if len(cfg) != self.n_spins:
                raise ValueError("planted_config length mismatch")
            if self.known_e0 is not None and abs(energy(self, cfg) - self.known_e0) > 1e-9:
                raise ValueError("planted_config does not attain known_e0")

    # -- serialization ----------------------------------------------------
    def to_json_dict(self) -> dict:
        doc = {
            "n_spins": self.n_spins,
            "class_tag": self.class_tag,
            "seed": self.seed,
            "terms": [
                {"support": list(t.support), "coeff": str(Decimal(t.coefficient))}
                for t in self.terms
            ],
        }
        if self.planted_config is not None:
            doc["planted_config"] = [int(s) for s in self.planted_config]
        if self.known_e0 is not None:
            doc["known_e0"] = self.known_e0
        if self.known_gap is not None:
            doc["known_gap"] = self.known_gap
        return doc

    @staticmethod
    def from_json_dict(doc: dict) -> "Instance":
        terms = tuple(
            Term(tuple(t["support"]), float(t["coeff"])) for t in doc["terms"]
        )
        planted = doc.get("planted_config")
        return Instance(
            n_spins=int(doc["n_spins"]),
            terms=terms,
            class_tag=doc["class_tag"],
            seed=int(doc["seed"]),
            planted_config=None if planted is None else as_spin_config(planted),
            known_e0=doc.get("known_e0"),
            known_gap=doc.get("known_gap"),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), sort_keys=True, indent=1))

    @staticmethod
    def load(path) -> "Instance":
        return Instance.from_json_dict(json.loads(Path(path).read_text()))

    def content_hash(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def build_chimera(rows: int, cols: int) -> Graph:
    """Chimera lattice: rows x cols grid of K_{4,4} cells, 8 qubits each.

    Node numbering is deterministic and cell-major:
    ``8*(r*cols + c) + 4*z + k`` with partition z in {0,1} and in-partition
    index k in {0..3}.  Partition 0 couples to the horizontally adjacent
    cell at the same k, partition 1 to the vertically adjacent cell.
    """
    if rows < 1 or cols < 1:
        raise ValueError("chimera dimensions must be >= 1")

    def node(r, c, z, k):
        return 8 * (r * cols + c) + 4 * z + k

    edges = []
    for r in range(rows):
        for c in range(cols):
            for k0 in range(4):
                for k1 in range(4):
                    edges.append((node(r, c, 0, k0), node(r, c, 1, k1)))
            if c + 1 < cols:
                for k in range(4):
                    edges.append((node(r, c, 0, k), node(r, c + 1, 0, k)))
            if r + 1 < rows:
                for k in range(4):
                    edges.append((node(r, c, 1, k), node(r + 1, c, 1, k)))
    return Graph.from_edges(8 * rows * cols, edges)


def energy(instance: Instance, config: SpinConfig) -> float:
    """Cost of one configuration: sum over terms of coeff * prod(spins)."""
    cfg = np.asarray(config)
    if cfg.shape != (instance.n_spins,):
        raise ValueError(
            f"config length {cfg.shape} does not match n_spins={instance.n_spins}"
        )
    total = 0.0
    for t in instance.terms:
        v = t.coefficient
        for i in t.support:
            v *= cfg[i]
        total += v
    return float(total)


def _find_cycle(adj, rng, length_cap, max_restarts=2000):
    """Simple cycle via self-avoiding random walk; restart on dead ends.

    Each step picks uniformly among unvisited neighbors and path nodes that
    would close a cycle of length >= 3; stepping onto a path node closes.
    """
    candidates = [v for v in range(len(adj)) if len(adj[v]) >= 2]
    if not candidates:
        raise GenerationError("graph has no node of degree >= 2; no cycle exists")
    for _ in range(max_restarts):
        start = candidates[rng.integers(len(candidates))]
        path = [start]
        pos = {start: 0}
        for _ in range(length_cap):
            cur = path[-1]
            closing = [u for u in adj[cur] if u in pos and pos[u] <= len(path) - 3]
            fresh = [u for u in adj[cur] if u not in pos]
            options = closing + fresh
            if not options:
                break
            nxt = options[rng.integers(len(options))]
            if nxt in pos:
                return path[pos[nxt]:]
            pos[nxt] = len(path)
            path.append(nxt)
    raise GenerationError(f"no cycle found within {length_cap} steps after {max_restarts} restarts")


def generate_planted(
    graph: Graph,
    loops_per_spin: float,
    loop_length_cap: int = 100,
    rng_seed: int = 0,
    coupling_bound: float = MAX_COUPLING,
) -> Instance:
    """Frustrated-loop instance with a known planted ground state.

    Draws a uniform random target configuration, then lays down
    ``M = round(loops_per_spin * N)`` loop terms.  In the gauge where the
    target is all-up, every loop edge couples -1 except one uniformly
    chosen +1 edge, so the loop's minimum is -(len-2) and the target
    attains every loop minimum simultaneously:

        E0 = -sum_j (len_j - 2)

    Couplings on shared edges accumulate; a loop that would push any
    |J| beyond `coupling_bound` is rejected and redrawn.  All excitations
    come in steps of 4, so the spectrum sits on E0 + 4*Z>=0.
    """
    if loops_per_spin <= 0:
        raise ValueError("loops_per_spin must be positive")
    if not graph.is_connected_on_support():
        raise ValueError("graph must be connected on its non-isolated nodes")
    n = graph.n_nodes
    m_loops = int(round(loops_per_spin * n))
    if m_loops == 0:
        raise ValueError("loops_per_spin too small: zero loop terms requested")

    rng = np.random.default_rng(split_seed(rng_seed, 0))
    planted = rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
    adj = graph.neighbors()

    couplings: dict = {}
    lengths = []
    attempts = 0
    max_attempts = 200 * m_loops + 200
    while len(lengths) < m_loops:
        attempts += 1
        if attempts > max_attempts:
            raise GenerationError("coupling bound rejections exhausted the retry budget")
        cycle = _find_cycle(adj, rng, loop_length_cap)
        length = len(cycle)
        loop_edges = [
            (min(cycle[i], cycle[(i + 1) % length]), max(cycle[i], cycle[(i + 1) % length]))
            for i in range(length)
        ]
        af_index = int(rng.integers(length))
        update = {}
        ok = True
        for i, e in enumerate(loop_edges):
            j_gauge = 1.0 if i == af_index else -1.0
            new = couplings.get(e, 0.0) + update.get(e, 0.0) + j_gauge
            if abs(new) > coupling_bound + 1e-12:
                ok = False
                break
            update[e] = update.get(e, 0.0) + j_gauge
        if not ok:
            continue
        for e, dj in update.items():
            couplings[e] = couplings.get(e, 0.0) + dj
        lengths.append(length)

    terms = []
    for (i, j) in sorted(couplings):
        j_gauge = couplings[(i, j)]
        if j_gauge == 0.0:
            continue  # cancelled exactly; drop the dead edge
        terms.append(Term((i, j), j_gauge * float(planted[i]) * float(planted[j])))

    e0 = -float(sum(length - 2 for length in lengths))
    return Instance(
        n_spins=n,
        terms=tuple(terms),
        class_tag="planted",
        seed=rng_seed,
        planted_config=planted,
        known_e0=e0,
    )


def generate_bimodal(graph: Graph, rng_seed: int = 0) -> Instance:
    """Random +-1 coupling on every edge, equiprobable; no fields."""
    if graph.n_nodes == 0 or not graph.edges:
        raise ValueError("graph must have at least one edge")
    rng = np.random.default_rng(split_seed(rng_seed, 0))
    edges = sorted(graph.edges)
    signs = rng.choice(np.array([-1.0, 1.0]), size=len(edges))
    terms = tuple(Term(e, float(s)) for e, s in zip(edges, signs))
    return Instance(n_spins=graph.n_nodes, terms=terms, class_tag="bimodal", seed=rng_seed)


def generate_xorsat3(n_spins: int, rng_seed: int = 0, max_retries: int = 1000) -> Instance:
    """3-regular 3-XORSAT: N clauses, every spin in exactly 3 clauses.

    Clauses are +s_i s_j s_k, all antiferromagnetic with strength 1, so the
    all-down state minimizes each clause at -1 and E0 = -N.  The hypergraph
    comes from a configuration-model pairing of the 3N variable stubs into
    N triples, rejecting pairings where any triple repeats a variable.
    """
    if n_spins < 4:
        raise ValueError("need n_spins >= 4 for a 3-regular 3-uniform hypergraph")
    rng = np.random.default_rng(split_seed(rng_seed, 0))
    stubs = np.repeat(np.arange(n_spins), 3)
    for _ in range(max_retries):
        triples = rng.permutation(stubs).reshape(n_spins, 3)
        triples.sort(axis=1)
        if np.all(np.diff(triples, axis=1) > 0):
            break
    else:
        raise GenerationError(f"no simple stub pairing found in {max_retries} tries")
    terms = tuple(Term(tuple(int(v) for v in row), 1.0) for row in triples)
    planted = -np.ones(n_spins, dtype=np.int8)
    return Instance(
        n_spins=n_spins,
        terms=terms,
        class_tag="xorsat3",
        seed=rng_seed,
        planted_config=planted,
        known_e0=-float(n_spins),
    )


def gauge_transform(
    instance: Instance,
    gauge: Optional[SpinConfig] = None,
    rng_seed_for_random_gauge: Optional[int] = None,
) -> Instance:
    """Relabel spins s_i -> g_i s_i; the spectrum is invariant.

    Arity-2 coefficients pick up g_i*g_j, arity-1 pick up g_i; the planted
    configuration maps by elementwise product.  Pass an explicit gauge or a
    seed to draw a uniform random one.  Instances with 3-body terms are
    rejected: gauge covariance is only tracked here for arities 1-2.
    """
    if any(len(t.support) == 3 for t in instance.terms):
        raise ValueError("gauge transform unsupported for instances with arity-3 terms")
    if gauge is None:
        if rng_seed_for_random_gauge is None:
            raise ValueError("provide a gauge or a seed for a random one")
        rng = np.random.default_rng(split_seed(rng_seed_for_random_gauge, 0))
        gauge = rng.choice(np.array([-1, 1], dtype=np.int8), size=instance.n_spins)
    g = as_spin_config(gauge)
    if len(g) != instance.n_spins:
        raise ValueError("gauge length mismatch")

    terms = []
    for t in instance.terms:
        factor = 1.0
        for i in t.support:
            factor *= float(g[i])
        terms.append(Term(t.support, t.coefficient * factor))
    planted = None if instance.planted_config is None else instance.planted_config * g
    return replace(instance, terms=tuple(terms), planted_config=planted, class_tag=instance.class_tag)


def flatten_terms(instance: Instance):
    """Pack terms into flat arrays for the numba kernels.

    Returns (coeff[T], support[T,3] padded with -1, indptr[N+1], term_idx)
    where term_idx lists, per spin, the indices of terms containing it.
    """
    n, terms = instance.n_spins, instance.terms
    n_terms = len(terms)
    coeff = np.zeros(n_terms, dtype=np.float64)
    support = -np.ones((n_terms, 3), dtype=np.int64)
    per_spin = [[] for _ in range(n)]
    for t_id, t in enumerate(terms):
        coeff[t_id] = t.coefficient
        for a, i in enumerate(t.support):
            support[t_id, a] = i
            per_spin[i].append(t_id)
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        indptr[i + 1] = indptr[i] + len(per_spin[i])
    flat = [t for lst in per_spin for t in lst]
    term_idx = np.asarray(flat, dtype=np.int64) if flat else np.zeros(0, dtype=np.int64)
    return coeff, support, indptr, term_idx
