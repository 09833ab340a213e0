"""Graph container, seeded random-graph generation, one-hop aggregation.

The central object is :class:`Graph`: an undirected simple graph that caches
its symmetric-normalized adjacency matrix A, with A[u, v] = 1/sqrt(d_u d_v)
on edges and zero elsewhere. Isolated nodes are kept and contribute all-zero
rows/columns. Every eigenvalue of A lies in [-1, 1].

Randomness: all generation runs on numpy's PCG64 bit generator seeded
explicitly (optionally through a ``SeedSequence`` spawn key), so a given
seed reproduces the same graph byte for byte on a fixed numpy version.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph.

    ``edges`` holds unordered pairs stored as (u, v) with u < v, sorted and
    de-duplicated; self-loops are rejected. Instances are safe to share
    between threads: all cached arrays are marked read-only.
    """

    num_nodes: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        n = int(self.num_nodes)
        if n < 1:
            raise ValueError(f"num_nodes must be >= 1, got {n}")
        canon = []
        for pair in self.edges:
            u, v = int(pair[0]), int(pair[1])
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if u > v:
                u, v = v, u
            if not 0 <= u < v < n:
                raise ValueError(f"edge ({u}, {v}) out of range for {n} nodes")
            canon.append((u, v))
        canon.sort()
        for a, b in zip(canon, canon[1:]):
            if a == b:
                raise ValueError(f"duplicate edge {a}")
        object.__setattr__(self, "num_nodes", n)
        object.__setattr__(self, "edges", tuple(canon))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.zeros(self.num_nodes, dtype=np.int64)
        for u, v in self.edges:
            d[u] += 1
            d[v] += 1
        return _readonly(d)

    @cached_property
    def _edge_weights(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Directed edge arrays (rows, cols, 1/sqrt(d_r d_c)), both directions."""
        if not self.edges:
            z = np.zeros(0)
            return z.astype(np.int64), z.astype(np.int64), z
        e = np.asarray(self.edges, dtype=np.int64)
        inv_sqrt_d = np.zeros(self.num_nodes)
        pos = self.degrees > 0
        inv_sqrt_d[pos] = 1.0 / np.sqrt(self.degrees[pos].astype(np.float64))
        w = inv_sqrt_d[e[:, 0]] * inv_sqrt_d[e[:, 1]]
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return rows, cols, np.concatenate([w, w])

    @cached_property
    def _csr(self) -> sp.csr_matrix:
        rows, cols, w = self._edge_weights
        n = self.num_nodes
        return sp.csr_matrix((w, (rows, cols)), shape=(n, n))

    @cached_property
    def _csr_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        csr = self._csr
        return csr.indptr, csr.indices, csr.data

    @cached_property
    def norm_adjacency(self) -> np.ndarray:
        """Dense symmetric-normalized adjacency (cached, read-only)."""
        n = self.num_nodes
        a = np.zeros((n, n))
        rows, cols, w = self._edge_weights
        a[rows, cols] = w
        return _readonly(a)


def normalize_adjacency(graph: Graph) -> np.ndarray:
    """Return the cached symmetric-normalized adjacency of ``graph``."""
    return graph.norm_adjacency


def _csr_matvec_loops(indptr, indices, data, x, out):  # pragma: no cover - jit source
    n, c = out.shape
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            w = data[k]
            j = indices[k]
            for ch in range(c):
                out[i, ch] += w * x[j, ch]


try:  # optional JIT; same per-row accumulation order as scipy's CSR matvec
    from numba import njit as _njit

    _csr_matvec = _njit(cache=True, nogil=True)(_csr_matvec_loops)
except ImportError:  # pragma: no cover
    _csr_matvec = None


def aggregate_once(graph: Graph, x: np.ndarray) -> np.ndarray:
    """One aggregation hop: A @ x via sparse neighbor traversal.

    ``x`` may be a length-N vector or an N-by-C matrix; the result has the
    same shape. Equivalent to the dense product with ``norm_adjacency`` but
    never materializes it.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2):
        raise ValueError(f"signal must be 1-D or 2-D, got ndim={x.ndim}")
    if x.shape[0] != graph.num_nodes:
        raise ValueError(
            f"signal has {x.shape[0]} rows, graph has {graph.num_nodes} nodes"
        )
    if _csr_matvec is None:
        return graph._csr @ x
    x2d = x[:, None] if x.ndim == 1 else np.ascontiguousarray(x)
    out = np.zeros_like(x2d)
    indptr, indices, data = graph._csr_arrays
    _csr_matvec(indptr, indices, data, x2d, out)
    return out[:, 0] if x.ndim == 1 else out


def _er_edges(n: int, p: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Bernoulli(p) draw over all unordered pairs, row-major pair order."""
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.size) < p
    return [(int(u), int(v)) for u, v in zip(iu[mask], ju[mask])]


def erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """Seeded G(n, p) random graph.

    Each unordered pair is included independently with probability ``p``.
    Identical ``(n, p, seed)`` give identical edge sets.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly between 0 and 1, got {p}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    return Graph(n, tuple(_er_edges(n, p, rng)))
