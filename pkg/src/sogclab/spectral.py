"""Symmetric eigendecomposition and graph Fourier transforms.

The eigensolver is a cyclic-by-row Jacobi iteration with a skip threshold:
sweeps visit the strict upper triangle row by row and rotate away any entry
whose magnitude exceeds ``tol * max|input entry|``, stopping after a full
sweep performs no rotation. The rotation budget is capped at 100 * N^2.
When numba is installed the inner loop is JIT-compiled (same arithmetic,
same rotation order); otherwise a vectorized numpy twin runs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .graphs import _readonly


def _jacobi_kernel_py(A: np.ndarray, V: np.ndarray, thresh: float, max_rot: int) -> int:
    """Numpy twin of the jitted kernel; identical formulas and rotation order."""
    n = A.shape[0]
    rot = 0
    while True:
        did = 0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= thresh:
                    continue
                did += 1
                rot += 1
                if rot > max_rot:
                    return -1
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        if did == 0:
            return rot


def _jacobi_kernel_loops(A, V, thresh, max_rot):  # pragma: no cover - jit source
    n = A.shape[0]
    rot = 0
    while True:
        did = 0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= thresh:
                    continue
                did += 1
                rot += 1
                if rot > max_rot:
                    return -1
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for i in range(n):
                    aip = A[i, p]
                    aiq = A[i, q]
                    A[i, p] = c * aip - s * aiq
                    A[i, q] = s * aip + c * aiq
                for i in range(n):
                    api = A[p, i]
                    aqi = A[q, i]
                    A[p, i] = c * api - s * aqi
                    A[q, i] = s * api + c * aqi
                A[p, q] = 0.0
                A[q, p] = 0.0
                for i in range(n):
                    vip = V[i, p]
                    viq = V[i, q]
                    V[i, p] = c * vip - s * viq
                    V[i, q] = s * vip + c * viq
        if did == 0:
            return rot


try:  # optional JIT; the fallback computes bit-identical results
    from numba import njit

    _jacobi_kernel = njit(cache=True, nogil=True)(_jacobi_kernel_loops)
except ImportError:  # pragma: no cover
    _jacobi_kernel = _jacobi_kernel_py


@dataclass(frozen=True)
class SpectralBasis:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.

    Column i of ``eigenvectors`` pairs with ``eigenvalues[i]``. The sign of
    each eigenvector is arbitrary; downstream checks must be sign-invariant.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]


def eigendecompose(matrix: np.ndarray, tol: float = 1e-12,
                   _max_rotations: int | None = None) -> SpectralBasis:
    """Full eigendecomposition of a real symmetric matrix by cyclic Jacobi.

    ``tol`` is relative to the largest absolute entry of the input: the
    iteration stops once every off-diagonal magnitude falls below
    ``tol * max|entry|``. Raises ``ValueError`` on non-symmetric input and
    ``NumericError`` if the rotation cap (100 * N^2, overridable for tests)
    is exhausted.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if np.abs(a - a.T).max(initial=0.0) > 1e-12:
        raise ValueError("matrix is not symmetric within 1e-12")
    A = a.copy()
    V = np.eye(n)
    scale = np.abs(A).max(initial=0.0)
    cap = 100 * n * n if _max_rotations is None else int(_max_rotations)
    if n > 1 and scale > 0.0:
        rot = _jacobi_kernel(A, V, tol * scale, cap)
        if rot < 0:
            off = np.abs(A - np.diag(np.diag(A))).max()
            raise NumericError(
                f"jacobi iteration exceeded {cap} rotations "
                f"(max off-diagonal {off:.3e})"
            )
    lam = np.diag(A).copy()
    order = np.argsort(lam, kind="stable")
    return SpectralBasis(
        eigenvalues=_readonly(lam[order]),
        eigenvectors=_readonly(np.ascontiguousarray(V[:, order])),
    )


def gft(basis: SpectralBasis, x: np.ndarray) -> np.ndarray:
    """Graph Fourier transform: project node signals onto the eigenbasis, U^T x."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != basis.size:
        raise ValueError(f"signal has {x.shape[0]} rows, basis has {basis.size}")
    return basis.eigenvectors.T @ x


def igft(basis: SpectralBasis, s: np.ndarray) -> np.ndarray:
    """Inverse graph Fourier transform, U s. Inverse of :func:`gft`."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape[0] != basis.size:
        raise ValueError(f"spectrum has {s.shape[0]} rows, basis has {basis.size}")
    return basis.eigenvectors @ s


def pooled_spectrum(graphs, eigen_tol: float = 1e-7) -> np.ndarray:
    """Distinct eigenvalues pooled over a graph set.

    Eigenvalues of all normalized adjacencies are sorted and chained into
    clusters: a new cluster starts whenever the gap between consecutive
    values exceeds ``eigen_tol``. Returns the cluster means, ascending.
    """
    graphs = list(graphs)
    if not graphs:
        raise ValueError("graph set must be non-empty")
    if eigen_tol <= 0.0:
        raise ValueError(f"eigen_tol must be positive, got {eigen_tol}")
    pooled = np.sort(
        np.concatenate(
            [eigendecompose(g.norm_adjacency).eigenvalues for g in graphs]
        )
    )
    reps = []
    start = 0
    for i in range(1, pooled.size + 1):
        if i == pooled.size or pooled[i] - pooled[i - 1] > eigen_tol:
            reps.append(pooled[start:i].mean())
            start = i
    return np.asarray(reps)


def spectrum_capacity(graphs, eigen_tol: float = 1e-7) -> int:
    """Number of distinct eigenvalues pooled over a graph set."""
    return int(pooled_spectrum(graphs, eigen_tol).size)
