"""Polynomial graph filter algebra.

A filter is a real polynomial p evaluated at the normalized adjacency:
y = p(A) x. Composition of two filters corresponds to multiplying their
polynomials, so cascade analysis reduces to polynomial factorization. Since
any real polynomial splits over the reals into factors of degree at most
two, every filter of degree D factors into a cascade of ceil(D/2) filters
of degree <= 2 with at most one linear factor; :func:`factor_quadratics`
builds that cascade constructively from the polynomial's complex roots.

Coefficients are stored constant-first: ``(c0, c1, ..., cK)`` means
``c0 + c1 x + ... + cK x^K``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import numpy.polynomial.polynomial as npoly

from .errors import NumericError
from .graphs import Graph, aggregate_once
from .spectral import pooled_spectrum

# Fractional part of the golden ratio; used to spread root-iteration start
# points at an irrational angle increment so no symmetric cycle can form.
_GOLDEN_FRAC = 0.6180339887498949

_MAX_FACTOR_DEGREE = 64


@dataclass(frozen=True)
class PolyFilter:
    """Real polynomial filter in canonical form.

    Trailing zero coefficients are trimmed; the zero polynomial is ``(0.0,)``.
    """

    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = [float(v) for v in self.coeffs]
        if not c:
            c = [0.0]
        if not all(math.isfinite(v) for v in c):
            raise ValueError("coefficients must be finite")
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        """Evaluate the polynomial at scalar or array ``x``."""
        return npoly.polyval(x, np.asarray(self.coeffs))


@dataclass(frozen=True)
class QuadraticCascade:
    """Ordered degree-<=2 factors plus the leading scale of the original filter.

    The product of all factors times ``leading_scale`` re-expands to the
    factored polynomial. At most one factor is linear.
    """

    factors: tuple[PolyFilter, ...]
    leading_scale: float

    def expanded(self) -> PolyFilter:
        out = PolyFilter((self.leading_scale,))
        for f in self.factors:
            out = compose(out, f)
        return out


def apply_filter(f: PolyFilter, graph: Graph, x: np.ndarray) -> np.ndarray:
    """Evaluate y = sum_k c_k A^k x by repeated one-hop aggregation.

    Powers of A are never formed; each term reuses the previous hop.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != graph.num_nodes:
        raise ValueError(
            f"signal has {x.shape[0]} rows, graph has {graph.num_nodes} nodes"
        )
    acc = f.coeffs[0] * x
    h = x
    for ck in f.coeffs[1:]:
        h = aggregate_once(graph, h)
        acc = acc + ck * h
    return acc


def compose(p: PolyFilter, q: PolyFilter) -> PolyFilter:
    """Filter composition = polynomial product (coefficient convolution)."""
    return PolyFilter(tuple(np.convolve(p.coeffs, q.coeffs)))


def apply_cascade(cascade: QuadraticCascade, graph: Graph, x: np.ndarray) -> np.ndarray:
    """Apply the cascade factors in sequence, then the leading scale."""
    y = np.asarray(x, dtype=np.float64)
    for f in cascade.factors:
        y = apply_filter(f, graph, y)
    return cascade.leading_scale * y


def _durand_kerner(monic: np.ndarray, update_tol: float = 1e-12,
                   max_iter: int = 1000) -> np.ndarray:
    """All complex roots of a monic polynomial by simultaneous iteration.

    Start points sit on a circle of radius 1 + max|c_k| at golden-angle
    increments. Converged when the largest root update drops below
    ``update_tol``; raises ``NumericError`` at the iteration cap.
    """
    deg = monic.size - 1
    radius = 1.0 + np.abs(monic[:-1]).max()
    k = np.arange(deg)
    z = radius * np.exp(2j * np.pi * (_GOLDEN_FRAC * k + 0.25))
    for _ in range(max_iter):
        pz = npoly.polyval(z, monic)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        dz = pz / diff.prod(axis=1)
        z = z - dz
        if np.abs(dz).max() < update_tol:
            return z
    residual = float(np.abs(npoly.polyval(z, monic)).max())
    raise NumericError(
        f"root iteration did not converge in {max_iter} steps "
        f"(max residual {residual:.3e})"
    )


def factor_quadratics(p: PolyFilter, tol: float = 1e-6) -> QuadraticCascade:
    """Factor ``p`` into real factors of degree <= 2, at most one linear.

    Complex roots are paired with their conjugates into monic quadratics
    x^2 - 2 Re(z) x + |z|^2; real roots are sorted ascending and merged
    pairwise into quadratics, leaving at most one linear factor (emitted
    last). The re-expanded product must match ``p`` within relative
    coefficient error ``tol``, else a ``NumericError`` is raised.
    """
    if p.degree < 1:
        raise ValueError("cannot factor a constant polynomial")
    if p.degree > _MAX_FACTOR_DEGREE:
        raise ValueError(
            f"degree {p.degree} exceeds the factorization cap {_MAX_FACTOR_DEGREE}"
        )
    coeffs = np.asarray(p.coeffs)
    lead = float(coeffs[-1])
    if p.degree <= 2:
        # already a valid factor; just peel off the leading coefficient
        monic = PolyFilter(tuple(c / lead for c in p.coeffs[:-1]) + (1.0,))
        return QuadraticCascade((monic,), lead)
    roots = _durand_kerner(coeffs / lead)

    real_mask = np.abs(roots.imag) < 1e-8 * (1.0 + np.abs(roots))
    real_roots = np.sort(roots[real_mask].real)
    pos = roots[~real_mask & (roots.imag > 0.0)]
    neg_count = int((~real_mask & (roots.imag < 0.0)).sum())
    if pos.size != neg_count:
        raise NumericError(
            f"conjugate pairing failed: {pos.size} roots above the real axis, "
            f"{neg_count} below"
        )
    pos = pos[np.lexsort((pos.imag, pos.real))]

    factors: list[PolyFilter] = []
    for i in range(0, real_roots.size - 1, 2):
        r1, r2 = float(real_roots[i]), float(real_roots[i + 1])
        factors.append(PolyFilter((r1 * r2 + 0.0, -(r1 + r2) + 0.0, 1.0)))
    for z in pos:
        factors.append(
            PolyFilter((float(abs(z)) ** 2 + 0.0, -2.0 * float(z.real) + 0.0, 1.0))
        )
    if real_roots.size % 2 == 1:
        factors.append(PolyFilter((-float(real_roots[-1]) + 0.0, 1.0)))

    cascade = QuadraticCascade(tuple(factors), lead)
    expanded = np.asarray(cascade.expanded().coeffs)
    if expanded.size != coeffs.size:
        raise NumericError("re-expansion changed the polynomial degree")
    rel = np.abs(expanded - coeffs).max() / np.abs(coeffs).max()
    if rel > tol:
        raise NumericError(
            f"re-expansion residual {rel:.3e} exceeds tolerance {tol:.1e}"
        )
    return cascade


def lss_dimension(graphs, K: int, rank_tol: float = 1e-9,
                  eigen_tol: float = 1e-7) -> int:
    """Dimension of the degree-K filter space over a graph set.

    Computed as the numerical rank of the polynomial-evaluation matrix on
    the pooled distinct eigenvalues: entry (i, k) holds the degree-k basis
    polynomial at eigenvalue i. For conditioning, the eigenvalue range is
    mapped affinely onto [-1, 1] and the Chebyshev basis is evaluated by
    recurrence; both are invertible degree-graded changes of basis, so the
    rank matches the raw monomial Vandermonde exactly. Singular values
    above ``rank_tol`` times the largest count toward the rank.
    """
    if K < 0:
        raise ValueError(f"polynomial order must be >= 0, got {K}")
    nodes = pooled_spectrum(graphs, eigen_tol)
    gamma = nodes.size
    lo, hi = nodes[0], nodes[-1]
    t = (2.0 * nodes - lo - hi) / (hi - lo) if hi > lo else np.zeros(gamma)
    v = np.ones((gamma, K + 1))
    if K >= 1:
        v[:, 1] = t
    for k in range(2, K + 1):
        v[:, k] = 2.0 * t * v[:, k - 1] - v[:, k - 2]
    sv = np.linalg.svd(v, compute_uv=False)
    return int((sv > rank_tol * sv[0]).sum())


def vanilla_stack_polynomial(thetas) -> PolyFilter:
    """Composite polynomial of a stack of tied one-hop layers theta (A + I).

    Expanding prod_l theta_l (x + 1) gives Theta * binomial(L, k) x^k with
    Theta the product of all layer scalars: the stack spans only the fixed
    binomial direction, one dimension no matter how deep.
    """
    thetas = [float(t) for t in thetas]
    if not thetas:
        raise ValueError("need at least one layer scalar")
    L = len(thetas)
    scale = math.prod(thetas)
    return PolyFilter(tuple(scale * math.comb(L, k) for k in range(L + 1)))


def gin_stack_polynomial(pairs) -> PolyFilter:
    """Composite polynomial of stacked untied one-hop layers theta1 A + theta0 I.

    The product prod_l (theta1_l x + theta0_l) splits over the reals by
    construction: every root is real.
    """
    pairs = [(float(t0), float(t1)) for t0, t1 in pairs]
    if not pairs:
        raise ValueError("need at least one layer pair")
    out = np.asarray([1.0])
    for t0, t1 in pairs:
        out = np.convolve(out, [t0, t1])
    return PolyFilter(tuple(out))


def block_diag_T(graphs) -> np.ndarray:
    """Block-diagonal stack of normalized adjacencies (verification utility).

    Applying a polynomial to this matrix acts blockwise as the per-graph
    filter, which is what makes filter composition over a finite graph set
    equivalent to polynomial multiplication. Capped at 512 total nodes.
    """
    graphs = list(graphs)
    if not graphs:
        raise ValueError("graph set must be non-empty")
    total = sum(g.num_nodes for g in graphs)
    if total > 512:
        raise ValueError(f"total node count {total} exceeds the 512 cap")
    out = np.zeros((total, total))
    off = 0
    for g in graphs:
        n = g.num_nodes
        out[off:off + n, off:off + n] = g.norm_adjacency
        off += n
    return out
