"""Synthetic graph-spectrum dataset: spectrum synthesis, target filters, files.

Each sample is built from one seeded stream (PCG64): draw a node count in
{80..120} and a G(n, 0.02) graph, resampling both until the edge count lands
in [80, 350]; synthesize a spectrum as a mixture of two beta densities and
four normalized Gaussian bumps; lift it to the vertex domain through the
graph's eigenbasis; add per-node Gaussian noise; and filter the noisy signal
with one of three hand-crafted spectral responses (high-, low-, band-pass).

Frequency convention: the response curves are parameterized by the spectrum
of I - A (zero = smoothest component, ascending = more oscillatory), i.e.
the response paired with adjacency eigenvalue lambda is f(1 - lambda); see
:func:`target_response`. The synthesized spectrum is likewise indexed from
smooth to oscillatory. High-pass therefore passes oscillatory signal
content, and band-pass needs a mid-spectrum bump, which is what makes it
hard for filters whose polynomials only have real roots. Because the target
is produced by an exact diagonal action in the eigenbasis, every sample
satisfies gft(y) = target_response * gft(x) to rounding error.

On-disk format: one JSON record per line with fields ``seed``, ``kind``,
``num_nodes``, ``edges`` (sorted [u, v] pairs, u < v), ``x`` and ``y``
(floats with 17 significant digits). Regeneration from the same seed is
byte-identical on a fixed numpy version.
"""
from __future__ import annotations

import enum
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import GenerationError
from .graphs import Graph, _er_edges
from .serialize import dumps, fmt_float, write_text
from .spectral import SpectralBasis, eigendecompose

EDGE_PROBABILITY = 0.02
NODE_RANGE = (80, 120)
EDGE_RANGE = (80, 350)
_RESAMPLE_CAP = 100
DATASET_FORMAT_VERSION = 1

SPLITS = ("train", "val", "test")


class FilterKind(enum.Enum):
    """Hand-crafted target responses over the adjacency spectrum.

    All three are built from the logistic curve 1 / (1 + exp(-a (s - b))):
    high_pass uses (a, b) = (50, 1), low_pass is its complement, and
    band_pass is the difference of two logistic edges at b = 0.95 and 1.05
    with slope 100.
    """

    HIGH_PASS = "high_pass"
    LOW_PASS = "low_pass"
    BAND_PASS = "band_pass"


def _sigmoid(z: np.ndarray) -> np.ndarray:
    """Overflow-safe logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def filter_response(kind: FilterKind, lambdas) -> np.ndarray:
    """Elementwise target response at the given eigenvalues."""
    lam = np.asarray(lambdas, dtype=np.float64)
    if kind is FilterKind.HIGH_PASS:
        return _sigmoid(50.0 * (lam - 1.0))
    if kind is FilterKind.LOW_PASS:
        return 1.0 - _sigmoid(50.0 * (lam - 1.0))
    if kind is FilterKind.BAND_PASS:
        return _sigmoid(100.0 * (lam - 0.95)) - _sigmoid(100.0 * (lam - 1.05))
    raise ValueError(f"unknown filter kind {kind!r}")


def target_response(kind: FilterKind, basis: SpectralBasis) -> np.ndarray:
    """Response paired with each basis eigenvector: f(1 - lambda).

    The curves of :func:`filter_response` take the spectrum of I - A as
    argument (0 = smooth end), so the value attached to adjacency
    eigenvalue lambda is the curve at 1 - lambda.
    """
    return filter_response(kind, 1.0 - basis.eigenvalues)


def build_spectral_filter(kind, basis: SpectralBasis) -> np.ndarray:
    """Dense filtering matrix U diag(r) U^T with r the per-eigenvector response.

    ``kind`` is a :class:`FilterKind` (responses via :func:`target_response`),
    or any callable mapping the adjacency eigenvalue array to a response
    array (useful for testing with custom responses).
    """
    if callable(kind) and not isinstance(kind, FilterKind):
        resp = np.asarray(kind(basis.eigenvalues), dtype=np.float64)
    else:
        resp = target_response(kind, basis)
    if resp.shape != basis.eigenvalues.shape:
        raise ValueError("response shape does not match the eigenvalue count")
    u = basis.eigenvectors
    return (u * resp) @ u.T


def _beta_pdf(x: np.ndarray, a: float, b: float, endpoint_eps: float) -> np.ndarray:
    # Evaluation points live in (0, 1]; if b < 1 the density has a pole at 1,
    # so the endpoint is pulled half a grid step inside the interval. This
    # keeps spectra bounded (~O(10)) so filtering identities hold to near
    # machine precision at any sample scale.
    x = np.asarray(x, dtype=np.float64)
    if b < 1.0:
        x = np.minimum(x, 1.0 - endpoint_eps)
    log_beta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    return x ** (a - 1.0) * (1.0 - x) ** (b - 1.0) / math.exp(log_beta)


def _gauss_pdf(t: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    z = (np.asarray(t, dtype=np.float64) - mu) / sigma
    return np.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi))


def synth_spectrum(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random length-n spectrum: two beta densities plus four Gaussian bumps.

    For t = 1..n, s_t sums beta densities evaluated at t/n with shapes drawn
    from U[0.1, 5], and Gaussians at t with mean U[0, n] and width
    U[n/(j+1), n/j] / 9 for bump j = 1..4. Each Gaussian is scaled so its
    peak over the grid lies in [0.5, 2]. Draw order is fixed: (a, b) for
    each beta, then (mu, sigma, peak) for each bump.
    """
    if n < 1:
        raise ValueError(f"spectrum length must be >= 1, got {n}")
    t = np.arange(1, n + 1, dtype=np.float64)
    s = np.zeros(n)
    for _ in range(2):
        a = rng.uniform(0.1, 5.0)
        b = rng.uniform(0.1, 5.0)
        s += _beta_pdf(t / n, a, b, endpoint_eps=0.5 / n)
    for j in range(1, 5):
        mu = rng.uniform(0.0, float(n))
        sigma = rng.uniform(n / (j + 1), n / j) / 9.0
        peak = rng.uniform(0.5, 2.0)
        g = _gauss_pdf(t, mu, sigma)
        s += (peak / g.max()) * g
    return s


@dataclass(frozen=True)
class SgsSample:
    """One record: graph, noisy input signal, exact filtered target."""

    graph: Graph
    x: np.ndarray
    y: np.ndarray
    kind: FilterKind
    seed: int


def generate_sample(kind: FilterKind, seed: int) -> SgsSample:
    """Generate one sample from its 64-bit seed (deterministic)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    lo_n, hi_n = NODE_RANGE
    lo_e, hi_e = EDGE_RANGE
    for _ in range(_RESAMPLE_CAP):
        n = int(rng.integers(lo_n, hi_n + 1))
        edges = _er_edges(n, EDGE_PROBABILITY, rng)
        if lo_e <= len(edges) <= hi_e:
            break
    else:
        raise GenerationError(
            f"no graph with {lo_e}..{hi_e} edges in {_RESAMPLE_CAP} attempts "
            f"(seed {seed})"
        )
    graph = Graph(n, tuple(edges))
    basis = eigendecompose(graph.norm_adjacency)
    s = synth_spectrum(n, rng)
    # s is indexed smooth-to-oscillatory; basis columns are ascending in the
    # adjacency eigenvalue (oscillatory-to-smooth), hence the reversal.
    x_hat = basis.eigenvectors @ s[::-1]
    noise_scale = rng.uniform(0.05, 0.35)
    x = x_hat + rng.normal(0.0, noise_scale, size=n)
    y = build_spectral_filter(kind, basis) @ x
    return SgsSample(graph=graph, x=x, y=y, kind=kind, seed=int(seed))


def sample_seed(master_seed: int, split: str, index: int) -> int:
    """Per-sample 64-bit seed derived from (master seed, split, index)."""
    split_idx = SPLITS.index(split)
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(split_idx, int(index)))
    return int(ss.generate_state(1, np.uint64)[0])


def _record_line(sample: SgsSample) -> str:
    edges = json.dumps([list(e) for e in sample.graph.edges], separators=(",", ":"))
    x = ", ".join(fmt_float(v) for v in sample.x)
    y = ", ".join(fmt_float(v) for v in sample.y)
    return (
        f'{{"seed": {sample.seed}, "kind": "{sample.kind.value}", '
        f'"num_nodes": {sample.graph.num_nodes}, "edges": {edges}, '
        f'"x": [{x}], "y": [{y}]}}'
    )


def _parse_record(line: str) -> SgsSample:
    rec = json.loads(line)
    graph = Graph(int(rec["num_nodes"]), tuple((u, v) for u, v in rec["edges"]))
    return SgsSample(
        graph=graph,
        x=np.asarray(rec["x"], dtype=np.float64),
        y=np.asarray(rec["y"], dtype=np.float64),
        kind=FilterKind(rec["kind"]),
        seed=int(rec["seed"]),
    )


def read_records(path) -> list[SgsSample]:
    p = Path(path)
    try:
        text = p.read_text(encoding="ascii")
    except OSError as exc:
        raise OSError(f"failed reading {p}: {exc}") from exc
    return [_parse_record(line) for line in text.splitlines() if line.strip()]


def load_dataset(out_dir) -> dict[str, list[SgsSample]]:
    """Load the three split files written by :func:`generate_dataset`."""
    out = {}
    for split in SPLITS:
        out[split] = read_records(Path(out_dir) / f"{split}.sgs")
    return out


def generate_dataset(kind: FilterKind, n_train: int, n_val: int, n_test: int,
                     seed: int, out_path, threads: int | None = None) -> dict:
    """Write train/val/test split files plus a manifest; returns the manifest.

    Sample generation is parallel across indices (each sample owns an
    independent seed stream), so the output does not depend on the worker
    count. Files are written in index order.
    """
    counts = {"train": int(n_train), "val": int(n_val), "test": int(n_test)}
    for split, count in counts.items():
        if count < 1:
            raise ValueError(f"{split} count must be >= 1, got {count}")
    out_dir = Path(out_path)
    workers = threads if threads and threads > 0 else (os.cpu_count() or 1)
    for split in SPLITS:
        seeds = [sample_seed(seed, split, i) for i in range(counts[split])]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                samples = list(pool.map(lambda s: generate_sample(kind, s), seeds))
        else:
            samples = [generate_sample(kind, s) for s in seeds]
        lines = [_record_line(s) for s in samples]
        write_text(out_dir / f"{split}.sgs", "\n".join(lines) + "\n")
    manifest = {
        "command": "gen-data",
        "args": {
            "kind": kind.value,
            "train": counts["train"],
            "val": counts["val"],
            "test": counts["test"],
            "seed": int(seed),
            "out": str(out_dir),
        },
        "generator": {
            "format_version": DATASET_FORMAT_VERSION,
            "edge_probability": EDGE_PROBABILITY,
            "node_range": list(NODE_RANGE),
            "edge_range": list(EDGE_RANGE),
            "sogclab": __version__,
            "numpy": np.__version__,
        },
    }
    write_text(out_dir / "manifest", dumps(manifest) + "\n")
    return manifest
