"""Population-level structure: similarity matrices over property-by-identity
stimulus grids, paradiagonal quantification, an exact t-SNE embedding of
encodings, top-responsive-neuron maps, and per-neuron favorite images."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import pgm
from .dataset import (DEFAULT_RANGES, DEFAULT_RETINA_WIDTH, DigitCorpus,
                      PropertyRanges, RetinaImage, StimulusProps,
                      render_stimulus, stimuli_to_matrix)
from .network import NetworkParams, encode

N_BLOCKS = 10
DIGITS_PER_BLOCK = 10


@dataclass
class StimulusGrid:
    """Block-major stimuli: property level varies across blocks, digit 0..9
    within each block, so stimulus index = block * 10 + digit."""

    property: str
    stimuli: list[RetinaImage]
    property_levels: np.ndarray         # one level per block
    n_blocks: int = N_BLOCKS
    digits_per_block: int = DIGITS_PER_BLOCK

    def __post_init__(self):
        if len(self.stimuli) != self.n_blocks * self.digits_per_block:
            raise ValueError("grid must hold n_blocks * digits_per_block stimuli")

    def block_of(self, index: int) -> int:
        return index // self.digits_per_block

    def identity_of(self, index: int) -> int:
        return index % self.digits_per_block


def build_stimulus_grid(property_tag: str, corpus: DigitCorpus,
                        fixed: StimulusProps = StimulusProps(), seed: int = 0,
                        retina_width: int = DEFAULT_RETINA_WIDTH,
                        ranges: PropertyRanges = DEFAULT_RANGES,
                        n_blocks: int = N_BLOCKS) -> StimulusGrid:
    """Equally spaced property levels x one sampled instance per digit."""
    lo, hi = ranges.interval(property_tag)
    corpus.require_all_classes()
    rng = np.random.default_rng(seed)
    levels = np.linspace(lo, hi, n_blocks)
    stimuli = []
    for level in levels:
        for digit in range(DIGITS_PER_BLOCK):
            pool = corpus.class_indices(digit)
            idx = int(pool[rng.integers(len(pool))])
            props = replace(fixed.with_value(property_tag, level), identity=digit)
            stimuli.append(render_stimulus(corpus.images[idx], props,
                                           retina_width, ranges))
    return StimulusGrid(property=property_tag, stimuli=stimuli,
                        property_levels=levels, n_blocks=n_blocks)


@dataclass
class SimilarityMatrix:
    values: np.ndarray                  # (N, N) pairwise Pearson correlations
    grid: StimulusGrid | None
    degenerate_rows: list[int]          # zero-variance encodings, defined 0

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("similarity matrix must be square")


def _rowwise_pearson(vectors: np.ndarray) -> tuple[np.ndarray, list[int]]:
    v = np.asarray(vectors, dtype=np.float64)
    centered = v - v.mean(axis=1, keepdims=True)
    norms = np.sqrt((centered * centered).sum(axis=1))
    degenerate = [int(i) for i in np.flatnonzero(norms == 0.0)]
    safe = norms.copy()
    safe[safe == 0.0] = 1.0
    unit = centered / safe[:, None]
    corr = np.clip(unit @ unit.T, -1.0, 1.0)
    for i in degenerate:
        corr[i, :] = 0.0
        corr[:, i] = 0.0
    np.fill_diagonal(corr, 1.0)
    return corr, degenerate


def similarity_matrix(grid: StimulusGrid, params: NetworkParams) -> SimilarityMatrix:
    """Pairwise Pearson correlations between the stimuli's encoding vectors."""
    encodings = encode(params, stimuli_to_matrix(grid.stimuli))
    corr, degenerate = _rowwise_pearson(encodings)
    return SimilarityMatrix(values=corr, grid=grid, degenerate_rows=degenerate)


def paradiagonal_score(matrix) -> tuple[float, float]:
    """(stripe_strength, background) for a block-structured similarity matrix.

    stripe_strength averages same-digit, different-entry correlations (the
    paradiagonal stripes); background averages entries that differ in both
    digit and property block.  Accepts a SimilarityMatrix or a raw square
    array laid out block-major with 10 digits per block.
    """
    values = matrix.values if isinstance(matrix, SimilarityMatrix) else np.asarray(matrix)
    n = values.shape[0]
    if values.ndim != 2 or values.shape != (n, n) or n % DIGITS_PER_BLOCK != 0:
        raise ValueError("expected a square block-major matrix of 10-digit blocks")
    idx = np.arange(n)
    digit = idx % DIGITS_PER_BLOCK
    block = idx // DIGITS_PER_BLOCK
    same_digit = digit[:, None] == digit[None, :]
    same_block = block[:, None] == block[None, :]
    off_diag = ~np.eye(n, dtype=bool)
    stripe_mask = same_digit & off_diag
    background_mask = (~same_digit) & (~same_block)
    stripe = float(values[stripe_mask].mean()) if stripe_mask.any() else 0.0
    background = float(values[background_mask].mean()) if background_mask.any() else 0.0
    return stripe, background


# ---------------------------------------------------------------------------
# Exact t-SNE
# ---------------------------------------------------------------------------

_MACHINE_EPS = np.finfo(np.float64).eps


def _conditional_affinities(sq_dists: np.ndarray, perplexity: float,
                            tol: float = 1e-5, max_tries: int = 64) -> np.ndarray:
    """Per-point Gaussian affinities, bandwidth binary-searched to the
    target perplexity (measured as Shannon entropy in nats)."""
    n = sq_dists.shape[0]
    target = np.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        d = np.delete(sq_dists[i], i)
        beta, beta_min, beta_max = 1.0, -np.inf, np.inf
        for _ in range(max_tries):
            w = np.exp(-d * beta)
            s = w.sum()
            if s <= 0:
                s = _MACHINE_EPS
            p = w / s
            entropy = np.log(s) + beta * (d @ p)
            diff = entropy - target
            if abs(diff) < tol:
                break
            if diff > 0:                # entropy too high -> narrow the kernel
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == -np.inf else (beta + beta_min) / 2.0
        row = np.zeros(n)
        row[np.arange(n) != i] = p
        P[i] = row
    return P


def _kl_divergence(P: np.ndarray, Q: np.ndarray) -> float:
    mask = P > 0
    return float((P[mask] * np.log(P[mask] / Q[mask])).sum())


@dataclass
class Embedding2D:
    coords: np.ndarray                  # (N, 2)
    identities: list
    props: np.ndarray                   # (N, 4) columns x, y, s, r
    kl_divergence: float
    kl_trace: list[tuple[int, float]]   # sampled (iteration, KL vs true P)


def tsne_embed(encodings: np.ndarray, perplexity: float = 30.0,
               n_iter: int = 1000, seed: int = 0, learning_rate: float = 200.0,
               early_exaggeration: float = 12.0, exaggeration_iters: int = 250,
               stimuli: Sequence[RetinaImage] | None = None,
               trace_every: int = 50) -> Embedding2D:
    """Exact O(N^2) t-SNE of encoding vectors into 2-D.

    Binary-searched per-point bandwidths, symmetrized affinities, early
    exaggeration for the first exaggeration_iters iterations, then plain
    momentum gradient descent (0.5 early, 0.8 after).  Deterministic under
    the seed.  The KL trace is always measured against the un-exaggerated
    affinities.
    """
    X = np.asarray(encodings, dtype=np.float64)
    n = len(X)
    if n > 5000:
        raise ValueError("exact t-SNE is quadratic; limit is 5000 points")
    if n < 3 * perplexity:
        raise ValueError(f"perplexity {perplexity} infeasible for {n} points")

    sq = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    P = _conditional_affinities(sq, perplexity)
    P = (P + P.T) / (2.0 * n)
    P = np.maximum(P, _MACHINE_EPS)

    rng = np.random.default_rng(seed)
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    velocity = np.zeros_like(Y)
    kl_trace: list[tuple[int, float]] = []

    for it in range(1, n_iter + 1):
        exaggerate = it <= exaggeration_iters
        momentum = 0.5 if exaggerate else 0.8
        P_eff = P * early_exaggeration if exaggerate else P

        diff = Y[:, None, :] - Y[None, :, :]
        num = 1.0 / (1.0 + (diff ** 2).sum(axis=2))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), _MACHINE_EPS)

        grad = 4.0 * np.einsum("ij,ijk->ik", (P_eff - Q) * num, diff)
        velocity = momentum * velocity - learning_rate * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)

        if it % trace_every == 0 or it == n_iter:
            kl_trace.append((it, _kl_divergence(P, Q)))

    if stimuli is not None:
        identities = [s.props.identity for s in stimuli]
        props = np.array([[s.props.x, s.props.y, s.props.s, s.props.r]
                          for s in stimuli])
    else:
        identities = [None] * n
        props = np.zeros((n, 4))
    return Embedding2D(coords=Y, identities=identities, props=props,
                       kl_divergence=kl_trace[-1][1] if kl_trace else float("nan"),
                       kl_trace=kl_trace)


def silhouette_score(points: np.ndarray, labels: Sequence) -> float:
    """Mean silhouette over all points; used to quantify how strongly a
    labelling (digit identity, binned position) organizes an embedding."""
    X = np.asarray(points, dtype=np.float64)
    labs = np.asarray(labels)
    uniq = np.unique(labs)
    if len(uniq) < 2:
        raise ValueError("silhouette needs at least two clusters")
    d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    scores = np.zeros(len(X))
    for i in range(len(X)):
        own = labs == labs[i]
        n_own = own.sum()
        a = d[i, own].sum() / (n_own - 1) if n_own > 1 else 0.0
        b = min(d[i, labs == other].mean() for other in uniq if other != labs[i])
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


# ---------------------------------------------------------------------------
# Per-neuron views
# ---------------------------------------------------------------------------

def top_responsive(encodings: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k most active units per stimulus, ties to lower index."""
    E = np.asarray(encodings, dtype=np.float64)
    if not 1 <= k <= E.shape[1]:
        raise ValueError(f"k must lie in 1..{E.shape[1]}")
    # stable sort on negated activity keeps lower indices first among ties
    order = np.argsort(-E, axis=1, kind="stable")
    return order[:, :k]


@dataclass
class FavoriteImages:
    neuron_id: int
    ranked_indices: np.ndarray          # stimulus indices, best first
    top_stimuli: list[RetinaImage]
    mean_image: np.ndarray              # pixelwise mean of the top avg_top


def favorite_images(stimuli: Sequence[RetinaImage], encodings: np.ndarray,
                    neuron_id: int, k: int = 5, avg_top: int = 20
                    ) -> FavoriteImages:
    """Stimuli ranked by one unit's activity, plus the mean of its top avg_top."""
    E = np.asarray(encodings, dtype=np.float64)
    if not 0 <= neuron_id < E.shape[1]:
        raise ValueError(f"neuron_id must lie in 0..{E.shape[1] - 1}")
    if len(stimuli) < avg_top:
        raise ValueError(f"need at least {avg_top} stimuli")
    order = np.argsort(-E[:, neuron_id], kind="stable")
    mean_image = np.mean([stimuli[i].pixels for i in order[:avg_top]], axis=0)
    return FavoriteImages(neuron_id=neuron_id, ranked_indices=order,
                          top_stimuli=[stimuli[i] for i in order[:k]],
                          mean_image=mean_image)


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def write_similarity_csv(matrix: SimilarityMatrix, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        for row in matrix.values:
            writer.writerow([repr(v) for v in row])


def write_similarity_pgm(matrix: SimilarityMatrix, path) -> None:
    pgm.write_pgm(path, pgm.heatmap(matrix.values, vmin=-1.0, vmax=1.0))


def write_embedding_csv(embedding: Embedding2D, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "cx", "cy", "identity", "x", "y", "s", "r"])
        for i, (cx, cy) in enumerate(embedding.coords):
            x, y, s, r = embedding.props[i]
            writer.writerow([i, repr(float(cx)), repr(float(cy)),
                             embedding.identities[i],
                             repr(float(x)), repr(float(y)),
                             repr(float(s)), repr(float(r))])


def write_favorites_pgm(favorites: FavoriteImages, path) -> None:
    tiles = [s.pixels for s in favorites.top_stimuli] + [favorites.mean_image]
    pgm.write_pgm(path, pgm.tile_grid(tiles, n_cols=len(tiles)))
