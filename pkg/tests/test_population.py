import numpy as np
import pytest

import retinacode as rc
from retinacode.errors import CorpusError
from retinacode.population import _rowwise_pearson

from conftest import SMALL_W


# ---------------------------------------------------------------------------
# Stimulus grids
# ---------------------------------------------------------------------------

def test_grid_levels_and_ordering(small_corpus):
    grid = rc.build_stimulus_grid("x", small_corpus, seed=0,
                                  retina_width=SMALL_W)
    assert np.allclose(grid.property_levels, np.linspace(-0.2, 0.2, 10))
    assert len(grid.stimuli) == 100
    # stimulus index 23 -> property level 2, identity 3
    assert grid.block_of(23) == 2
    assert grid.identity_of(23) == 3
    stim = grid.stimuli[23]
    assert stim.props.identity == 3
    assert stim.props.x == pytest.approx(grid.property_levels[2])


def test_grid_deterministic(small_corpus):
    a = rc.build_stimulus_grid("s", small_corpus, seed=5, retina_width=SMALL_W)
    b = rc.build_stimulus_grid("s", small_corpus, seed=5, retina_width=SMALL_W)
    for sa, sb in zip(a.stimuli, b.stimuli):
        assert np.array_equal(sa.pixels, sb.pixels)


def test_grid_missing_class(small_corpus):
    partial = rc.DigitCorpus(images=small_corpus.images[:5],
                             labels=small_corpus.labels[:5])
    with pytest.raises(CorpusError):
        rc.build_stimulus_grid("x", partial, retina_width=SMALL_W)


# ---------------------------------------------------------------------------
# Similarity matrices
# ---------------------------------------------------------------------------

def test_similarity_diagonal_and_symmetry(trained_small, small_corpus):
    params, _ = trained_small
    grid = rc.build_stimulus_grid("x", small_corpus, seed=1,
                                  retina_width=SMALL_W)
    sim = rc.similarity_matrix(grid, params)
    assert sim.values.shape == (100, 100)
    assert np.allclose(np.diag(sim.values), 1.0)
    assert np.abs(sim.values - sim.values.T).max() < 1e-12
    assert sim.values.min() >= -1.0 and sim.values.max() <= 1.0


def test_similarity_duplicated_stimulus():
    rng = np.random.default_rng(0)
    E = rng.random((10, 32))
    E[7] = E[2]
    corr, degenerate = _rowwise_pearson(E)
    assert corr[2, 7] == pytest.approx(1.0, abs=1e-12)
    assert degenerate == []


def test_similarity_zero_variance_row():
    rng = np.random.default_rng(1)
    E = rng.random((6, 32))
    E[3] = 0.25
    corr, degenerate = _rowwise_pearson(E)
    assert degenerate == [3]
    off = np.delete(corr[3], 3)
    assert np.all(off == 0.0)
    assert corr[3, 3] == 1.0


def test_similarity_matches_pairwise_loop_oracle():
    rng = np.random.default_rng(2)
    E = rng.random((20, 32))
    corr, _ = _rowwise_pearson(E)
    for i in range(20):
        for j in range(20):
            r, _, _ = rc.pearson_with_p(E[i], E[j])
            assert abs(corr[i, j] - r) < 1e-12


# ---------------------------------------------------------------------------
# Paradiagonal score
# ---------------------------------------------------------------------------

def test_paradiagonal_identity_matrix():
    stripe, background = rc.paradiagonal_score(np.eye(100))
    assert stripe == 0.0
    assert background == 0.0


def test_paradiagonal_constructed_blocks():
    n = 100
    idx = np.arange(n)
    same_digit = (idx[:, None] % 10) == (idx[None, :] % 10)
    m = np.where(same_digit, 0.9, 0.1)
    np.fill_diagonal(m, 1.0)
    stripe, background = rc.paradiagonal_score(m)
    assert stripe == pytest.approx(0.9)
    assert background == pytest.approx(0.1)


def test_paradiagonal_constant_matrix():
    stripe, background = rc.paradiagonal_score(np.ones((100, 100)))
    assert stripe == background == 1.0


def test_paradiagonal_shape_check():
    with pytest.raises(ValueError):
        rc.paradiagonal_score(np.ones((12, 12)))


# ---------------------------------------------------------------------------
# t-SNE
# ---------------------------------------------------------------------------

def test_tsne_three_equidistant_points():
    X = np.eye(3, 32) * 2.0                 # pairwise equidistant
    emb = rc.tsne_embed(X, perplexity=1.0, n_iter=300, seed=0)
    d01 = np.linalg.norm(emb.coords[0] - emb.coords[1])
    d02 = np.linalg.norm(emb.coords[0] - emb.coords[2])
    d12 = np.linalg.norm(emb.coords[1] - emb.coords[2])
    dmax, dmin = max(d01, d02, d12), min(d01, d02, d12)
    assert (dmax - dmin) / dmax < 0.05


def test_tsne_separates_two_clusters():
    rng = np.random.default_rng(3)
    a = rng.normal(0.0, 0.05, size=(50, 32))
    b = rng.normal(0.0, 0.05, size=(50, 32)) + 1.0
    X = np.vstack([a, b])
    labels = np.array([0] * 50 + [1] * 50)
    emb = rc.tsne_embed(X, perplexity=10.0, n_iter=600, seed=1)
    assert rc.silhouette_score(emb.coords, labels) > 0.5


def test_tsne_kl_trend_and_determinism():
    rng = np.random.default_rng(4)
    X = rng.random((120, 32))
    emb1 = rc.tsne_embed(X, perplexity=15.0, n_iter=1000, seed=7)
    emb2 = rc.tsne_embed(X, perplexity=15.0, n_iter=1000, seed=7)
    assert np.array_equal(emb1.coords, emb2.coords)
    trace = dict(emb1.kl_trace)
    assert trace[1000] <= trace[300] * 1.01
    assert emb1.kl_divergence >= 0.0


def test_tsne_preconditions():
    X = np.random.default_rng(5).random((20, 32))
    with pytest.raises(ValueError):
        rc.tsne_embed(X, perplexity=10.0)       # 20 < 3 * 10
    with pytest.raises(ValueError):
        rc.tsne_embed(np.zeros((5001, 2)), perplexity=5.0)


# ---------------------------------------------------------------------------
# Top responsive neurons and favorite images
# ---------------------------------------------------------------------------

def test_top_responsive_unique_max():
    E = np.full((1, 32), 0.1)
    E[0, 5] = 0.9
    assert rc.top_responsive(E, 3)[0, 0] == 5


def test_top_responsive_tie_rule():
    E = np.full((2, 32), 0.4)
    assert rc.top_responsive(E, 4).tolist() == [[0, 1, 2, 3]] * 2


def test_top_responsive_matches_sort_oracle():
    rng = np.random.default_rng(6)
    E = rng.random((40, 32))
    got = rc.top_responsive(E, 32)
    for i in range(40):
        oracle = sorted(range(32), key=lambda j: (-E[i, j], j))
        assert got[i].tolist() == oracle


def test_favorite_images_ranking(small_corpus):
    stimuli = rc.render_centered(small_corpus, range(25), retina_width=SMALL_W)
    rng = np.random.default_rng(7)
    E = rng.random((25, 32))
    scores = E[:, 9]
    fav = rc.favorite_images(stimuli, E, neuron_id=9, k=5)
    oracle = np.argsort(-scores, kind="stable")
    assert fav.ranked_indices.tolist() == oracle.tolist()
    assert np.array_equal(fav.top_stimuli[0].pixels,
                          stimuli[oracle[0]].pixels)


def test_favorite_images_k1_and_constant_mean(small_corpus):
    one = rc.render_centered(small_corpus, [4], retina_width=SMALL_W)[0]
    stimuli = [one] * 20
    E = np.linspace(0, 1, 20)[:, None] * np.ones((20, 32))
    fav = rc.favorite_images(stimuli, E, neuron_id=0, k=1)
    assert len(fav.top_stimuli) == 1
    assert np.allclose(fav.mean_image, one.pixels)
    with pytest.raises(ValueError):
        rc.favorite_images(stimuli[:10], E[:10], neuron_id=0)


def test_silhouette_requires_two_clusters():
    with pytest.raises(ValueError):
        rc.silhouette_score(np.zeros((5, 2)), [1, 1, 1, 1, 1])
