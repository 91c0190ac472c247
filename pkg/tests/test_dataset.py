import os
import struct

import numpy as np
import pytest

import retinacode as rc
from retinacode.errors import ConsistencyError, CorpusError, FormatError, RenderError

from conftest import SMALL_GLYPH, SMALL_W


def write_idx_pair(tmp_path, images, labels):
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, rows, cols = images.shape
    ipath = tmp_path / "images.idx"
    lpath = tmp_path / "labels.idx"
    ipath.write_bytes(struct.pack(">IIII", 0x803, n, rows, cols) + images.tobytes())
    lpath.write_bytes(struct.pack(">II", 0x801, n) + labels.tobytes())
    return ipath, lpath


# ---------------------------------------------------------------------------
# IDX loading
# ---------------------------------------------------------------------------

def test_load_idx_two_images(tmp_path):
    images = np.arange(2 * 4 * 4, dtype=np.uint8).reshape(2, 4, 4)
    ipath, lpath = write_idx_pair(tmp_path, images, [3, 7])
    corpus = rc.load_idx(ipath, lpath)
    assert len(corpus) == 2
    assert corpus.labels.tolist() == [3, 7]
    assert np.allclose(corpus.images, images / 255.0)


def test_load_idx_wrong_magic(tmp_path):
    ipath = tmp_path / "bad.idx"
    ipath.write_bytes(struct.pack(">IIII", 0x801, 1, 2, 2) + bytes(4))
    lpath = tmp_path / "labels.idx"
    lpath.write_bytes(struct.pack(">II", 0x801, 1) + bytes(1))
    with pytest.raises(FormatError) as err:
        rc.load_idx(ipath, lpath)
    assert "bad.idx" in str(err.value)


def test_load_idx_count_mismatch(tmp_path):
    images = np.zeros((2, 3, 3), dtype=np.uint8)
    ipath, _ = write_idx_pair(tmp_path, images, [0, 1])
    lpath = tmp_path / "short.idx"
    lpath.write_bytes(struct.pack(">II", 0x801, 1) + bytes(1))
    with pytest.raises(ConsistencyError):
        rc.load_idx(ipath, lpath)


def test_load_idx_truncated_payload(tmp_path):
    ipath = tmp_path / "trunc.idx"
    ipath.write_bytes(struct.pack(">IIII", 0x803, 4, 8, 8) + bytes(10))
    lpath = tmp_path / "labels.idx"
    lpath.write_bytes(struct.pack(">II", 0x801, 4) + bytes(4))
    with pytest.raises(FormatError):
        rc.load_idx(ipath, lpath)


def test_load_idx_full_file_byte_oracle(tmp_path):
    """Pixel values equal raw byte / 255, checked against a byte-level reader.

    Uses the standard 60000-image training pair when one is provided via
    RETINACODE_IDX_IMAGES/LABELS, otherwise a generated file of that size.
    """
    env_images = os.environ.get("RETINACODE_IDX_IMAGES")
    env_labels = os.environ.get("RETINACODE_IDX_LABELS")
    if env_images and env_labels:
        ipath, lpath = env_images, env_labels
    else:
        rng = np.random.default_rng(0)
        images = rng.integers(0, 256, size=(60000, 28, 28), dtype=np.uint8)
        labels = rng.integers(0, 10, size=60000, dtype=np.uint8)
        ipath, lpath = write_idx_pair(tmp_path, images, labels)

    corpus = rc.load_idx(ipath, lpath)
    assert len(corpus) == 60000

    with open(ipath, "rb") as f:
        raw = f.read()
    _, n, rows, cols = struct.unpack_from(">IIII", raw, 0)
    rng = np.random.default_rng(42)
    for _ in range(100):
        k = int(rng.integers(n))
        i = int(rng.integers(rows))
        j = int(rng.integers(cols))
        byte = raw[16 + k * rows * cols + i * cols + j]
        assert corpus.images[k, i, j] == byte / 255.0


def test_save_idx_round_trip(tmp_path, small_corpus):
    ipath = tmp_path / "imgs.idx"
    lpath = tmp_path / "labs.idx"
    rc.save_idx(small_corpus, ipath, lpath)
    loaded = rc.load_idx(ipath, lpath)
    assert np.array_equal(loaded.labels, small_corpus.labels)
    # quantization to bytes loses at most half a level
    assert np.abs(loaded.images - small_corpus.images).max() <= 0.5 / 255.0


def test_corpus_invariants():
    with pytest.raises(ConsistencyError):
        rc.DigitCorpus(images=np.zeros((2, 3, 3)), labels=np.array([1]))
    with pytest.raises(ValueError):
        rc.DigitCorpus(images=np.full((1, 2, 2), 2.0), labels=np.array([0]))
    with pytest.raises(ValueError):
        rc.DigitCorpus(images=np.zeros((1, 2, 2)), labels=np.array([11]))


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def centered_blob(size=27):
    """A symmetric blob whose intensity centroid is the glyph center."""
    c = (size - 1) / 2.0
    ii, jj = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    return np.exp(-((ii - c) ** 2 + (jj - c) ** 2) / 18.0)


def intensity_centroid(img):
    total = img.sum()
    ii, jj = np.meshgrid(np.arange(img.shape[0]), np.arange(img.shape[1]),
                         indexing="ij")
    return (img * jj).sum() / total, (img * ii).sum() / total


def test_render_identity_centered():
    blob = centered_blob()
    out = rc.render_stimulus(blob, rc.StimulusProps(), retina_width=64)
    cx, cy = intensity_centroid(out.pixels)
    assert abs(cx - 31.5) <= 0.5
    assert abs(cy - 31.5) <= 0.5


def test_render_translation_single_pixel_brute_force():
    digit = np.zeros((27, 27))
    digit[13, 13] = 1.0
    out = rc.render_stimulus(digit, rc.StimulusProps(x=0.2), retina_width=64)
    # brute-force scan of where the mass landed
    expected_col = 31.5 + 0.2 * 64
    mass_cols = np.flatnonzero(out.pixels.sum(axis=0) > 0)
    assert mass_cols.min() >= np.floor(expected_col) - 1
    assert mass_cols.max() <= np.ceil(expected_col) + 1
    cx, cy = intensity_centroid(out.pixels)
    assert abs(cx - expected_col) < 1e-9
    assert abs(cy - 31.5) < 1e-9


def test_render_rotation_180_symmetric_blob():
    blob = centered_blob()
    blob = 0.5 * (blob + blob[::-1, ::-1])          # exact point symmetry
    wide = rc.PropertyRanges(r=(-180.0, 180.0))
    a = rc.render_stimulus(blob, rc.StimulusProps(r=0.0), 64, wide)
    b = rc.render_stimulus(blob, rc.StimulusProps(r=180.0), 64, wide)
    assert np.abs(a.pixels - b.pixels).max() < 1e-6


def test_render_scale_too_large():
    glyph = np.ones((28, 28))
    wide = rc.PropertyRanges(s=(0.5, 3.0))
    with pytest.raises(RenderError):
        rc.render_stimulus(glyph, rc.StimulusProps(s=2.5), 64, wide)


def test_render_props_out_of_range():
    glyph = np.ones((10, 10))
    with pytest.raises(ValueError):
        rc.render_stimulus(glyph, rc.StimulusProps(x=0.5), 64)


def test_translation_consistency_and_mass(glyph_corpus):
    digit = glyph_corpus.images[4]
    base = rc.render_stimulus(digit, rc.StimulusProps(x=-0.1), retina_width=64)
    for delta in (0.05, 0.1, 0.2):
        moved = rc.render_stimulus(digit, rc.StimulusProps(x=-0.1 + delta), 64)
        cx0, cy0 = intensity_centroid(base.pixels)
        cx1, cy1 = intensity_centroid(moved.pixels)
        assert abs((cx1 - cx0) - delta * 64) < 1.0
        assert abs(cy1 - cy0) < 1.0
        assert abs(moved.pixels.sum() - base.pixels.sum()) < 0.01 * base.pixels.sum()


def test_scaling_consistency(glyph_corpus):
    digit = glyph_corpus.images[8]
    wide = rc.PropertyRanges(s=(0.4, 1.4))

    def bbox_width(img, thresh=0.2):
        cols = np.flatnonzero(img.max(axis=0) > thresh)
        return cols.max() - cols.min() + 1

    small = rc.render_stimulus(digit, rc.StimulusProps(s=0.55), 64, wide)
    big = rc.render_stimulus(digit, rc.StimulusProps(s=1.1), 64, wide)
    assert abs(bbox_width(big.pixels) - 2 * bbox_width(small.pixels)) <= 2 + 1


# ---------------------------------------------------------------------------
# Trial sets
# ---------------------------------------------------------------------------

def test_sample_trial_set_x_sweep(glyph_corpus):
    trials = rc.sample_trial_set(glyph_corpus, "x", 128, rng_seed=1)
    assert len(trials) == 128
    assert trials.property_values.min() >= -0.2
    assert trials.property_values.max() <= 0.2
    assert all(s.props.y == 0.0 for s in trials.stimuli)


def test_sample_trial_set_arguments(glyph_corpus):
    with pytest.raises(ValueError):
        rc.sample_trial_set(glyph_corpus, "q", 10)
    with pytest.raises(ValueError):
        rc.sample_trial_set(glyph_corpus, "x", 1)


def test_sample_trial_set_deterministic(glyph_corpus):
    a = rc.sample_trial_set(glyph_corpus, "s", 16, rng_seed=9)
    b = rc.sample_trial_set(glyph_corpus, "s", 16, rng_seed=9)
    assert np.array_equal(a.property_values, b.property_values)
    for sa, sb in zip(a.stimuli, b.stimuli):
        assert np.array_equal(sa.pixels, sb.pixels)


def test_probe_set_fixed(small_corpus):
    probe = rc.sample_probe_set(small_corpus, n=20, rng_seed=3,
                                retina_width=SMALL_W)
    again = rc.sample_probe_set(small_corpus, n=20, rng_seed=3,
                                retina_width=SMALL_W)
    assert np.array_equal(probe.as_matrix(), again.as_matrix())
    assert [s.props.identity for s in probe.stimuli] == [k % 10 for k in range(20)]


# ---------------------------------------------------------------------------
# Novel structures
# ---------------------------------------------------------------------------

def test_solid_square_row_sums():
    img = rc.generate_novel("solid_square", rc.StimulusProps(), retina_width=64)
    sums = img.pixels.sum(axis=1)
    occupied = sums[sums > 0]
    assert len(occupied) > 10
    assert np.allclose(occupied, occupied[0])


def test_mirrored_digit_of_symmetric_glyph(glyph_corpus):
    sym = 0.5 * (glyph_corpus.images[0] + np.fliplr(glyph_corpus.images[0]))
    corpus = rc.DigitCorpus(images=sym[None], labels=np.array([0]))
    mirrored = rc.generate_novel("mirrored_digit", rc.StimulusProps(),
                                 corpus, rng_seed=0, retina_width=64)
    plain = rc.render_stimulus(sym, rc.StimulusProps(identity="mirrored_digit"),
                               retina_width=64)
    assert np.abs(mirrored.pixels - plain.pixels).max() < 1e-6


def test_symbol_x_rotational_symmetry():
    img = rc.generate_novel("symbol_x", rc.StimulusProps(), retina_width=64)
    p = img.pixels
    w = p.shape[0]
    worst = 0.0
    for i in range(w):                  # brute-force symmetry scan
        for j in range(w):
            worst = max(worst, abs(p[i, j] - p[w - 1 - i, w - 1 - j]))
    assert worst < 1e-6


def test_double_digit_fits_glyph_box(glyph_corpus):
    img = rc.generate_novel("double_digit", rc.StimulusProps(), glyph_corpus,
                            rng_seed=4, retina_width=64)
    assert img.pixels.max() > 0.5


def test_generate_novel_errors(glyph_corpus):
    with pytest.raises(ValueError):
        rc.generate_novel("pentagon", rc.StimulusProps(), glyph_corpus)
    with pytest.raises(CorpusError):
        rc.generate_novel("mirrored_digit", rc.StimulusProps(), None)


def test_samplers_shapes(small_corpus):
    rng = np.random.default_rng(0)
    aug = rc.augmented_sampler(small_corpus, retina_width=SMALL_W)
    assert aug(rng, 4).shape == (4, SMALL_W * SMALL_W)
    nov = rc.novel_sampler("symbol_x", retina_width=SMALL_W,
                           glyph_size=SMALL_GLYPH)
    assert nov(rng, 3).shape == (3, SMALL_W * SMALL_W)
    mix = rc.mixed_sampler(aug, nov, p_a=0.5)
    batch = mix(rng, 8)
    assert batch.shape == (8, SMALL_W * SMALL_W)
    assert np.isfinite(batch).all()
