"""Retina stimuli: digit corpora, affine glyph rendering, trial sets, novel shapes.

Geometry conventions used throughout:

* images are (rows, cols) float64 arrays with intensities in [0, 1];
  row index i runs downward, column index j runs rightward
* a glyph's "center" is the center of its bounding grid,
  ((H0-1)/2, (W0-1)/2), not its intensity centroid
* the retina is W x W; horizontal offset x and vertical offset y are
  fractions of W, so props (x, y) place the glyph center at
  ((W-1)/2 + y*W, (W-1)/2 + x*W)
* positive rotation r (degrees) turns the glyph clockwise when the image
  is viewed with row 0 at the top
* rendering is inverse-mapped bilinear resampling with zero padding, and
  the result is clipped to [0, 1]
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConsistencyError, CorpusError, FormatError, RenderError

DEFAULT_RETINA_WIDTH = 64
DEFAULT_GLYPH_SIZE = 28

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801

PROPERTY_TAGS = ("x", "y", "s", "r")

NOVEL_KINDS = ("solid_square", "solid_triangle", "mirrored_digit",
               "double_digit", "symbol_x")


@dataclass(frozen=True)
class PropertyRanges:
    """Allowed intervals for the four generative stimulus properties."""

    x: tuple[float, float] = (-0.2, 0.2)
    y: tuple[float, float] = (-0.2, 0.2)
    s: tuple[float, float] = (0.7, 1.3)
    r: tuple[float, float] = (-45.0, 45.0)

    def __post_init__(self):
        for tag in PROPERTY_TAGS:
            lo, hi = getattr(self, tag)
            if not lo <= hi:
                raise ValueError(f"range for {tag!r} is not ordered: {(lo, hi)}")
        if self.s[0] <= 0:
            raise ValueError("scale range must be strictly positive")

    def interval(self, tag: str) -> tuple[float, float]:
        if tag not in PROPERTY_TAGS:
            raise ValueError(f"unknown property tag {tag!r}")
        return getattr(self, tag)


DEFAULT_RANGES = PropertyRanges()


@dataclass(frozen=True)
class StimulusProps:
    """Generative properties of one rendered stimulus.

    x, y are signed offsets as fractions of the retina width, s is a scale
    multiplier, r an in-plane rotation in degrees.  identity carries the
    digit class (0-9) or a novel-shape tag; it is analysis metadata only
    and never enters any training loss.
    """

    x: float = 0.0
    y: float = 0.0
    s: float = 1.0
    r: float = 0.0
    identity: int | str | None = None

    def value(self, tag: str) -> float:
        if tag not in PROPERTY_TAGS:
            raise ValueError(f"unknown property tag {tag!r}")
        return getattr(self, tag)

    def with_value(self, tag: str, value: float) -> "StimulusProps":
        if tag not in PROPERTY_TAGS:
            raise ValueError(f"unknown property tag {tag!r}")
        return replace(self, **{tag: float(value)})

    def validate(self, ranges: PropertyRanges = DEFAULT_RANGES) -> None:
        for tag in PROPERTY_TAGS:
            lo, hi = ranges.interval(tag)
            v = getattr(self, tag)
            if not lo <= v <= hi:
                raise ValueError(
                    f"property {tag}={v} outside allowed range [{lo}, {hi}]")


@dataclass
class RetinaImage:
    """A W x W intensity grid plus the properties that generated it."""

    pixels: np.ndarray
    props: StimulusProps

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 2 or self.pixels.shape[0] != self.pixels.shape[1]:
            raise ValueError(f"retina image must be square, got {self.pixels.shape}")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ValueError("retina intensities must lie in [0, 1]")

    @property
    def width(self) -> int:
        return self.pixels.shape[0]

    def flat(self) -> np.ndarray:
        return self.pixels.reshape(-1)


@dataclass
class DigitCorpus:
    """Glyph images with identity labels.

    Labels are carried for analysis and readout fitting only; the
    autoencoder training loss never sees them.
    """

    images: np.ndarray          # (N, H0, W0) float64 in [0, 1]
    labels: np.ndarray          # (N,) int in 0..9
    source: str = ""

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 3:
            raise ValueError("corpus images must be a (N, H0, W0) stack")
        if len(self.images) != len(self.labels):
            raise ConsistencyError(
                f"{len(self.images)} images but {len(self.labels)} labels")
        if len(self.images) and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise ValueError("corpus intensities must lie in [0, 1]")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() > 9):
            raise ValueError("labels must lie in 0..9")

    def __len__(self) -> int:
        return len(self.images)

    @property
    def glyph_shape(self) -> tuple[int, int]:
        return self.images.shape[1], self.images.shape[2]

    def class_indices(self, digit: int) -> np.ndarray:
        return np.flatnonzero(self.labels == digit)

    def require_all_classes(self) -> None:
        present = set(np.unique(self.labels).tolist())
        missing = sorted(set(range(10)) - present)
        if missing:
            raise CorpusError(f"corpus is missing digit classes {missing}")


@dataclass
class TrialSet:
    """An ordered stimulus list with one (optionally) swept property."""

    stimuli: list[RetinaImage]
    swept_property: str                  # 'x', 'y', 's', 'r' or 'none'
    property_values: np.ndarray

    def __post_init__(self):
        self.property_values = np.asarray(self.property_values, dtype=np.float64)
        if len(self.property_values) != len(self.stimuli):
            raise ValueError("property_values length must match stimuli")
        if self.swept_property not in PROPERTY_TAGS + ("none",):
            raise ValueError(f"unknown swept property {self.swept_property!r}")
        if self.swept_property != "none":
            recorded = np.array([s.props.value(self.swept_property)
                                 for s in self.stimuli])
            if not np.array_equal(recorded, self.property_values):
                raise ValueError("property_values disagree with stimulus props")

    def __len__(self) -> int:
        return len(self.stimuli)

    def as_matrix(self) -> np.ndarray:
        """Stack stimuli into an (N, W*W) design matrix."""
        return np.stack([s.flat() for s in self.stimuli])

    def identities(self) -> list:
        return [s.props.identity for s in self.stimuli]


def stimuli_to_matrix(stimuli: Sequence[RetinaImage]) -> np.ndarray:
    return np.stack([s.flat() for s in stimuli])


# ---------------------------------------------------------------------------
# IDX container I/O
# ---------------------------------------------------------------------------

def load_idx(images_path, labels_path) -> DigitCorpus:
    """Load an IDX image/label file pair into a corpus.

    Headers are big-endian per the IDX convention; byte intensities are
    rescaled to [0, 1] by dividing by 255.
    """
    with open(images_path, "rb") as f:
        raw_images = f.read()
    with open(labels_path, "rb") as f:
        raw_labels = f.read()

    if len(raw_images) < 16:
        raise FormatError(f"{images_path}: too short for an IDX image header")
    magic, n_images, rows, cols = struct.unpack_from(">IIII", raw_images, 0)
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(
            f"{images_path}: bad magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}")
    expected = 16 + n_images * rows * cols
    if len(raw_images) < expected:
        raise FormatError(
            f"{images_path}: payload truncated ({len(raw_images)} bytes, "
            f"need {expected})")

    if len(raw_labels) < 8:
        raise FormatError(f"{labels_path}: too short for an IDX label header")
    magic, n_labels = struct.unpack_from(">II", raw_labels, 0)
    if magic != IDX_LABEL_MAGIC:
        raise FormatError(
            f"{labels_path}: bad magic 0x{magic:08x}, expected 0x{IDX_LABEL_MAGIC:08x}")
    if len(raw_labels) < 8 + n_labels:
        raise FormatError(f"{labels_path}: payload truncated")

    if n_images != n_labels:
        raise ConsistencyError(
            f"image count {n_images} != label count {n_labels}")

    pixels = np.frombuffer(raw_images, dtype=np.uint8, count=n_images * rows * cols,
                           offset=16)
    images = pixels.reshape(n_images, rows, cols).astype(np.float64) / 255.0
    labels = np.frombuffer(raw_labels, dtype=np.uint8, count=n_labels, offset=8)
    return DigitCorpus(images=images, labels=labels.astype(np.int64),
                       source=str(images_path))


def save_idx(corpus: DigitCorpus, images_path, labels_path) -> None:
    """Write a corpus as an IDX image/label file pair (intensities * 255)."""
    n, rows, cols = corpus.images.shape
    data = np.clip(np.rint(corpus.images * 255.0), 0, 255).astype(np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, n, rows, cols))
        f.write(data.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABEL_MAGIC, n))
        f.write(corpus.labels.astype(np.uint8).tobytes())


# ---------------------------------------------------------------------------
# Procedural digit corpus
# ---------------------------------------------------------------------------
#
# Each digit class is a set of strokes (polylines / quadratic arcs) in the
# unit square.  Instances jitter the control points and apply a mild random
# slant/rotation/scale before anti-aliased rasterization, so classes are
# structurally stable while instances vary.

def _quad_bezier(p0, c, p1, n=14):
    t = np.linspace(0.0, 1.0, n)[:, None]
    p0, c, p1 = (np.asarray(p, dtype=np.float64) for p in (p0, c, p1))
    return (1 - t) ** 2 * p0 + 2 * (1 - t) * t * c + t ** 2 * p1


def _ellipse(cx, cy, rx, ry, n=26):
    a = np.linspace(0.0, 2 * np.pi, n)
    return np.column_stack([cx + rx * np.cos(a), cy + ry * np.sin(a)])


def _digit_skeleton(digit: int) -> list[np.ndarray]:
    """Stroke polylines for one digit, coordinates (x, y) in [0, 1]."""
    L = lambda *pts: np.asarray(pts, dtype=np.float64)
    if digit == 0:
        return [_ellipse(0.50, 0.50, 0.26, 0.36)]
    if digit == 1:
        return [L((0.32, 0.28), (0.54, 0.12)),
                L((0.54, 0.12), (0.54, 0.88)),
                L((0.36, 0.88), (0.72, 0.88))]
    if digit == 2:
        return [np.vstack([_quad_bezier((0.27, 0.30), (0.50, 0.04), (0.73, 0.32)),
                           _quad_bezier((0.73, 0.32), (0.70, 0.56), (0.28, 0.88))]),
                L((0.28, 0.88), (0.76, 0.88))]
    if digit == 3:
        return [_quad_bezier((0.30, 0.17), (0.82, 0.10), (0.52, 0.47)),
                np.vstack([_quad_bezier((0.52, 0.47), (0.92, 0.58), (0.56, 0.86)),
                           _quad_bezier((0.56, 0.86), (0.40, 0.93), (0.28, 0.80))])]
    if digit == 4:
        return [L((0.58, 0.12), (0.24, 0.58)),
                L((0.24, 0.58), (0.80, 0.58)),
                L((0.64, 0.30), (0.64, 0.88))]
    if digit == 5:
        return [L((0.72, 0.14), (0.32, 0.14)),
                L((0.32, 0.14), (0.30, 0.46)),
                np.vstack([_quad_bezier((0.30, 0.46), (0.80, 0.40), (0.72, 0.68)),
                           _quad_bezier((0.72, 0.68), (0.64, 0.94), (0.26, 0.82))])]
    if digit == 6:
        return [_quad_bezier((0.66, 0.10), (0.26, 0.12), (0.31, 0.55)),
                _ellipse(0.50, 0.67, 0.21, 0.20)]
    if digit == 7:
        return [L((0.26, 0.14), (0.76, 0.14)),
                L((0.76, 0.14), (0.42, 0.88)),
                L((0.38, 0.50), (0.64, 0.50))]
    if digit == 8:
        return [_ellipse(0.50, 0.30, 0.20, 0.17),
                _ellipse(0.50, 0.68, 0.23, 0.20)]
    if digit == 9:
        return [_ellipse(0.52, 0.33, 0.21, 0.19),
                _quad_bezier((0.72, 0.37), (0.74, 0.70), (0.42, 0.88))]
    raise ValueError(f"digit must be 0..9, got {digit}")


def _rasterize_strokes(strokes: Sequence[np.ndarray], size_hw: tuple[int, int],
                       half_width: float) -> np.ndarray:
    """Anti-aliased raster of unit-square polyline strokes."""
    h, w = size_hw
    ys = (np.arange(h) + 0.5) / h
    xs = (np.arange(w) + 0.5) / w
    px = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)   # (P, 2) (x, y)

    segs_a, segs_b = [], []
    for poly in strokes:
        if len(poly) < 2:
            continue
        segs_a.append(poly[:-1])
        segs_b.append(poly[1:])
    a = np.concatenate(segs_a)          # (S, 2)
    b = np.concatenate(segs_b)

    ab = b - a
    denom = np.maximum((ab ** 2).sum(axis=1), 1e-12)
    ap = px[:, None, :] - a[None, :, :]                     # (P, S, 2)
    t = np.clip((ap * ab[None, :, :]).sum(axis=2) / denom, 0.0, 1.0)
    nearest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.sqrt(((px[:, None, :] - nearest) ** 2).sum(axis=2)).min(axis=1)

    aa = 1.0 / max(h, w)                # one-pixel soft edge
    inten = np.clip((half_width + 0.5 * aa - d) / aa, 0.0, 1.0)
    return inten.reshape(h, w)


def _jitter_strokes(strokes, rng, point_sigma=0.022, slant_sigma=0.10,
                    rot_sigma_deg=5.0, scale_sigma=0.05):
    theta = np.deg2rad(rng.normal(0.0, rot_sigma_deg))
    slant = rng.normal(0.0, slant_sigma)
    scale = float(np.clip(rng.normal(1.0, scale_sigma), 0.85, 1.15))
    rot = np.array([[np.cos(theta), -np.sin(theta)],
                    [np.sin(theta), np.cos(theta)]])
    out = []
    for poly in strokes:
        p = poly + rng.normal(0.0, point_sigma, size=poly.shape)
        p = (p - 0.5) * scale @ rot.T
        p[:, 0] += slant * (-p[:, 1])   # shear: top leans with the slant
        out.append(p + 0.5)
    return out


def synthetic_digit_corpus(n: int, seed: int,
                           glyph_size: int = DEFAULT_GLYPH_SIZE) -> DigitCorpus:
    """Generate n procedural digit glyphs with per-instance variation.

    Classes cycle 0..9 so every class is populated for n >= 10.  Fully
    deterministic under the seed.
    """
    if n < 1:
        raise ValueError("corpus size must be >= 1")
    rng = np.random.default_rng(seed)
    images = np.empty((n, glyph_size, glyph_size), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    for k in range(n):
        digit = k % 10
        strokes = _jitter_strokes(_digit_skeleton(digit), rng)
        half_width = rng.uniform(0.045, 0.075)
        images[k] = _rasterize_strokes(strokes, (glyph_size, glyph_size), half_width)
        labels[k] = digit
    return DigitCorpus(images=images, labels=labels,
                       source=f"synthetic(n={n}, seed={seed})")


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _bilinear_sample(src: np.ndarray, si: np.ndarray, sj: np.ndarray) -> np.ndarray:
    """Sample src at fractional (row, col) coordinates; outside reads 0.

    A one-pixel zero border supplies the padding, so clamped coordinates
    read zeros and no bounds masks are needed.
    """
    h, w = src.shape
    padded = np.zeros((h + 2, w + 2), dtype=np.float64)
    padded[1:-1, 1:-1] = src
    si = np.clip(si + 1.0, 0.0, (h + 1.0) * (1.0 - 1e-12))
    sj = np.clip(sj + 1.0, 0.0, (w + 1.0) * (1.0 - 1e-12))
    i0 = np.floor(si).astype(np.int64)
    j0 = np.floor(sj).astype(np.int64)
    fi = si - i0
    fj = sj - j0
    v00 = padded[i0, j0]
    v01 = padded[i0, j0 + 1]
    v10 = padded[i0 + 1, j0]
    v11 = padded[i0 + 1, j0 + 1]
    return ((1 - fi) * (1 - fj) * v00 + (1 - fi) * fj * v01
            + fi * (1 - fj) * v10 + fi * fj * v11)


def render_stimulus(digit: np.ndarray, props: StimulusProps,
                    retina_width: int = DEFAULT_RETINA_WIDTH,
                    ranges: PropertyRanges = DEFAULT_RANGES) -> RetinaImage:
    """Place a glyph on the retina under the (x, y, s, r) transform.

    The glyph is scaled by s and rotated by r about its own center, then its
    center lands at retina center + (x*W, y*W).  Inverse-mapped bilinear
    resampling, zero outside the source, output clipped to [0, 1].
    """
    props.validate(ranges)
    digit = np.asarray(digit, dtype=np.float64)
    h0, w0 = digit.shape
    wr = int(retina_width)
    if props.s * h0 > wr or props.s * w0 > wr:
        raise RenderError(
            f"glyph {h0}x{w0} at scale {props.s} exceeds the {wr}x{wr} retina")

    cy_out = (wr - 1) / 2.0 + props.y * wr
    cx_out = (wr - 1) / 2.0 + props.x * wr
    theta = np.deg2rad(props.r)
    cos_t, sin_t = np.cos(theta), np.sin(theta)

    # restrict sampling to the forward-projected glyph box (plus a bilinear
    # margin); everything outside is exactly zero
    half_u = props.s * (abs(cos_t) * (w0 + 1) / 2.0 + abs(sin_t) * (h0 + 1) / 2.0) + 1.0
    half_v = props.s * (abs(sin_t) * (w0 + 1) / 2.0 + abs(cos_t) * (h0 + 1) / 2.0) + 1.0
    j_lo = max(0, int(np.floor(cx_out - half_u)))
    j_hi = min(wr - 1, int(np.ceil(cx_out + half_u)))
    i_lo = max(0, int(np.floor(cy_out - half_v)))
    i_hi = min(wr - 1, int(np.ceil(cy_out + half_v)))

    pixels = np.zeros((wr, wr), dtype=np.float64)
    if j_lo <= j_hi and i_lo <= i_hi:
        ii, jj = np.meshgrid(np.arange(i_lo, i_hi + 1),
                             np.arange(j_lo, j_hi + 1), indexing="ij")
        u = jj - cx_out
        v = ii - cy_out
        us = (cos_t * u + sin_t * v) / props.s
        vs = (-sin_t * u + cos_t * v) / props.s
        sj = us + (w0 - 1) / 2.0
        si = vs + (h0 - 1) / 2.0
        pixels[i_lo:i_hi + 1, j_lo:j_hi + 1] = np.clip(
            _bilinear_sample(digit, si, sj), 0.0, 1.0)
    return RetinaImage(pixels=pixels, props=props)


def _resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = img.shape
    si = (np.arange(out_h) + 0.5) * h / out_h - 0.5
    sj = (np.arange(out_w) + 0.5) * w / out_w - 0.5
    sii, sjj = np.meshgrid(si, sj, indexing="ij")
    return _bilinear_sample(img, sii, sjj)


def translate_image(pixels: np.ndarray, dx: float, dy: float = 0.0) -> np.ndarray:
    """Shift an image by (dx, dy) pixels with bilinear resampling, zero fill."""
    h, w = pixels.shape
    ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    return np.clip(_bilinear_sample(pixels, ii - dy, jj - dx), 0.0, 1.0)


# ---------------------------------------------------------------------------
# Trial sets and samplers
# ---------------------------------------------------------------------------

def sample_trial_set(corpus: DigitCorpus, swept: str, n_trials: int,
                     fixed: StimulusProps = StimulusProps(),
                     rng_seed: int = 0,
                     retina_width: int = DEFAULT_RETINA_WIDTH,
                     ranges: PropertyRanges = DEFAULT_RANGES,
                     pin_instance: int | None = None) -> TrialSet:
    """Draw n_trials stimuli sweeping one property uniformly over its range.

    Non-swept properties stay at `fixed`; the digit instance is drawn
    uniformly from the corpus unless pinned.  Deterministic under rng_seed.
    """
    if swept not in PROPERTY_TAGS:
        raise ValueError(f"unknown property tag {swept!r}")
    if n_trials < 2:
        raise ValueError("need at least 2 trials for a property sweep")
    if len(corpus) == 0:
        raise CorpusError("empty corpus")

    rng = np.random.default_rng(rng_seed)
    lo, hi = ranges.interval(swept)
    values = rng.uniform(lo, hi, size=n_trials)
    stimuli = []
    for v in values:
        idx = pin_instance if pin_instance is not None else int(rng.integers(len(corpus)))
        props = fixed.with_value(swept, v)
        props = replace(props, identity=int(corpus.labels[idx]))
        stimuli.append(render_stimulus(corpus.images[idx], props,
                                       retina_width, ranges))
    return TrialSet(stimuli=stimuli, swept_property=swept, property_values=values)


def sample_probe_set(corpus: DigitCorpus, n: int = 64, rng_seed: int = 0,
                     retina_width: int = DEFAULT_RETINA_WIDTH,
                     ranges: PropertyRanges = DEFAULT_RANGES) -> TrialSet:
    """A fixed probe set cycling digit classes with random property draws.

    Rendered once with a pinned seed and reused across snapshots so
    development metrics stay comparable over training.
    """
    if n < 1:
        raise ValueError("probe size must be >= 1")
    corpus.require_all_classes()
    rng = np.random.default_rng(rng_seed)
    stimuli = []
    for k in range(n):
        digit = k % 10
        pool = corpus.class_indices(digit)
        idx = int(pool[rng.integers(len(pool))])
        props = StimulusProps(
            x=rng.uniform(*ranges.x), y=rng.uniform(*ranges.y),
            s=rng.uniform(*ranges.s), r=rng.uniform(*ranges.r),
            identity=digit)
        stimuli.append(render_stimulus(corpus.images[idx], props,
                                       retina_width, ranges))
    return TrialSet(stimuli=stimuli, swept_property="none",
                    property_values=np.zeros(n))


def render_centered(corpus: DigitCorpus, indices: Iterable[int] | None = None,
                    retina_width: int = DEFAULT_RETINA_WIDTH,
                    ranges: PropertyRanges = DEFAULT_RANGES) -> list[RetinaImage]:
    """Canonical renders: centered, unit scale, no rotation."""
    if indices is None:
        indices = range(len(corpus))
    out = []
    for idx in indices:
        props = StimulusProps(identity=int(corpus.labels[idx]))
        out.append(render_stimulus(corpus.images[idx], props, retina_width, ranges))
    return out


def augmented_sampler(corpus: DigitCorpus,
                      retina_width: int = DEFAULT_RETINA_WIDTH,
                      ranges: PropertyRanges = DEFAULT_RANGES) -> Callable:
    """Training sampler: random instance, all four properties drawn uniformly.

    Returns draw(rng, n) -> (n, W*W) float64, suitable for the train loop.
    """
    if len(corpus) == 0:
        raise CorpusError("empty corpus")
    p = retina_width * retina_width

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        batch = np.empty((n, p), dtype=np.float64)
        for k in range(n):
            idx = int(rng.integers(len(corpus)))
            props = StimulusProps(
                x=rng.uniform(*ranges.x), y=rng.uniform(*ranges.y),
                s=rng.uniform(*ranges.s), r=rng.uniform(*ranges.r),
                identity=int(corpus.labels[idx]))
            batch[k] = render_stimulus(corpus.images[idx], props,
                                       retina_width, ranges).flat()
        return batch

    return draw


def fixed_pool_sampler(images: np.ndarray) -> Callable:
    """Sampler over a fixed pre-rendered pool (rows of a (N, P) matrix)."""
    pool = np.asarray(images, dtype=np.float64)
    if pool.ndim != 2 or len(pool) == 0:
        raise ValueError("pool must be a non-empty (N, P) matrix")

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        idx = rng.integers(len(pool), size=n)
        return pool[idx].copy()

    return draw


def novel_sampler(kind: str, corpus: DigitCorpus | None = None,
                  retina_width: int = DEFAULT_RETINA_WIDTH,
                  ranges: PropertyRanges = DEFAULT_RANGES,
                  glyph_size: int = DEFAULT_GLYPH_SIZE) -> Callable:
    """Training sampler for one novel structure with random properties."""
    if kind not in NOVEL_KINDS:
        raise ValueError(f"unknown novel kind {kind!r}")
    if kind in ("mirrored_digit", "double_digit") and (corpus is None or len(corpus) == 0):
        raise CorpusError(f"{kind} requires a non-empty corpus")
    p = retina_width * retina_width

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        batch = np.empty((n, p), dtype=np.float64)
        for k in range(n):
            raster = _novel_raster(kind, corpus, rng, glyph_size)
            props = StimulusProps(
                x=rng.uniform(*ranges.x), y=rng.uniform(*ranges.y),
                s=rng.uniform(*ranges.s), r=rng.uniform(*ranges.r),
                identity=kind)
            batch[k] = render_stimulus(raster, props, retina_width, ranges).flat()
        return batch

    return draw


def mixed_sampler(sampler_a: Callable, sampler_b: Callable,
                  p_a: float = 0.5) -> Callable:
    """Per-draw coin flip between two samplers."""
    if not 0.0 <= p_a <= 1.0:
        raise ValueError("p_a must lie in [0, 1]")

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        pick = rng.random(n) < p_a
        a = sampler_a(rng, int(pick.sum())) if pick.any() else None
        b = sampler_b(rng, int((~pick).sum())) if (~pick).any() else None
        if a is None:
            return b
        if b is None:
            return a
        batch = np.empty((n, a.shape[1]), dtype=np.float64)
        batch[pick] = a
        batch[~pick] = b
        return batch

    return draw


# ---------------------------------------------------------------------------
# Novel structures
# ---------------------------------------------------------------------------

def _novel_raster(kind: str, corpus: DigitCorpus | None,
                  rng: np.random.Generator, glyph_size: int) -> np.ndarray:
    g = glyph_size
    if kind == "solid_square":
        raster = np.zeros((g, g))
        m = max(1, round(g * 0.18))
        raster[m:g - m, m:g - m] = 1.0
        return raster
    if kind == "solid_triangle":
        raster = np.zeros((g, g))
        top = max(1, round(g * 0.12))
        bot = g - top
        half_base = (g / 2.0) * 0.72
        for i in range(top, bot):
            frac = (i - top) / max(bot - 1 - top, 1)
            span = frac * half_base
            j0 = int(np.ceil((g - 1) / 2.0 - span))
            j1 = int(np.floor((g - 1) / 2.0 + span))
            raster[i, j0:j1 + 1] = 1.0
        return raster
    if kind == "mirrored_digit":
        idx = int(rng.integers(len(corpus)))
        return np.fliplr(corpus.images[idx]).copy()
    if kind == "double_digit":
        i1 = int(rng.integers(len(corpus)))
        i2 = int(rng.integers(len(corpus)))
        h0, w0 = corpus.glyph_shape
        half = w0 // 2
        left = _resize_bilinear(corpus.images[i1], h0, half)
        right = _resize_bilinear(corpus.images[i2], h0, half)
        return np.clip(np.hstack([left, right]), 0.0, 1.0)
    if kind == "symbol_x":
        # bold strokes keep the glyph clearly unlike the thin-stroke digits
        m = 0.18
        strokes = [np.array([[m, m], [1 - m, 1 - m]]),
                   np.array([[m, 1 - m], [1 - m, m]])]
        return _rasterize_strokes(strokes, (g, g), half_width=0.11)
    raise ValueError(f"unknown novel kind {kind!r}")


def generate_novel(kind: str, props: StimulusProps,
                   corpus: DigitCorpus | None = None, rng_seed: int = 0,
                   retina_width: int = DEFAULT_RETINA_WIDTH,
                   ranges: PropertyRanges = DEFAULT_RANGES,
                   glyph_size: int = DEFAULT_GLYPH_SIZE) -> RetinaImage:
    """Render one novel structure under the usual property transform."""
    if kind not in NOVEL_KINDS:
        raise ValueError(f"unknown novel kind {kind!r}")
    if kind in ("mirrored_digit", "double_digit") and (corpus is None or len(corpus) == 0):
        raise CorpusError(f"{kind} requires a non-empty corpus")
    rng = np.random.default_rng(rng_seed)
    raster = _novel_raster(kind, corpus, rng, glyph_size)
    props = replace(props, identity=kind)
    return render_stimulus(raster, props, retina_width, ranges)
