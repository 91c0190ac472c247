"""Render digit stimuli on the synthetic retina.

Generates a procedural digit corpus, sweeps each generative property
(horizontal/vertical position, scale, rotation), and writes PGM previews
plus a gallery of the novel structures used in the learning/forgetting
experiments.
"""

from pathlib import Path

import numpy as np

import retinacode as rc

OUT = Path(__file__).resolve().parent / "out" / "stimuli"
OUT.mkdir(parents=True, exist_ok=True)

corpus = rc.synthetic_digit_corpus(100, seed=7)
print(f"corpus: {len(corpus)} glyphs of shape {corpus.glyph_shape}")

# one row per digit class, centered canonical renders
centered = rc.render_centered(corpus, range(10))
rc.pgm.write_pgm(OUT / "digits_centered.pgm",
                 rc.pgm.tile_grid([s.pixels for s in centered], n_cols=10))

# sweep each property for a single digit instance
for tag in rc.PROPERTY_TAGS:
    lo, hi = rc.DEFAULT_RANGES.interval(tag)
    tiles = []
    for value in np.linspace(lo, hi, 9):
        props = rc.StimulusProps(identity=5).with_value(tag, value)
        tiles.append(rc.render_stimulus(corpus.images[5], props).pixels)
    rc.pgm.write_pgm(OUT / f"sweep_{tag}.pgm", rc.pgm.tile_grid(tiles, n_cols=9))
    print(f"swept {tag} over [{lo}, {hi}] -> sweep_{tag}.pgm")

# novel structures: squares, triangles, mirrored/double digits, symbol x
tiles = []
for kind in rc.NOVEL_KINDS:
    for k in range(4):
        img = rc.generate_novel(kind, rc.StimulusProps(), corpus, rng_seed=k)
        tiles.append(img.pixels)
rc.pgm.write_pgm(OUT / "novel_structures.pgm", rc.pgm.tile_grid(tiles, n_cols=4))
print(f"novel kinds: {', '.join(rc.NOVEL_KINDS)} -> novel_structures.pgm")

# a trial set like the analyses use: 128 horizontal-translation trials
trials = rc.sample_trial_set(corpus, "x", 128, rng_seed=1)
print(f"trial set: {len(trials)} stimuli sweeping x in "
      f"[{trials.property_values.min():.2f}, {trials.property_values.max():.2f}]")
print(f"wrote previews under {OUT}")
