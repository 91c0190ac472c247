"""Population-level structure of the encoding layer.

Builds property-by-identity stimulus grids, computes similarity matrices
and their paradiagonal stripe scores, embeds encodings with t-SNE, and
extracts per-neuron favorite images.
"""

from pathlib import Path

import numpy as np

import retinacode as rc

OUT = Path(__file__).resolve().parent / "out" / "population"
OUT.mkdir(parents=True, exist_ok=True)

W = 16
corpus = rc.synthetic_digit_corpus(400, seed=7, glyph_size=10)
ranges = rc.PropertyRanges(x=(-0.15, 0.15), y=(-0.15, 0.15), s=(0.8, 1.2), r=(-30, 30))
spec = rc.LayerSpec(widths=(256, 64, 32, 64, 256))
sampler = rc.augmented_sampler(corpus, retina_width=W, ranges=ranges)
config = rc.TrainConfig(total_steps=6000, batch_size=16, learning_rate=1e-3, seed=1)
params, _ = rc.train(rc.init_params(spec, seed=11), config, sampler)
print("trained a small model (6000 steps)")

# similarity matrices: 10 property levels x 10 digits = 100 stimuli
print("\nparadiagonal structure (same digit across property levels):")
for k, tag in enumerate(rc.PROPERTY_TAGS):
    grid = rc.build_stimulus_grid(tag, corpus, seed=61 + k, retina_width=W,
                                  ranges=ranges)
    sim = rc.similarity_matrix(grid, params)
    stripe, background = rc.paradiagonal_score(sim)
    print(f"  {tag}: stripe={stripe:+.3f} background={background:+.3f} "
          f"contrast={stripe - background:+.3f}")
    from retinacode.population import write_similarity_pgm
    write_similarity_pgm(sim, OUT / f"similarity_{tag}.pgm")

# t-SNE of a mixed-property stimulus sample
probe = rc.sample_probe_set(corpus, n=300, rng_seed=5, retina_width=W,
                            ranges=ranges)
enc = rc.encode(params, probe)
emb = rc.tsne_embed(enc, perplexity=30, n_iter=600, seed=3,
                    stimuli=probe.stimuli)
print(f"\nt-SNE final KL divergence: {emb.kl_divergence:.3f}")

identities = np.asarray(emb.identities)
x_bins = np.digitize(emb.props[:, 0], np.linspace(-0.15, 0.15, 4)[1:-1])
print(f"silhouette by digit identity: "
      f"{rc.silhouette_score(emb.coords, identities):+.3f}")
print(f"silhouette by binned x position: "
      f"{rc.silhouette_score(emb.coords, x_bins):+.3f}")

from retinacode.population import write_embedding_csv, write_favorites_pgm
write_embedding_csv(emb, OUT / "tsne.csv")

# favorite images: which stimuli drive each unit hardest?
top3 = rc.top_responsive(enc, 3)
busiest = int(np.bincount(top3[:, 0], minlength=32).argmax())
favorites = rc.favorite_images(probe.stimuli, enc, neuron_id=busiest)
write_favorites_pgm(favorites, OUT / f"favorites_unit{busiest}.pgm")
print(f"\nmost frequently top-responding unit: n{busiest} "
      f"-> favorites_unit{busiest}.pgm")
print(f"artifacts under {OUT}")
