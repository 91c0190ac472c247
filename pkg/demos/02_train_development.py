"""Train a small autoencoder and watch it develop.

Uses a 16x16 retina so the run takes under a minute.  Tracks synapse sign
statistics, firing sparsity, and probe reconstructions across snapshots,
then scans the metric series for candidate critical time points.
"""

from pathlib import Path

import numpy as np

import retinacode as rc

OUT = Path(__file__).resolve().parent / "out" / "development"
OUT.mkdir(parents=True, exist_ok=True)

corpus = rc.synthetic_digit_corpus(200, seed=7, glyph_size=10)
ranges = rc.PropertyRanges(x=(-0.1, 0.1), y=(-0.1, 0.1), s=(0.8, 1.2), r=(-30, 30))
spec = rc.LayerSpec(widths=(256, 64, 32, 64, 256))

probe = rc.sample_probe_set(corpus, n=32, rng_seed=21, retina_width=16,
                            ranges=ranges)
tracker = rc.DevelopmentTracker(probe)

config = rc.TrainConfig(total_steps=4000, batch_size=16, learning_rate=1e-3,
                        seed=1, snapshot_schedule=(0, 100, 400, 1000, 2000, 4000))
sampler = rc.augmented_sampler(corpus, retina_width=16, ranges=ranges)
params = rc.init_params(spec, seed=11)
params, log = rc.train(params, config, sampler, hooks=(tracker,))

print("step    probe_mse  ei_ratio(V1)  active_frac(enc)")
steps, series = tracker.metric_series()
for i, snap in enumerate(tracker.snapshots):
    print(f"{snap.step:6d}  {snap.probe_mse:9.4f}  {series['ei_ratio'][i]:12.3f}"
          f"  {series['active_fraction'][i]:16.3f}")

from retinacode.development import write_development_csv, write_snapshot_pgm
write_development_csv(tracker.snapshots, OUT / "development.csv")
for snap in tracker.snapshots:
    write_snapshot_pgm(snap, OUT / f"snapshot_{snap.step}.pgm")

candidates = rc.detect_ctp_candidates(steps, series, sensitivity=3.0)
print("\ncandidate critical time points:")
for step, trigger in candidates:
    print(f"  step {step}: {trigger}")
print(f"\nartifacts under {OUT}")
