"""Learning a novel structure, then forgetting it.

From a digit-mature model, trains on crossed-diagonal glyphs only, then on
digits again, tracking reconstruction error on both families throughout,
and compares the synaptic plasticity the two phases induce.
"""

from pathlib import Path

import numpy as np

import retinacode as rc

OUT = Path(__file__).resolve().parent / "out" / "forgetting"
OUT.mkdir(parents=True, exist_ok=True)

W = 16
corpus = rc.synthetic_digit_corpus(400, seed=7, glyph_size=10)
ranges = rc.PropertyRanges(x=(-0.15, 0.15), y=(-0.15, 0.15), s=(0.8, 1.2), r=(-30, 30))
spec = rc.LayerSpec(widths=(256, 64, 32, 64, 256))
digit_sampler = rc.augmented_sampler(corpus, retina_width=W, ranges=ranges)
config = rc.TrainConfig(total_steps=6000, batch_size=16, learning_rate=1e-3, seed=1)
mature, _ = rc.train(rc.init_params(spec, seed=11), config, digit_sampler)
print("matured a model on digits (6000 steps)")

novel_sampler = rc.novel_sampler("symbol_x", corpus, retina_width=W,
                                 ranges=ranges, glyph_size=10)
eval_rng = np.random.default_rng(92)
eval_sets = {"digits": rc.sample_probe_set(corpus, 64, rng_seed=91,
                                           retina_width=W, ranges=ranges).as_matrix(),
             "novel": novel_sampler(eval_rng, 64)}

phases = [rc.CurriculumPhase("novel", "novel_only", 1500),
          rc.CurriculumPhase("digits", "digits_only", 1500)]
final, log = rc.run_curriculum(
    mature, phases, {"novel_only": novel_sampler, "digits_only": digit_sampler},
    eval_sets, eval_every=100, seed=7, batch_size=16, learning_rate=1e-3)

print("\nstep   phase    digits_mse  novel_mse")
for i, step in enumerate(log.steps):
    print(f"{step:5d}  {log.phases[i]:7s}  {log.eval_mse['digits'][i]:.4f}"
          f"      {log.eval_mse['novel'][i]:.4f}")

summary = rc.forgetting_summary(log)
for name, entry in summary.items():
    print(f"\n{name}: best MSE {entry.min_mse:.4f} at step {entry.min_step}, "
          f"final {entry.final_mse:.4f}")

# plasticity: novel phase vs an equal digit phase from the same checkpoint
control, _ = rc.train(mature,
                      rc.TrainConfig(total_steps=1500, batch_size=16,
                                     learning_rate=1e-3, seed=7),
                      digit_sampler)
report = rc.plasticity_compare(mature, log.snapshots[1500], mature, control,
                               layer=0)
print(f"\nretina->V1 plasticity, novel vs known structures: "
      f"mean |dW| ratio {report.mean_ratio:.2f}, Welch p = {report.p_value:.2e}")

from retinacode.curriculum import write_curriculum_csv, write_delta_heatmap_pgm
write_curriculum_csv(log, OUT / "curriculum.csv")
write_delta_heatmap_pgm(mature, log.snapshots[1500], OUT / "delta_novel.pgm",
                        n_units=32)
print(f"artifacts under {OUT}")
