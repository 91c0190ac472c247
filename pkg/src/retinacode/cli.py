"""Operator entry point: train, analyze, perturb, curriculum, render.

Configuration is an INI file; every key has a deterministic built-in
default and can be overridden by a same-named command-line flag (flags
win).  All randomness comes from explicit seeds in the config, never the
clock, so reruns with identical inputs produce byte-identical artifacts.
Every command writes only into the configured output directory and ends by
writing a manifest of artifact digests.

Exit codes: 0 success, 2 config/usage error, 3 artifact/compatibility
error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import (dataset, development, network, perturbation, pgm, population,
               properties)
from . import curriculum as curriculum_mod
from .errors import (CheckpointError, CorpusError, NumericError,
                     RetinaCodeError, TrainingDiverged)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ARTIFACT = 3
EXIT_NUMERIC = 4


class ConfigError(RetinaCodeError):
    """A configuration file or flag value is invalid."""


DEFAULTS = {
    "dataset": {
        "source": "synthetic",          # synthetic | idx
        "n_images": "1000",
        "glyph_size": "28",
        "seed": "101",
        "images": "",
        "labels": "",
    },
    "retina": {
        "width": "64",
        "x_min": "-0.2", "x_max": "0.2",
        "y_min": "-0.2", "y_max": "0.2",
        "s_min": "0.7", "s_max": "1.3",
        "r_min": "-45", "r_max": "45",
    },
    "network": {
        "widths": "4096 256 64 32 64 256 4096",
        "init_seed": "11",
    },
    "train": {
        "steps": "50000",
        "batch_size": "32",
        "learning_rate": "1e-4",
        "optimizer": "adam",
        "seed": "1",
        "snapshots": "geometric",
        "probe_size": "64",
        "probe_seed": "21",
    },
    "analysis": {
        "alpha": "0.01",
        "n_trials": "128",
        "trial_seed": "31",
        "split_seed": "41",
        "n_readout": "1000",
        "tsne_points": "256",
        "tsne_perplexity": "30",
        "tsne_iters": "1000",
        "tsne_seed": "51",
        "grid_seed": "61",
    },
    "perturb": {
        "role": "x",
        "n_values": "11",
        "n_stimuli": "9",
        "seed": "71",
    },
    "curriculum": {
        "novel_kind": "symbol_x",
        "phase_steps": "10000 10000",
        "eval_every": "100",
        "eval_size": "128",
        "eval_seed": "91",
        "seed": "81",
        "batch_size": "32",
        "learning_rate": "1e-4",
    },
    "output": {
        "dir": "out",
        "workers": "1",
    },
}


@dataclass
class RunConfig:
    """Validated configuration for one command invocation."""

    parser: configparser.ConfigParser
    out_dir: Path

    def get(self, section: str, key: str) -> str:
        try:
            return self.parser.get(section, key)
        except (configparser.NoSectionError, configparser.NoOptionError) as exc:
            raise ConfigError(f"missing config key [{section}] {key}") from exc

    def get_int(self, section: str, key: str) -> int:
        try:
            return int(self.get(section, key))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} must be an integer") from exc

    def get_float(self, section: str, key: str) -> float:
        try:
            return float(self.get(section, key))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} must be a number") from exc

    def get_ints(self, section: str, key: str) -> tuple[int, ...]:
        try:
            return tuple(int(tok) for tok in self.get(section, key).split())
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} must be integers") from exc

    def ranges(self) -> dataset.PropertyRanges:
        g = lambda k: self.get_float("retina", k)
        try:
            return dataset.PropertyRanges(
                x=(g("x_min"), g("x_max")), y=(g("y_min"), g("y_max")),
                s=(g("s_min"), g("s_max")), r=(g("r_min"), g("r_max")))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def retina_width(self) -> int:
        return self.get_int("retina", "width")

    def layer_spec(self) -> network.LayerSpec:
        widths = self.get_ints("network", "widths")
        try:
            spec = network.LayerSpec(widths=widths)
        except ValueError as exc:
            raise ConfigError(f"invalid network widths: {exc}") from exc
        if spec.retina_width != self.retina_width():
            raise ConfigError(
                f"network widths imply retina {spec.retina_width}, "
                f"config says {self.retina_width()}")
        return spec

    def corpus(self) -> dataset.DigitCorpus:
        source = self.get("dataset", "source")
        if source == "synthetic":
            return dataset.synthetic_digit_corpus(
                self.get_int("dataset", "n_images"),
                seed=self.get_int("dataset", "seed"),
                glyph_size=self.get_int("dataset", "glyph_size"))
        if source == "idx":
            images = self.get("dataset", "images")
            labels = self.get("dataset", "labels")
            for path in (images, labels):
                if not path or not Path(path).exists():
                    raise ConfigError(f"dataset file not found: {path!r}")
            return dataset.load_idx(images, labels)
        raise ConfigError(f"unknown dataset source {source!r}")

    def digest(self) -> str:
        """Digest of the semantic config; [output] is operational, excluded."""
        blob = "\n".join(f"{s}.{k}={v}" for s in sorted(self.parser.sections())
                         if s != "output"
                         for k, v in sorted(self.parser.items(s)))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(path: str | None, overrides: dict[str, str]) -> RunConfig:
    """Defaults, then the INI file, then flag overrides (flags win)."""
    parser = configparser.ConfigParser()
    parser.read_dict(DEFAULTS)
    if path is not None:
        if not Path(path).exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    for dotted, value in overrides.items():
        if value is None:
            continue
        section, key = dotted.split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, str(value))
    workers = int(parser.get("output", "workers"))
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    out_dir = Path(parser.get("output", "dir"))
    return RunConfig(parser=parser, out_dir=out_dir)


# ---------------------------------------------------------------------------
# Artifact bookkeeping
# ---------------------------------------------------------------------------

class ArtifactSet:
    """Collects files written under the output directory, digests them."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: list[Path] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.files.append(p)
        return p

    def write_manifest(self) -> Path:
        manifest = self.out_dir / "manifest.txt"
        lines = []
        for p in sorted(set(self.files)):
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            lines.append(f"{digest}  {p.relative_to(self.out_dir)}")
        manifest.write_text("\n".join(lines) + "\n")
        return manifest


def _geometric_schedule(total: int, first: int = 100) -> tuple[int, ...]:
    steps = {0, total}
    s = first
    while s < total:
        steps.add(s)
        s *= 2
    return tuple(sorted(steps))


def _parse_schedule(text: str, total: int) -> tuple[int, ...]:
    if text.strip() == "geometric":
        return _geometric_schedule(total)
    try:
        steps = tuple(sorted({int(tok) for tok in text.split()} | {0, total}))
    except ValueError as exc:
        raise ConfigError("train snapshots must be 'geometric' or step numbers") from exc
    return tuple(s for s in steps if 0 <= s <= total)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_train(config: RunConfig) -> int:
    spec = config.layer_spec()
    ranges = config.ranges()
    corpus = config.corpus()
    width = config.retina_width()
    artifacts = ArtifactSet(config.out_dir)

    total = config.get_int("train", "steps")
    schedule = _parse_schedule(config.get("train", "snapshots"), total)
    train_config = network.TrainConfig(
        total_steps=total,
        batch_size=config.get_int("train", "batch_size"),
        learning_rate=config.get_float("train", "learning_rate"),
        optimizer=config.get("train", "optimizer"),
        seed=config.get_int("train", "seed"),
        snapshot_schedule=schedule)

    probe = dataset.sample_probe_set(
        corpus, n=config.get_int("train", "probe_size"),
        rng_seed=config.get_int("train", "probe_seed"),
        retina_width=width, ranges=ranges)
    tracker = development.DevelopmentTracker(probe)
    sampler = dataset.augmented_sampler(corpus, retina_width=width, ranges=ranges)

    params = network.init_params(spec, seed=config.get_int("network", "init_seed"))
    params, log = network.train(params, train_config, sampler, hooks=(tracker,))

    network.save_checkpoint(
        params, step=total,
        metadata={"config_digest": config.digest(),
                  "train_seed": train_config.seed,
                  "init_seed": config.get_int("network", "init_seed")},
        path=artifacts.path("checkpoint.ckpt"))

    with open(artifacts.path("train_log.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "batch_mse"])
        for s, m in zip(log.steps, log.batch_mse):
            writer.writerow([s, repr(m)])

    development.write_development_csv(tracker.snapshots,
                                      artifacts.path("development.csv"))
    for snap in tracker.snapshots:
        development.write_snapshot_pgm(
            snap, artifacts.path(f"snapshot_{snap.step}.pgm"))

    if len(tracker.snapshots) >= 3:
        steps, series = tracker.metric_series()
        candidates = development.detect_ctp_candidates(steps, series)
        with open(artifacts.path("ctp_candidates.csv"), "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["step", "trigger"])
            for step, trigger in candidates:
                writer.writerow([step, trigger])

    artifacts.write_manifest()
    return EXIT_OK


def _load_checkpoint_for(config: RunConfig, path: str) -> network.NetworkParams:
    if not Path(path).exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    params, _, _ = network.load_checkpoint(path, expected_spec=config.layer_spec())
    return params


def cmd_analyze(config: RunConfig, checkpoint: str) -> int:
    params = _load_checkpoint_for(config, checkpoint)
    ranges = config.ranges()
    corpus = config.corpus()
    width = config.retina_width()
    artifacts = ArtifactSet(config.out_dir)
    alpha = config.get_float("analysis", "alpha")
    n_trials = config.get_int("analysis", "n_trials")
    trial_seed = config.get_int("analysis", "trial_seed")
    split_seed = config.get_int("analysis", "split_seed")

    # property correlations, categories, decoders
    all_results = []
    decoder_fits = {}
    trial_sets = {}
    for k, tag in enumerate(dataset.PROPERTY_TAGS):
        trials = dataset.sample_trial_set(
            corpus, tag, n_trials, rng_seed=trial_seed + k,
            retina_width=width, ranges=ranges)
        trial_sets[tag] = trials
        results = properties.correlate(trials, params)
        all_results.extend(results)
        encodings = network.encode(params, trials)
        decoder_fits[tag] = properties.fit_linear_decoder(
            encodings, trials.property_values, split_seed=split_seed,
            target_tag=tag)
    properties.write_correlations_csv(all_results,
                                      artifacts.path("correlations.csv"))
    categories = properties.categorize(all_results, alpha=alpha)
    properties.write_categories_csv(categories, artifacts.path("categories.csv"))
    properties.write_decoder_csv(decoder_fits, artifacts.path("decoders.csv"))

    # identity readout on centered canonical stimuli, with perturbed conditions
    n_readout = min(config.get_int("analysis", "n_readout"), len(corpus))
    centered = dataset.render_centered(corpus, range(n_readout),
                                       retina_width=width, ranges=ranges)
    enc_centered = network.encode(params, dataset.stimuli_to_matrix(centered))
    labels = corpus.labels[:n_readout]
    classifier, accuracy = properties.fit_identity_classifier(
        enc_centered, labels, split_seed=split_seed)
    robustness = properties.perturbation_robustness(
        params, classifier, corpus, n_eval=min(200, len(corpus)),
        seed=trial_seed, retina_width=width, ranges=ranges)
    with open(artifacts.path("classifier.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["condition", "accuracy"])
        writer.writerow(["held_out", repr(accuracy)])
        for condition in ("none",) + dataset.PROPERTY_TAGS:
            writer.writerow([condition, repr(robustness[condition])])

    identity_corr = properties.identity_correlation_matrix(
        enc_centered, labels, alpha=alpha)
    with open(artifacts.path("identity_correlation.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["neuron"] + [f"digit_{d}" for d in range(10)])
        for unit in range(identity_corr.r.shape[0]):
            writer.writerow([unit] + [repr(v) for v in identity_corr.r[unit]])

    # similarity grids and paradiagonal scores
    grid_seed = config.get_int("analysis", "grid_seed")
    with open(artifacts.path("paradiagonal.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["property", "stripe_strength", "background"])
        for k, tag in enumerate(dataset.PROPERTY_TAGS):
            grid = population.build_stimulus_grid(
                tag, corpus, seed=grid_seed + k, retina_width=width,
                ranges=ranges)
            sim = population.similarity_matrix(grid, params)
            population.write_similarity_csv(
                sim, artifacts.path(f"similarity_{tag}.csv"))
            population.write_similarity_pgm(
                sim, artifacts.path(f"similarity_{tag}.pgm"))
            stripe, background = population.paradiagonal_score(sim)
            writer.writerow([tag, repr(stripe), repr(background)])

    # t-SNE over a mixed-property probe set
    n_points = config.get_int("analysis", "tsne_points")
    tsne_probe = dataset.sample_probe_set(
        corpus, n=n_points, rng_seed=grid_seed + 17, retina_width=width,
        ranges=ranges)
    enc_probe = network.encode(params, tsne_probe)
    embedding = population.tsne_embed(
        enc_probe,
        perplexity=config.get_float("analysis", "tsne_perplexity"),
        n_iter=config.get_int("analysis", "tsne_iters"),
        seed=config.get_int("analysis", "tsne_seed"),
        stimuli=tsne_probe.stimuli)
    population.write_embedding_csv(embedding, artifacts.path("tsne.csv"))

    with open(artifacts.path("top_responsive.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["stimulus", "first", "second", "third"])
        for i, row in enumerate(population.top_responsive(enc_probe, 3)):
            writer.writerow([i, *row.tolist()])

    # favorite images of each property's role neuron
    for tag in dataset.PROPERTY_TAGS:
        results = [c for c in all_results if c.property == tag]
        unit = properties.top_neuron(results, tag)
        favorites = population.favorite_images(tsne_probe.stimuli, enc_probe,
                                               neuron_id=unit)
        population.write_favorites_pgm(
            favorites, artifacts.path(f"favorites_{tag}_unit{unit}.pgm"))

    artifacts.write_manifest()
    return EXIT_OK


def _resolve_role(config: RunConfig, params, corpus, role: str) -> int:
    """Map a role tag to a unit: 'x'/'y'/'s'/'r', 'digit:<d>', or 'unit:<n>'."""
    width = config.retina_width()
    ranges = config.ranges()
    if role.startswith("unit:"):
        return int(role.split(":", 1)[1])
    if role.startswith("digit:"):
        digit = int(role.split(":", 1)[1])
        n = min(500, len(corpus))
        centered = dataset.render_centered(corpus, range(n), retina_width=width,
                                           ranges=ranges)
        enc = network.encode(params, dataset.stimuli_to_matrix(centered))
        corr = properties.identity_correlation_matrix(enc, corpus.labels[:n])
        return int(np.argmax(corr.r[:, digit]))
    if role in dataset.PROPERTY_TAGS:
        trials = dataset.sample_trial_set(
            corpus, role, config.get_int("analysis", "n_trials"),
            rng_seed=config.get_int("analysis", "trial_seed"),
            retina_width=width, ranges=ranges)
        return properties.top_neuron(properties.correlate(trials, params), role)
    raise ConfigError(f"unknown neuron role {role!r}")


def cmd_perturb(config: RunConfig, checkpoint: str) -> int:
    params = _load_checkpoint_for(config, checkpoint)
    corpus = config.corpus()
    ranges = config.ranges()
    width = config.retina_width()
    artifacts = ArtifactSet(config.out_dir)

    role = config.get("perturb", "role")
    unit = _resolve_role(config, params, corpus, role)
    n_values = config.get_int("perturb", "n_values")
    n_stimuli = config.get_int("perturb", "n_stimuli")
    seed = config.get_int("perturb", "seed")

    sweep_tag = role if role in dataset.PROPERTY_TAGS else "x"
    trials = dataset.sample_trial_set(corpus, sweep_tag, n_stimuli,
                                      rng_seed=seed, retina_width=width,
                                      ranges=ranges)
    order = np.argsort(trials.property_values)
    stimuli = [trials.stimuli[i] for i in order]

    grid = np.linspace(0.0, 1.0, n_values)
    sweep = perturbation.modulate(params, stimuli, unit, grid)
    perturbation.write_modulation_pgm(
        sweep, artifacts.path(f"modulation_unit{unit}.pgm"))
    perturbation.write_modulation_csv(
        sweep, artifacts.path(f"modulation_unit{unit}.csv"))

    report = perturbation.lesion(params, stimuli, unit)
    perturbation.write_lesion_csv(report, artifacts.path(f"lesion_unit{unit}.csv"))

    check = perturbation.position_invariance_check(params, stimuli, unit, grid)
    translation = perturbation.input_translation_shift(params, stimuli,
                                                       dx_fraction=0.1)
    with open(artifacts.path("invariance.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["unit", "max_modulation_shift_px",
                         "input_translation_shift_px"])
        writer.writerow([unit, repr(check.max_shift), repr(translation)])

    artifacts.write_manifest()
    return EXIT_OK


def cmd_curriculum(config: RunConfig, checkpoint: str) -> int:
    params = _load_checkpoint_for(config, checkpoint)
    corpus = config.corpus()
    ranges = config.ranges()
    width = config.retina_width()
    artifacts = ArtifactSet(config.out_dir)

    phase_steps = config.get_ints("curriculum", "phase_steps")
    novel_kind = config.get("curriculum", "novel_kind")
    if novel_kind not in dataset.NOVEL_KINDS:
        raise ConfigError(f"unknown novel kind {novel_kind!r}")
    glyph = config.get_int("dataset", "glyph_size")
    seed = config.get_int("curriculum", "seed")
    eval_seed = config.get_int("curriculum", "eval_seed")
    eval_size = config.get_int("curriculum", "eval_size")

    samplers = {
        "digits_only": dataset.augmented_sampler(corpus, width, ranges),
        "novel_only": dataset.novel_sampler(novel_kind, corpus, width, ranges,
                                            glyph_size=glyph),
    }
    samplers["mixed"] = dataset.mixed_sampler(samplers["novel_only"],
                                              samplers["digits_only"])
    eval_rng = np.random.default_rng(eval_seed)
    eval_sets = {
        "digits": dataset.sample_probe_set(corpus, eval_size, eval_seed,
                                           width, ranges).as_matrix(),
        "novel": samplers["novel_only"](eval_rng, eval_size),
    }

    phases = []
    for k, steps in enumerate(phase_steps):
        source = "novel_only" if k % 2 == 0 else "digits_only"
        phases.append(curriculum_mod.CurriculumPhase(
            name=f"phase{k}_{source}", source=source, n_steps=steps))

    try:
        final, log = curriculum_mod.run_curriculum(
            params, phases, samplers, eval_sets,
            eval_every=config.get_int("curriculum", "eval_every"),
            seed=seed,
            batch_size=config.get_int("curriculum", "batch_size"),
            learning_rate=config.get_float("curriculum", "learning_rate"))
    except TrainingDiverged as exc:
        if exc.log is not None:
            curriculum_mod.write_curriculum_csv(
                exc.log, artifacts.path("curriculum_partial.csv"))
            artifacts.write_manifest()
        raise

    curriculum_mod.write_curriculum_csv(log, artifacts.path("curriculum.csv"))
    boundaries = sorted(log.snapshots)
    for (name, bstep) in log.phase_boundaries:
        network.save_checkpoint(
            log.snapshots[bstep], step=bstep,
            metadata={"phase": name, "config_digest": config.digest()},
            path=artifacts.path(f"checkpoint_{name}_{bstep}.ckpt"))

    if len(boundaries) >= 3:
        # paired comparison: first phase vs second phase, from their snapshots
        report = curriculum_mod.plasticity_compare(
            log.snapshots[boundaries[0]], log.snapshots[boundaries[1]],
            log.snapshots[boundaries[1]], log.snapshots[boundaries[2]],
            layer=0)
        curriculum_mod.write_plasticity_csv(report,
                                            artifacts.path("plasticity.csv"))
        curriculum_mod.write_delta_heatmap_pgm(
            log.snapshots[boundaries[0]], log.snapshots[boundaries[1]],
            artifacts.path("delta_layer0.pgm"))

    artifacts.write_manifest()
    return EXIT_OK


def cmd_render(config: RunConfig, what: str) -> int:
    corpus = config.corpus()
    ranges = config.ranges()
    width = config.retina_width()
    artifacts = ArtifactSet(config.out_dir)
    seed = config.get_int("dataset", "seed")

    if what.startswith("digit:"):
        digit = int(what.split(":", 1)[1])
        pool = corpus.class_indices(digit)
        if len(pool) == 0:
            raise CorpusError(f"no instances of digit {digit}")
        tiles = []
        rng = np.random.default_rng(seed)
        for _ in range(8):
            idx = int(pool[rng.integers(len(pool))])
            props = dataset.StimulusProps(
                x=rng.uniform(*ranges.x), y=rng.uniform(*ranges.y),
                s=rng.uniform(*ranges.s), r=rng.uniform(*ranges.r),
                identity=digit)
            tiles.append(dataset.render_stimulus(corpus.images[idx], props,
                                                 width, ranges).pixels)
        name = f"render_digit{digit}.pgm"
    elif what in dataset.NOVEL_KINDS:
        rng = np.random.default_rng(seed)
        tiles = []
        for k in range(8):
            img = dataset.generate_novel(
                what, dataset.StimulusProps(
                    x=rng.uniform(*ranges.x), y=rng.uniform(*ranges.y),
                    s=rng.uniform(*ranges.s), r=rng.uniform(*ranges.r)),
                corpus, rng_seed=seed + k, retina_width=width, ranges=ranges,
                glyph_size=config.get_int("dataset", "glyph_size"))
            tiles.append(img.pixels)
        name = f"render_{what}.pgm"
    else:
        raise ConfigError(
            f"render target must be 'digit:<d>' or one of {dataset.NOVEL_KINDS}")

    pgm.write_pgm(artifacts.path(name), pgm.tile_grid(tiles, n_cols=4))
    artifacts.write_manifest()
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retinacode",
        description="Train and analyze the retina autoencoder.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--out", help="output directory (overrides [output] dir)")
        p.add_argument("--seed", type=int, help="override the command's main seed")
        p.add_argument("--workers", type=int, help="worker count (1 = bit-reproducible)")

    p_train = sub.add_parser("train", help="train a model, emit checkpoint + metrics")
    common(p_train)
    p_train.add_argument("--steps", type=int, help="override [train] steps")
    p_train.add_argument("--batch-size", type=int)
    p_train.add_argument("--learning-rate", type=float)
    p_train.add_argument("--widths", help="override [network] widths")

    p_analyze = sub.add_parser("analyze", help="run the full analysis battery")
    common(p_analyze)
    p_analyze.add_argument("--checkpoint", required=True)
    p_analyze.add_argument("--tsne-points", type=int)

    p_perturb = sub.add_parser("perturb", help="modulation sweeps and lesions")
    common(p_perturb)
    p_perturb.add_argument("--checkpoint", required=True)
    p_perturb.add_argument("--role", help="x|y|s|r, digit:<d>, or unit:<n>")
    p_perturb.add_argument("--n-values", type=int)

    p_curr = sub.add_parser("curriculum", help="novel/known training phases")
    common(p_curr)
    p_curr.add_argument("--checkpoint", required=True)
    p_curr.add_argument("--phase-steps", help="space-separated step counts")
    p_curr.add_argument("--eval-every", type=int)
    p_curr.add_argument("--novel-kind")

    p_render = sub.add_parser("render", help="preview stimuli as PGM")
    common(p_render)
    p_render.add_argument("target", help="digit:<d> or a novel kind")
    return parser


def _overrides_from(args: argparse.Namespace) -> dict[str, str]:
    mapping = {
        "out": "output.dir",
        "workers": "output.workers",
        "steps": "train.steps",
        "batch_size": "train.batch_size",
        "learning_rate": "train.learning_rate",
        "widths": "network.widths",
        "tsne_points": "analysis.tsne_points",
        "role": "perturb.role",
        "n_values": "perturb.n_values",
        "phase_steps": "curriculum.phase_steps",
        "eval_every": "curriculum.eval_every",
        "novel_kind": "curriculum.novel_kind",
    }
    seed_target = {
        "train": "train.seed",
        "analyze": "analysis.trial_seed",
        "perturb": "perturb.seed",
        "curriculum": "curriculum.seed",
        "render": "dataset.seed",
    }
    overrides = {}
    for attr, dotted in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[dotted] = str(value)
    if getattr(args, "seed", None) is not None:
        overrides[seed_target[args.command]] = str(args.seed)
    return overrides


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, _overrides_from(args))
        if args.command == "train":
            return cmd_train(config)
        if args.command == "analyze":
            return cmd_analyze(config, args.checkpoint)
        if args.command == "perturb":
            return cmd_perturb(config, args.checkpoint)
        if args.command == "curriculum":
            return cmd_curriculum(config, args.checkpoint)
        if args.command == "render":
            return cmd_render(config, args.target)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, CorpusError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    except (NumericError, TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
