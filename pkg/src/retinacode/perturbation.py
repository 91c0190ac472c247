"""Causal single-neuron probes: modulation sweeps, lesions, and the
position-invariance check for the reconstruction pathway."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import pgm
from .dataset import RetinaImage, translate_image
from .errors import UndefinedCentroidError
from .network import (ENCODING_DIM, NetworkParams, decode_from_encoding,
                      forward, reconstruction_loss)


@dataclass
class ModulationSweep:
    """Reconstructions with one encoding unit overwritten by a value grid."""

    neuron_id: int
    value_grid: np.ndarray
    stimuli: list[RetinaImage]
    reconstructions: np.ndarray         # (n_stimuli, n_values, W, W)
    optimal_values: np.ndarray          # the unit's own activity per stimulus
    baselines: np.ndarray               # unmodified reconstructions (n, W, W)


def _check_neuron(neuron_id: int) -> None:
    if not 0 <= neuron_id < ENCODING_DIM:
        raise ValueError(f"neuron_id must lie in 0..{ENCODING_DIM - 1}")


def modulate(params: NetworkParams, stimuli: Sequence[RetinaImage],
             neuron_id: int, value_grid: Sequence[float]) -> ModulationSweep:
    """Sweep one unit's activity over a value grid and decode each setting.

    Injecting the unit's own recorded activity reproduces the unmodified
    reconstruction bit for bit, since each cell runs through the same
    decoder path as the plain forward pass.
    """
    _check_neuron(neuron_id)
    grid = np.asarray(value_grid, dtype=np.float64)
    if grid.size == 0 or grid.min() < 0.0 or grid.max() > 1.0:
        raise ValueError("value grid entries must lie in [0, 1]")
    w = params.spec.retina_width
    recstack = np.empty((len(stimuli), grid.size, w, w))
    optimal = np.empty(len(stimuli))
    baselines = np.empty((len(stimuli), w, w))
    for i, stim in enumerate(stimuli):
        record = forward(params, stim)
        enc = record.encoding
        optimal[i] = enc[neuron_id]
        baselines[i] = record.reconstruction
        for j, value in enumerate(grid):
            modified = enc.copy()
            modified[neuron_id] = value
            recstack[i, j] = decode_from_encoding(params, modified).pixels
    return ModulationSweep(neuron_id=neuron_id, value_grid=grid,
                           stimuli=list(stimuli), reconstructions=recstack,
                           optimal_values=optimal, baselines=baselines)


@dataclass
class LesionReport:
    """Reconstruction damage from clamping one encoding unit to zero."""

    neuron_id: int
    baseline_mse: np.ndarray
    lesioned_mse: np.ndarray
    damage: np.ndarray                  # lesioned - baseline, per stimulus
    per_identity: dict                  # identity -> mean damage


def lesion(params: NetworkParams, stimuli: Sequence[RetinaImage],
           neuron_id: int) -> LesionReport:
    _check_neuron(neuron_id)
    n = len(stimuli)
    baseline = np.empty(n)
    lesioned = np.empty(n)
    for i, stim in enumerate(stimuli):
        record = forward(params, stim)
        baseline[i] = reconstruction_loss(record, stim)
        enc = record.encoding.copy()
        if enc[neuron_id] == 0.0:
            lesioned[i] = baseline[i]   # clamping a silent unit changes nothing
            continue
        enc[neuron_id] = 0.0
        lesioned[i] = reconstruction_loss(
            decode_from_encoding(params, enc).pixels, stim)
    damage = lesioned - baseline
    per_identity: dict = {}
    for i, stim in enumerate(stimuli):
        per_identity.setdefault(stim.props.identity, []).append(damage[i])
    per_identity = {k: float(np.mean(v)) for k, v in per_identity.items()}
    return LesionReport(neuron_id=neuron_id, baseline_mse=baseline,
                        lesioned_mse=lesioned, damage=damage,
                        per_identity=per_identity)


def centroid(image) -> tuple[float, float]:
    """Intensity-weighted mean pixel position as (column, row)."""
    pixels = image.pixels if isinstance(image, RetinaImage) else np.asarray(image)
    pixels = np.asarray(pixels, dtype=np.float64)
    total = pixels.sum()
    if total <= 0.0:
        raise UndefinedCentroidError("centroid undefined for a zero-intensity image")
    ii, jj = np.meshgrid(np.arange(pixels.shape[0]), np.arange(pixels.shape[1]),
                         indexing="ij")
    cy = float((pixels * ii).sum() / total)
    cx = float((pixels * jj).sum() / total)
    return cx, cy


@dataclass
class InvarianceCheck:
    neuron_id: int
    max_shift: float                    # worst horizontal centroid displacement
    shifts: np.ndarray                  # (n_stimuli, n_values)


def position_invariance_check(params: NetworkParams,
                              stimuli: Sequence[RetinaImage], neuron_id: int,
                              value_grid: Sequence[float]) -> InvarianceCheck:
    """How far can one unit's activity drag the reconstruction horizontally?

    For every (stimulus, grid value) the unit is overwritten and the decoded
    image's horizontal centroid is compared against the unmodified
    reconstruction's.  Returns the worst displacement in pixels.
    """
    sweep = modulate(params, stimuli, neuron_id, value_grid)
    shifts = np.zeros((len(stimuli), sweep.value_grid.size))
    for i in range(len(stimuli)):
        cx0, _ = centroid(sweep.baselines[i])
        for j in range(sweep.value_grid.size):
            cx, _ = centroid(sweep.reconstructions[i, j])
            shifts[i, j] = abs(cx - cx0)
    return InvarianceCheck(neuron_id=neuron_id, max_shift=float(shifts.max()),
                           shifts=shifts)


def input_translation_shift(params: NetworkParams,
                            stimuli: Sequence[RetinaImage],
                            dx_fraction: float = 0.1) -> float:
    """Oracle scale for the invariance check: mean horizontal centroid shift
    of the reconstruction when the input itself moves by dx_fraction * W."""
    w = params.spec.retina_width
    dx = dx_fraction * w
    shifts = []
    for stim in stimuli:
        rec0 = forward(params, stim).reconstruction
        moved = translate_image(stim.pixels, dx=dx)
        rec1 = forward(params, moved).reconstruction
        shifts.append(abs(centroid(rec1)[0] - centroid(rec0)[0]))
    return float(np.mean(shifts))


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def write_modulation_pgm(sweep: ModulationSweep, path) -> None:
    """Reconstruction grid: one row per stimulus, one column per grid value."""
    tiles = [sweep.reconstructions[i, j]
             for i in range(len(sweep.stimuli))
             for j in range(sweep.value_grid.size)]
    pgm.write_pgm(path, pgm.tile_grid(tiles, n_cols=sweep.value_grid.size))


def write_modulation_csv(sweep: ModulationSweep, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["stimulus", "value", "mse_vs_stimulus",
                         "centroid_x", "centroid_y", "optimal_value"])
        for i, stim in enumerate(sweep.stimuli):
            for j, value in enumerate(sweep.value_grid):
                rec = sweep.reconstructions[i, j]
                try:
                    cx, cy = centroid(rec)
                except UndefinedCentroidError:
                    cx, cy = float("nan"), float("nan")
                writer.writerow([i, repr(float(value)),
                                 repr(reconstruction_loss(rec, stim)),
                                 repr(cx), repr(cy),
                                 repr(float(sweep.optimal_values[i]))])


def write_lesion_csv(report: LesionReport, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["stimulus", "baseline_mse", "lesioned_mse", "damage"])
        for i in range(len(report.damage)):
            writer.writerow([i, repr(float(report.baseline_mse[i])),
                             repr(float(report.lesioned_mse[i])),
                             repr(float(report.damage[i]))])
        writer.writerow([])
        writer.writerow(["identity", "mean_damage"])
        for identity, dmg in report.per_identity.items():
            writer.writerow([identity, repr(dmg)])
