"""Developmental observables: synapse sign censuses, firing sparsity,
reconstruction snapshots, and candidate critical-time-point detection."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import pgm
from .dataset import TrialSet
from .network import NetworkParams, _forward_batch

ACTIVE_THRESHOLD = 0.6      # sigmoid baseline is 0.5; "active" means above this


@dataclass
class SynapseStats:
    """Sign census of one weight matrix.

    Exact zeros belong to neither class.  ei_ratio is +inf when there are
    excitatory but no inhibitory synapses, and nan when there are neither.
    """

    n_excitatory: int
    n_inhibitory: int
    mean_abs_excitatory: float
    mean_abs_inhibitory: float
    ei_ratio: float


def synapse_stats(weights: np.ndarray) -> SynapseStats:
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if not np.isfinite(w).all():
        raise ValueError("weights must be finite")
    pos = w > 0.0
    neg = w < 0.0
    n_exc = int(pos.sum())
    n_inh = int(neg.sum())
    mean_exc = float(w[pos].mean()) if n_exc else 0.0
    mean_inh = float(-w[neg].mean()) if n_inh else 0.0
    if n_inh > 0:
        ratio = n_exc / n_inh
    else:
        ratio = float("inf") if n_exc > 0 else float("nan")
    return SynapseStats(n_excitatory=n_exc, n_inhibitory=n_inh,
                        mean_abs_excitatory=mean_exc,
                        mean_abs_inhibitory=mean_inh, ei_ratio=ratio)


@dataclass
class FiringStats:
    """Per-layer activity summary over a probe set."""

    layer_names: tuple[str, ...]
    mean_activity: np.ndarray       # per layer, averaged over units and probe
    active_fraction: np.ndarray     # per layer: units with mean activity > threshold
    threshold: float
    unit_means: list[np.ndarray]    # per layer: per-unit mean activity


def firing_stats(params: NetworkParams, probe, threshold: float = ACTIVE_THRESHOLD
                 ) -> FiringStats:
    """Mean unit activity over the probe, then per-layer active fractions.

    Covers every non-input layer (V1 .. retina')."""
    x = probe.as_matrix() if isinstance(probe, TrialSet) else np.asarray(probe)
    if len(x) == 0:
        raise ValueError("probe must be non-empty")
    acts = _forward_batch(params, x.reshape(len(x), -1).astype(np.float64))
    names = params.spec.layer_names()[1:]
    unit_means = [a.mean(axis=0) for a in acts[1:]]
    mean_activity = np.array([um.mean() for um in unit_means])
    active_fraction = np.array([(um > threshold).mean() for um in unit_means])
    return FiringStats(layer_names=names, mean_activity=mean_activity,
                       active_fraction=active_fraction, threshold=threshold,
                       unit_means=unit_means)


@dataclass
class DevelopmentSnapshot:
    step: int
    synapse: list[SynapseStats]                 # one per weight layer
    firing: FiringStats
    probe_pairs: list[tuple[np.ndarray, np.ndarray]]   # (input, reconstruction)
    probe_mse: float


def capture_snapshot(step: int, params: NetworkParams, probe,
                     threshold: float = ACTIVE_THRESHOLD,
                     n_pairs: int = 8) -> DevelopmentSnapshot:
    """Bundle synapse stats, firing stats and probe reconstructions.

    Pure reader: never mutates the model.
    """
    x = probe.as_matrix() if isinstance(probe, TrialSet) else np.asarray(probe)
    x = x.reshape(len(x), -1).astype(np.float64)
    acts = _forward_batch(params, x)
    recon = acts[-1]
    diff = recon - x
    probe_mse = float((diff * diff).mean())
    w = params.spec.retina_width
    pairs = [(x[k].reshape(w, w).copy(), recon[k].reshape(w, w).copy())
             for k in range(min(n_pairs, len(x)))]
    return DevelopmentSnapshot(
        step=int(step),
        synapse=[synapse_stats(m) for m in params.weights],
        firing=firing_stats(params, x, threshold),
        probe_pairs=pairs,
        probe_mse=probe_mse)


class DevelopmentTracker:
    """Training hook that captures a DevelopmentSnapshot at schedule steps."""

    def __init__(self, probe, threshold: float = ACTIVE_THRESHOLD):
        self.probe = probe
        self.threshold = threshold
        self.snapshots: list[DevelopmentSnapshot] = []

    def __call__(self, step: int, params: NetworkParams, log) -> None:
        self.snapshots.append(
            capture_snapshot(step, params, self.probe, self.threshold))

    def metric_series(self, layer: int = 0) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        """Tracked time series for changepoint scanning.

        Uses the chosen weight layer for synapse statistics and the encoding
        layer for the active fraction.
        """
        steps = np.array([s.step for s in self.snapshots])
        # encoding layer position within the non-input layer list
        mid = (len(self.snapshots[0].firing.layer_names) + 1) // 2 - 1
        series = {
            "probe_mse": np.array([s.probe_mse for s in self.snapshots]),
            "ei_ratio": np.array([s.synapse[layer].ei_ratio for s in self.snapshots]),
            "mean_abs_excitatory": np.array(
                [s.synapse[layer].mean_abs_excitatory for s in self.snapshots]),
            "mean_abs_inhibitory": np.array(
                [s.synapse[layer].mean_abs_inhibitory for s in self.snapshots]),
            "active_fraction": np.array(
                [s.firing.active_fraction[mid] for s in self.snapshots]),
        }
        return steps, series


def detect_ctp_candidates(steps: Sequence[int] | np.ndarray,
                          series: Mapping[str, np.ndarray] | np.ndarray,
                          sensitivity: float = 3.0,
                          window: int = 8) -> list[tuple[int, str]]:
    """Flag steps where a tracked series changes character.

    Two triggers per series: the smoothed slope changes sign, or one
    increment jumps by more than sensitivity times the trailing standard
    deviation of previous increments.  Candidates at the same step merge
    into one entry.  This is a reporting aid for finding candidate critical
    time points, not a calibrated changepoint test.
    """
    steps = np.asarray(steps)
    if len(steps) < 3:
        raise ValueError("need at least 3 snapshots to scan for changepoints")
    if isinstance(series, np.ndarray):
        series = {"series": series}

    triggers: dict[int, list[str]] = {}

    def add(step: int, text: str) -> None:
        triggers.setdefault(int(step), []).append(text)

    for name, values in series.items():
        v = np.asarray(values, dtype=np.float64)
        if len(v) != len(steps):
            raise ValueError(f"series {name!r} length mismatch")
        if not np.isfinite(v).all():
            continue                        # e.g. an all-positive ei_ratio
        d = np.diff(v)
        scale = max(np.abs(v).max(), 1.0)

        # smoothed slope sign change
        sm = np.convolve(d, [0.5, 0.5], mode="valid") if len(d) >= 2 else d
        eps = 1e-9 * scale
        for i in range(1, len(sm)):
            if sm[i - 1] > eps and sm[i] < -eps:
                add(steps[i + 1], f"{name}: slope turned negative")
            elif sm[i - 1] < -eps and sm[i] > eps:
                add(steps[i + 1], f"{name}: slope turned positive")

        # jump versus trailing increments; needs a few increments of history
        # before the trailing deviation means anything
        for i in range(1, len(d)):
            trailing = d[max(0, i - window):i]
            mu = trailing.mean()
            sd = trailing.std()
            if sd > 0:
                if len(trailing) < 4:
                    continue
                z = abs(d[i] - mu) / sd
                if z > sensitivity:
                    add(steps[i + 1], f"{name}: {z:.1f} sigma jump")
            elif len(trailing) >= 2 and abs(d[i] - mu) > 1e-9 * scale:
                add(steps[i + 1], f"{name}: jump from flat increments")

    return [(step, "; ".join(texts)) for step, texts in sorted(triggers.items())]


def write_development_csv(snapshots: Sequence[DevelopmentSnapshot], path) -> None:
    """One row per (snapshot, weight layer): the metric columns used in plots."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "layer", "n_exc", "n_inh", "mean_abs_exc",
                         "mean_abs_inh", "active_frac", "probe_mse"])
        for snap in snapshots:
            n_act = len(snap.firing.active_fraction)
            for l, syn in enumerate(snap.synapse):
                active = snap.firing.active_fraction[l] if l < n_act else ""
                writer.writerow([snap.step, l, syn.n_excitatory, syn.n_inhibitory,
                                 repr(syn.mean_abs_excitatory),
                                 repr(syn.mean_abs_inhibitory),
                                 repr(float(active)) if active != "" else "",
                                 repr(snap.probe_mse)])


def write_snapshot_pgm(snapshot: DevelopmentSnapshot, path) -> None:
    """Input/reconstruction pairs tiled side by side, one row per probe."""
    tiles = []
    for inp, rec in snapshot.probe_pairs:
        tiles.append(inp)
        tiles.append(rec)
    pgm.write_pgm(path, pgm.tile_grid(tiles, n_cols=2))
