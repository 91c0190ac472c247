"""Sequential training phases on novel and known stimuli, with evaluation
tracking, phase-boundary weight snapshots, and plasticity comparison."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from . import pgm
from .errors import CheckpointSpecError, TrainingDiverged
from .network import (NetworkParams, TrainConfig, _batch_loss,
                      _forward_batch, train)


@dataclass(frozen=True)
class CurriculumPhase:
    """One training phase: a named stimulus source and a step budget."""

    name: str
    source: str                     # key into the samplers mapping
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("phase must run at least one step")


@dataclass
class CurriculumLog:
    """Evaluation trace across phases plus phase-boundary snapshots."""

    steps: list[int] = field(default_factory=list)
    phases: list[str] = field(default_factory=list)
    eval_mse: dict[str, list[float]] = field(default_factory=dict)
    phase_boundaries: list[tuple[str, int]] = field(default_factory=list)
    snapshots: dict[int, NetworkParams] = field(default_factory=dict)

    def append(self, step: int, phase: str, mses: Mapping[str, float]) -> None:
        if self.steps and step <= self.steps[-1]:
            raise ValueError("evaluation steps must be strictly increasing")
        self.steps.append(int(step))
        self.phases.append(phase)
        for name, value in mses.items():
            self.eval_mse.setdefault(name, []).append(float(value))

    def series(self, eval_name: str) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.steps), np.asarray(self.eval_mse[eval_name])

    def phase_steps(self, phase: str) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.phases) == phase)


def _eval_sets_matrix(eval_sets: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    out = {}
    for name, stimuli in eval_sets.items():
        x = stimuli.as_matrix() if hasattr(stimuli, "as_matrix") else np.asarray(stimuli)
        out[name] = x.reshape(len(x), -1).astype(np.float64)
    return out


def run_curriculum(params: NetworkParams, phases: Sequence[CurriculumPhase],
                   samplers: Mapping[str, Callable],
                   eval_sets: Mapping[str, np.ndarray],
                   eval_every: int = 100, seed: int = 0,
                   batch_size: int = 32, learning_rate: float = 1e-4,
                   optimizer: str = "adam"
                   ) -> tuple[NetworkParams, CurriculumLog]:
    """Run phases in sequence with the standard training loop.

    Every eval_every global steps (and at every phase boundary) each eval
    set's reconstruction MSE is measured without touching the weights; full
    parameter snapshots are stored at every phase boundary, the start
    included.  Optimizer state starts fresh each phase, matching a resume
    from a stored checkpoint.  If training diverges, the exception carries
    the log accumulated so far and the last boundary snapshot.
    """
    log = CurriculumLog()
    current = params.copy()
    evals = _eval_sets_matrix(eval_sets)

    def measure(step: int, phase_name: str, p: NetworkParams) -> None:
        mses = {name: _batch_loss(_forward_batch(p, x), x)
                for name, x in evals.items()}
        log.append(step, phase_name, mses)

    log.snapshots[0] = current.copy()
    log.phase_boundaries.append(("start", 0))
    if phases:
        measure(0, phases[0].name, current)

    offset = 0
    for k, phase in enumerate(phases):
        sampler = samplers[phase.source]
        schedule = sorted({s for s in range(1, phase.n_steps + 1)
                           if (offset + s) % eval_every == 0} | {phase.n_steps})
        config = TrainConfig(total_steps=phase.n_steps, batch_size=batch_size,
                             learning_rate=learning_rate, optimizer=optimizer,
                             seed=seed + k, snapshot_schedule=tuple(schedule))

        def hook(step, snapshot, _log, phase_name=phase.name, base=offset):
            measure(base + step, phase_name, snapshot)

        try:
            current, _ = train(current, config, sampler, hooks=(hook,))
        except TrainingDiverged as exc:
            raise TrainingDiverged(offset + exc.step,
                                   last_good_params=log.snapshots[max(log.snapshots)],
                                   log=log) from exc
        offset += phase.n_steps
        log.snapshots[offset] = current.copy()
        log.phase_boundaries.append((phase.name, offset))
    return current, log


# ---------------------------------------------------------------------------
# Plasticity comparison
# ---------------------------------------------------------------------------

@dataclass
class PlasticityReport:
    """Per-synapse |weight change| of two phases on one layer, compared."""

    layer: int
    abs_delta_a: np.ndarray
    abs_delta_b: np.ndarray
    mean_ratio: float               # mean |dW_A| / mean |dW_B|; may be +inf
    t_statistic: float
    p_value: float
    degenerate: bool                # phase B saw no change at all


def plasticity_compare(before_a: NetworkParams, after_a: NetworkParams,
                       before_b: NetworkParams, after_b: NetworkParams,
                       layer: int = 0) -> PlasticityReport:
    """Welch-test the per-synapse |delta w| of phase A against phase B.

    All four checkpoints must share one layer layout; the default layer 0 is
    the retina-to-V1 weight matrix.
    """
    specs = {p.spec.widths for p in (before_a, after_a, before_b, after_b)}
    if len(specs) != 1:
        raise CheckpointSpecError(f"checkpoints disagree on layer widths: {specs}")
    if not 0 <= layer < before_a.spec.n_weight_layers:
        raise ValueError(f"layer must lie in 0..{before_a.spec.n_weight_layers - 1}")

    da = np.abs(after_a.weights[layer] - before_a.weights[layer]).reshape(-1)
    db = np.abs(after_b.weights[layer] - before_b.weights[layer]).reshape(-1)
    mean_b = db.mean()
    if mean_b == 0.0:
        ratio = float("inf") if da.mean() > 0 else float("nan")
        return PlasticityReport(layer=layer, abs_delta_a=da, abs_delta_b=db,
                                mean_ratio=ratio, t_statistic=float("nan"),
                                p_value=float("nan"), degenerate=True)
    ratio = float(da.mean() / mean_b)
    t_stat, p_value = stats.ttest_ind(da, db, equal_var=False)
    return PlasticityReport(layer=layer, abs_delta_a=da, abs_delta_b=db,
                            mean_ratio=ratio, t_statistic=float(t_stat),
                            p_value=float(p_value), degenerate=False)


# ---------------------------------------------------------------------------
# Forgetting summary
# ---------------------------------------------------------------------------

@dataclass
class EvalSummary:
    eval_set: str
    boundary_mse: list[tuple[int, float]]   # MSE at each phase boundary
    min_mse: float
    min_step: int                            # peak performance step
    final_mse: float
    deltas: dict[int, float]                 # boundary step -> final - boundary


def forgetting_summary(log: CurriculumLog) -> dict[str, EvalSummary]:
    """Peak/boundary/final reconstruction statistics per eval set."""
    if len(log.phase_boundaries) < 3:        # start plus at least two phases
        raise ValueError("log must span at least two phases")
    out = {}
    steps = np.asarray(log.steps)
    for name in log.eval_mse:
        mse = np.asarray(log.eval_mse[name])
        boundary = []
        for _, bstep in log.phase_boundaries:
            pos = int(np.argmin(np.abs(steps - bstep)))
            boundary.append((int(steps[pos]), float(mse[pos])))
        best = int(np.argmin(mse))
        final = float(mse[-1])
        out[name] = EvalSummary(
            eval_set=name, boundary_mse=boundary,
            min_mse=float(mse[best]), min_step=int(steps[best]),
            final_mse=final,
            deltas={bs: final - bm for bs, bm in boundary})
    return out


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def write_curriculum_csv(log: CurriculumLog, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "phase", "eval_set", "mse"])
        for i, step in enumerate(log.steps):
            for name in sorted(log.eval_mse):
                writer.writerow([step, log.phases[i], name,
                                 repr(log.eval_mse[name][i])])


def write_plasticity_csv(report: PlasticityReport, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["layer", "mean_abs_delta_a", "mean_abs_delta_b",
                         "mean_ratio", "t_statistic", "p_value", "degenerate"])
        writer.writerow([report.layer,
                         repr(float(report.abs_delta_a.mean())),
                         repr(float(report.abs_delta_b.mean())),
                         repr(report.mean_ratio), repr(report.t_statistic),
                         repr(report.p_value), int(report.degenerate)])


def write_delta_heatmap_pgm(before: NetworkParams, after: NetworkParams,
                            path, layer: int = 0, n_units: int = 64) -> None:
    """|weight delta| maps for the layer's first n_units, tiled as retina maps."""
    delta = np.abs(after.weights[layer] - before.weights[layer])
    w = before.spec.retina_width
    n_units = min(n_units, delta.shape[1])
    if delta.shape[0] == w * w:
        tiles = [pgm.heatmap(delta[:, u].reshape(w, w)) for u in range(n_units)]
    else:
        tiles = [pgm.heatmap(delta[:, u][None, :]) for u in range(n_units)]
    pgm.write_pgm(path, pgm.tile_grid(tiles, n_cols=int(np.ceil(np.sqrt(n_units)))))
