"""What the encoding neurons represent: per-neuron property correlations,
neuron categorization, linear property decoders, and the digit identity
readout with perturbation robustness."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import special

from .dataset import (DEFAULT_RANGES, DEFAULT_RETINA_WIDTH, DigitCorpus,
                      PROPERTY_TAGS, PropertyRanges, StimulusProps, TrialSet,
                      render_stimulus)
from .errors import CompletenessError, StratificationError
from .network import ENCODING_DIM, NetworkParams, _forward_batch, encode

ALPHA = 0.01            # significance level used throughout the analyses


@dataclass
class CorrelationResult:
    """Pearson correlation of one unit's activity against a property sweep."""

    neuron_id: int
    layer: str
    property: str
    r: float
    p_value: float
    n: int
    degenerate: bool = False        # zero-variance activity, defined r=0 p=1


def pearson_with_p(x: np.ndarray, y: np.ndarray) -> tuple[float, float, bool]:
    """Pearson r and two-sided p from the t statistic with n-2 dof.

    Zero variance on either side is reported as the degenerate (0, 1) pair
    rather than an error.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 points for a correlation")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt(xc @ xc)
    sy = np.sqrt(yc @ yc)
    if sx == 0.0 or sy == 0.0:
        return 0.0, 1.0, True
    r = float(np.clip((xc @ yc) / (sx * sy), -1.0, 1.0))
    if abs(r) == 1.0:
        return r, 0.0, False
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    p = float(2.0 * special.stdtr(n - 2, -abs(t)))
    return r, p, False


def correlate(trials: TrialSet, params: NetworkParams,
              layer: str = "encoding") -> list[CorrelationResult]:
    """Correlate every unit of one layer with the swept property value.

    layer may be 'encoding' or any layer name from the spec (e.g. "V1").
    """
    if trials.swept_property == "none":
        raise ValueError("trial set must sweep a property")
    if len(trials) < 3:
        raise ValueError("need at least 3 trials")
    x = trials.as_matrix()
    acts = _forward_batch(params, x)
    names = params.spec.layer_names()
    layer_name = names[params.spec.encoding_index] if layer == "encoding" else layer
    if layer_name not in names:
        raise ValueError(f"unknown layer {layer!r}; have {names}")
    activities = acts[names.index(layer_name)]
    values = trials.property_values
    results = []
    for unit in range(activities.shape[1]):
        r, p, degenerate = pearson_with_p(activities[:, unit], values)
        results.append(CorrelationResult(
            neuron_id=unit, layer=layer_name, property=trials.swept_property,
            r=r, p_value=p, n=len(trials), degenerate=degenerate))
    return results


def top_neuron(results: Sequence[CorrelationResult], property_tag: str) -> int:
    """The unit most strongly tied to a property: highest |r|, ties by lower p.

    This is how the analyses select role neurons (the 'top x neuron' etc.)
    instead of relying on run-specific unit indices.
    """
    pool = [c for c in results if c.property == property_tag]
    if not pool:
        raise ValueError(f"no results for property {property_tag!r}")
    best = max(pool, key=lambda c: (abs(c.r), -c.p_value))
    return best.neuron_id


@dataclass
class NeuronCategoryMap:
    """Per-neuron significant property subsets; overlaps are allowed."""

    membership: dict[int, frozenset[str]]       # neuron -> significant props
    alpha: float

    def neurons_for(self, property_tag: str) -> list[int]:
        return sorted(n for n, props in self.membership.items()
                      if property_tag in props)

    def non_specific(self) -> list[int]:
        return sorted(n for n, props in self.membership.items() if not props)

    def fractions(self) -> dict[str, float]:
        n_total = len(self.membership)
        out = {"non_specific": len(self.non_specific()) / n_total}
        for tag in PROPERTY_TAGS:
            out[tag] = len(self.neurons_for(tag)) / n_total
        return out


def categorize(results: Sequence[CorrelationResult],
               alpha: float = ALPHA) -> NeuronCategoryMap:
    """Classify the 32 encoding neurons by which properties they track."""
    table: dict[tuple[int, str], float] = {}
    for c in results:
        table[(c.neuron_id, c.property)] = c.p_value
    missing = [(n, tag) for n in range(ENCODING_DIM) for tag in PROPERTY_TAGS
               if (n, tag) not in table]
    if missing:
        raise CompletenessError(
            f"missing correlation results, first: neuron {missing[0][0]} "
            f"property {missing[0][1]!r}")
    membership = {
        n: frozenset(tag for tag in PROPERTY_TAGS if table[(n, tag)] < alpha)
        for n in range(ENCODING_DIM)}
    return NeuronCategoryMap(membership=membership, alpha=alpha)


# ---------------------------------------------------------------------------
# Linear property decoder
# ---------------------------------------------------------------------------

@dataclass
class LinearDecoder:
    weights: np.ndarray         # (n_features,)
    intercept: float
    target: str = ""

    def predict(self, encodings: np.ndarray) -> np.ndarray:
        return np.asarray(encodings) @ self.weights + self.intercept


@dataclass
class DecoderFit:
    decoder: LinearDecoder
    r_squared: float
    mse: float
    condition_number: float
    rank_deficient: bool


def _train_test_split(n: int, split_seed: int, test_fraction: float = 0.2
                      ) -> tuple[np.ndarray, np.ndarray]:
    order = np.random.default_rng(split_seed).permutation(n)
    n_test = max(1, int(round(n * test_fraction)))
    return order[n_test:], order[:n_test]


def fit_linear_decoder(encodings: np.ndarray, targets: np.ndarray,
                       split_seed: int = 0, target_tag: str = "") -> DecoderFit:
    """Ordinary least squares with intercept, scored on a held-out 20%.

    Rank-deficient designs fall back to the minimum-norm solution (flagged,
    with the condition number reported).  A constant test target defines
    R^2 = 0 by convention.
    """
    X = np.asarray(encodings, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    if len(X) != len(y):
        raise ValueError("encodings and targets disagree in length")
    if len(X) < 50:
        raise ValueError("need at least 50 samples to fit a decoder")
    train, test = _train_test_split(len(X), split_seed)

    A = np.column_stack([X[train], np.ones(len(train))])
    coef, _, rank, sv = np.linalg.lstsq(A, y[train], rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    decoder = LinearDecoder(weights=coef[:-1], intercept=float(coef[-1]),
                            target=target_tag)

    pred = decoder.predict(X[test])
    resid = y[test] - pred
    mse = float(resid @ resid / len(test))
    ss_tot = float(((y[test] - y[test].mean()) ** 2).sum())
    r2 = 0.0 if ss_tot == 0.0 else 1.0 - float(resid @ resid) / ss_tot
    return DecoderFit(decoder=decoder, r_squared=r2, mse=mse,
                      condition_number=cond,
                      rank_deficient=rank < A.shape[1])


# ---------------------------------------------------------------------------
# Identity readout (multinomial logistic regression)
# ---------------------------------------------------------------------------

N_CLASSES = 10


@dataclass
class IdentityClassifier:
    weights: np.ndarray         # (10, n_features)
    intercepts: np.ndarray      # (10,)

    def scores(self, encodings: np.ndarray) -> np.ndarray:
        return np.asarray(encodings) @ self.weights.T + self.intercepts

    def predict_proba(self, encodings: np.ndarray) -> np.ndarray:
        z = self.scores(encodings)
        z -= z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, encodings: np.ndarray) -> np.ndarray:
        return self.scores(encodings).argmax(axis=1)


def _stratified_split(labels: np.ndarray, split_seed: int,
                      test_fraction: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(split_seed)
    train_idx, test_idx = [], []
    for cls in range(N_CLASSES):
        pool = np.flatnonzero(labels == cls)
        if len(pool) == 0:
            raise StratificationError(f"class {cls} absent from the dataset")
        pool = rng.permutation(pool)
        n_test = int(round(len(pool) * test_fraction))
        n_test = min(n_test, len(pool) - 1)     # keep every class in training
        test_idx.append(pool[:n_test])
        train_idx.append(pool[n_test:])
    return np.concatenate(train_idx), np.concatenate(test_idx)


def fit_identity_classifier(encodings: np.ndarray, labels: np.ndarray,
                            split_seed: int = 0, l2: float = 1e-4,
                            max_iter: int = 10000, grad_tol: float = 1e-6
                            ) -> tuple[IdentityClassifier, float]:
    """Multinomial logistic regression by full-batch gradient descent.

    Runs until the gradient norm drops below grad_tol or max_iter updates,
    with an L2 penalty on the weights; reports accuracy on a held-out
    stratified 20% split.
    """
    X = np.asarray(encodings, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if len(X) != len(y):
        raise ValueError("encodings and labels disagree in length")
    if len(X) < 200:
        raise ValueError("need at least 200 samples for the identity readout")
    train, test = _stratified_split(y, split_seed)

    Xt, yt = X[train], y[train]
    n, d = Xt.shape
    onehot = np.zeros((n, N_CLASSES))
    onehot[np.arange(n), yt] = 1.0

    # fixed step from the softmax-Hessian Lipschitz bound 0.5*lmax(X~'X~)/n + l2
    Xa = np.column_stack([Xt, np.ones(n)])
    lmax = float(np.linalg.eigvalsh(Xa.T @ Xa / n)[-1])
    lr = 1.0 / (0.5 * lmax + l2)

    W = np.zeros((N_CLASSES, d))
    b = np.zeros(N_CLASSES)
    for _ in range(max_iter):
        z = Xt @ W.T + b
        z -= z.max(axis=1, keepdims=True)
        e = np.exp(z)
        probs = e / e.sum(axis=1, keepdims=True)
        err = probs - onehot
        g_w = err.T @ Xt / n + l2 * W
        g_b = err.mean(axis=0)
        gnorm = np.sqrt((g_w * g_w).sum() + g_b @ g_b)
        if gnorm < grad_tol:
            break
        W -= lr * g_w
        b -= lr * g_b

    clf = IdentityClassifier(weights=W, intercepts=b)
    accuracy = float((clf.predict(X[test]) == y[test]).mean())
    return clf, accuracy


def perturbation_robustness(params: NetworkParams, classifier: IdentityClassifier,
                            corpus: DigitCorpus,
                            base_props: StimulusProps = StimulusProps(),
                            perturb: Sequence[str] = PROPERTY_TAGS,
                            n_eval: int = 200, seed: int = 0,
                            retina_width: int = DEFAULT_RETINA_WIDTH,
                            ranges: PropertyRanges = DEFAULT_RANGES
                            ) -> dict[str, float]:
    """Readout accuracy with one property pushed to its range extreme.

    Renders n_eval corpus instances at base_props (the 'none' condition),
    then re-renders with each perturbed property set to alternating ends of
    its range.  Returns accuracy per condition, 'none' included.
    """
    for tag in perturb:
        if tag not in PROPERTY_TAGS:
            raise ValueError(f"unknown property tag {tag!r}")
    rng = np.random.default_rng(seed)
    idx = rng.integers(len(corpus), size=n_eval)
    labels = corpus.labels[idx]

    def accuracy_for(prop_fn) -> float:
        batch = np.stack([
            render_stimulus(corpus.images[i], prop_fn(k), retina_width, ranges).flat()
            for k, i in enumerate(idx)])
        pred = classifier.predict(encode(params, batch))
        return float((pred == labels).mean())

    out = {"none": accuracy_for(lambda k: base_props)}
    for tag in perturb:
        lo, hi = ranges.interval(tag)

        def perturbed(k, tag=tag, lo=lo, hi=hi):
            return base_props.with_value(tag, hi if k % 2 == 0 else lo)

        out[tag] = accuracy_for(perturbed)
    return out


@dataclass
class IdentityCorrelation:
    """Per-neuron, per-digit point-biserial correlations with significance."""

    r: np.ndarray               # (n_units, 10)
    p: np.ndarray               # (n_units, 10)
    significant: np.ndarray     # bool mask at the chosen alpha
    alpha: float


def identity_correlation_matrix(encodings: np.ndarray, labels: np.ndarray,
                                alpha: float = ALPHA) -> IdentityCorrelation:
    """Correlate each unit's activity with one-vs-rest digit indicators."""
    E = np.asarray(encodings, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    for cls in range(N_CLASSES):
        if not (y == cls).any():
            raise StratificationError(f"class {cls} absent from the dataset")
    n_units = E.shape[1]
    r = np.zeros((n_units, N_CLASSES))
    p = np.ones((n_units, N_CLASSES))
    for cls in range(N_CLASSES):
        indicator = (y == cls).astype(np.float64)
        for unit in range(n_units):
            r[unit, cls], p[unit, cls], _ = pearson_with_p(E[:, unit], indicator)
    return IdentityCorrelation(r=r, p=p, significant=p < alpha, alpha=alpha)


# ---------------------------------------------------------------------------
# CSV reports
# ---------------------------------------------------------------------------

def write_correlations_csv(results: Sequence[CorrelationResult], path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["layer", "neuron", "property", "r", "p", "n", "degenerate"])
        for c in results:
            writer.writerow([c.layer, c.neuron_id, c.property, repr(c.r),
                             repr(c.p_value), c.n, int(c.degenerate)])


def write_categories_csv(categories: NeuronCategoryMap, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["neuron", "significant_properties"])
        for neuron in sorted(categories.membership):
            props = "+".join(sorted(categories.membership[neuron])) or "non_specific"
            writer.writerow([neuron, props])
        writer.writerow([])
        writer.writerow(["class", "fraction"])
        for name, frac in categories.fractions().items():
            writer.writerow([name, repr(frac)])


def write_decoder_csv(fits: Mapping[str, DecoderFit], path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["property", "r_squared", "mse", "condition_number",
                         "rank_deficient"])
        for tag, fit in fits.items():
            writer.writerow([tag, repr(fit.r_squared), repr(fit.mse),
                             repr(fit.condition_number), int(fit.rank_deficient)])
