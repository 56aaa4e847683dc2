"""Competing post-processors and a minimal logistic-regression scorer.

The reject-option band rule flips low-confidence predictions (|f| <= theta)
in favor of the disadvantaged group and is deterministic; the shift-inference
rule rescales probability scores by p(y)p(s)/p(y,s). Both fail by design on
score distributions concentrated near {-1, +1}: the band contains no points
and 0/1 probabilities are fixed points of any multiplicative correction. They
are here to demonstrate exactly that failure next to the randomized rule.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DataValidationError,
    DegenerateStatisticsError,
    EmptyDatasetError,
    MissingFieldError,
    UnsupportedCriterionError,
)
from .metrics import expected_accuracy, parity_gap

__all__ = [
    "RejectOptionRule",
    "fit_reject_option",
    "reject_option_predict",
    "reject_option_predict_batch",
    "ShiftInferenceRule",
    "fit_shift_inference",
    "apply_shift_inference",
    "LinearScorer",
    "TabularEncoder",
    "fit_linear_scorer",
    "linear_scores",
]

DEFAULT_THETA_GRID = tuple(round(i / 100.0, 2) for i in range(1, 101))


@dataclass(frozen=True)
class RejectOptionRule:
    """Deterministic band rule: inside |f| <= theta predict 1 for the
    disadvantaged group and 0 for the advantaged one, outside predict f > 0."""

    theta: float
    advantaged_group: int
    disadvantaged_group: int
    feasible: bool = True
    validation_gap: float = float("nan")
    validation_accuracy: float = float("nan")


def reject_option_predict(rule: RejectOptionRule, score: float, group: int) -> int:
    if abs(score) <= rule.theta:
        return 1 if group == rule.disadvantaged_group else 0
    return 1 if score > 0 else 0


def reject_option_predict_batch(rule: RejectOptionRule, scores, groups) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    groups = np.asarray(groups, dtype=np.int64)
    outside = np.where(scores > 0, 1, 0)
    inside = np.where(groups == rule.disadvantaged_group, 1, 0)
    return np.where(np.abs(scores) <= rule.theta, inside, outside).astype(np.int64)


def fit_reject_option(
    train_dataset,
    validation_dataset,
    epsilon_target: float,
    theta_grid=DEFAULT_THETA_GRID,
) -> RejectOptionRule:
    """Pick the band width on validation: among widths meeting the gap target,
    the most accurate (ties to the smallest); if none qualifies, the
    gap-minimizing width with the feasible flag cleared. Two groups only."""
    if train_dataset.group_count != 2:
        raise UnsupportedCriterionError(
            f"the band rule supports exactly 2 groups, got {train_dataset.group_count}"
        )
    if len(train_dataset) == 0 or len(validation_dataset) == 0:
        raise EmptyDatasetError("band rule needs nonempty train and validation sets")
    if validation_dataset.labels is None:
        raise MissingFieldError("band-rule tuning needs labels on the validation set")

    base = (train_dataset.scores > 0).astype(np.float64)
    means = [base[train_dataset.groups == k].mean() for k in (1, 2)]
    advantaged = 1 if means[0] >= means[1] else 2
    disadvantaged = 2 if advantaged == 1 else 1

    best_feasible = None   # (accuracy, -theta) max
    best_any = None        # (gap, theta) min
    for theta in theta_grid:
        rule = RejectOptionRule(theta=theta, advantaged_group=advantaged,
                                disadvantaged_group=disadvantaged)
        preds = reject_option_predict_batch(rule, validation_dataset.scores, validation_dataset.groups)
        gap = parity_gap(preds, validation_dataset.groups, 2)
        acc = expected_accuracy(preds, validation_dataset.labels)
        if gap <= epsilon_target and (best_feasible is None or acc > best_feasible[0] + 1e-12):
            best_feasible = (acc, theta, gap)
        if best_any is None or gap < best_any[0] - 1e-12:
            best_any = (gap, theta, acc)
    if best_feasible is not None:
        acc, theta, gap = best_feasible
        return RejectOptionRule(theta, advantaged, disadvantaged, True, gap, acc)
    gap, theta, acc = best_any
    return RejectOptionRule(theta, advantaged, disadvantaged, False, gap, acc)


@dataclass(frozen=True)
class ShiftInferenceRule:
    """Multiplicative correction factors p(y)p(s)/p(y,s), one per (y, group) cell."""

    factors: dict[tuple[int, int], float]


def fit_shift_inference(labels, groups) -> ShiftInferenceRule:
    labels = np.asarray(labels, dtype=np.int64)
    groups = np.asarray(groups, dtype=np.int64)
    if labels.size == 0:
        raise EmptyDatasetError("cannot estimate shift statistics from no data")
    n = labels.size
    factors = {}
    for k in np.unique(groups):
        p_s = float(np.mean(groups == k))
        for y in (0, 1):
            p_y = float(np.mean(labels == y))
            p_joint = float(np.mean((labels == y) & (groups == k)))
            if p_joint == 0.0:
                raise DegenerateStatisticsError(
                    f"joint cell (y={y}, group={k}) has zero mass; correction undefined"
                )
            factors[(y, int(k))] = p_y * p_s / p_joint
    return ShiftInferenceRule(factors=factors)


def apply_shift_inference(rule: ShiftInferenceRule, probabilities, groups) -> np.ndarray:
    """Rescale p(y=1|x) cellwise and renormalize; 0 and 1 are fixed points."""
    p = np.asarray(probabilities, dtype=np.float64)
    groups = np.asarray(groups, dtype=np.int64)
    if (p < 0).any() or (p > 1).any():
        raise DataValidationError("probabilities must lie in [0, 1]")
    c1 = np.array([rule.factors[(1, int(k))] for k in groups])
    c0 = np.array([rule.factors[(0, int(k))] for k in groups])
    u1 = p * c1
    u0 = (1.0 - p) * c0
    return u1 / (u0 + u1)


class TabularEncoder:
    """One-hot categorical encoding plus z-scored numerics, fit on training data."""

    def __init__(self):
        self.numeric_stats = {}
        self.categories = {}

    def fit(self, table) -> "TabularEncoder":
        for name, values in sorted(table.numeric.items()):
            mean = float(values.mean())
            std = float(values.std())
            self.numeric_stats[name] = (mean, std if std > 0 else 1.0)
        for name, values in sorted(table.categorical.items()):
            self.categories[name] = tuple(sorted(set(values.tolist())))
        return self

    def transform(self, table) -> np.ndarray:
        cols = []
        for name, (mean, std) in self.numeric_stats.items():
            cols.append((table.numeric[name] - mean) / std)
        for name, cats in self.categories.items():
            values = table.categorical[name]
            for cat in cats:
                cols.append((values == cat).astype(np.float64))
        return np.column_stack(cols)


@dataclass(frozen=True)
class LinearScorer:
    """Logistic model emitting scores 2*sigmoid(w.x + b) - 1 in [-1, 1]."""

    weights: np.ndarray
    bias: float
    inverse_regularization: float


def _sigmoid(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def fit_linear_scorer(features, labels, inverse_regularization: float = 1.0,
                      iterations: int = 800) -> LinearScorer:
    """Full-batch gradient descent on the L2-regularized logistic loss with a
    curvature-matched step size. Deterministic (zero init)."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if not np.isfinite(x).all():
        raise DataValidationError("features contain non-finite values")
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DataValidationError("features must be (n, d) with one label per row")
    n, d = x.shape
    reg = 1.0 / (inverse_regularization * n)

    # largest Hessian eigenvalue is at most sigma_max(X)^2 / (4n) + reg
    v = np.ones(d) / np.sqrt(d)
    for _ in range(50):
        v = x.T @ (x @ v)
        v /= np.linalg.norm(v)
    sigma_sq = float(v @ (x.T @ (x @ v)))
    step = 1.0 / (sigma_sq / (4.0 * n) + reg + 1e-12)

    w = np.zeros(d)
    b = 0.0
    for _ in range(iterations):
        p = _sigmoid(x @ w + b)
        residual = p - y
        grad_w = x.T @ residual / n + reg * w
        grad_b = float(residual.mean())
        w -= step * grad_w
        b -= step * grad_b
    return LinearScorer(weights=w, bias=b, inverse_regularization=inverse_regularization)


def linear_scores(scorer: LinearScorer, features) -> np.ndarray:
    """Scores in [-1, 1], directly consumable by the post-processor."""
    x = np.asarray(features, dtype=np.float64)
    return 2.0 * _sigmoid(x @ scorer.weights + scorer.bias) - 1.0


C_GRID = tuple(10.0 ** e for e in range(-4, 5))


def select_inverse_regularization(features, labels, grid=C_GRID, folds=10, seed=0,
                                  iterations=300) -> float:
    """Cross-validated choice of C on the log grid; ties go to the smaller
    value. The default single mid value C=1 is usually adequate, so callers
    opt into this explicitly."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n = x.shape[0]
    if n < folds:
        raise DataValidationError(f"need at least {folds} rows for {folds}-fold selection")
    perm = np.random.default_rng(seed).permutation(n)
    fold_slices = np.array_split(perm, folds)
    best_c = None
    best_acc = -1.0
    for c in grid:
        accs = []
        for f in range(folds):
            held = fold_slices[f]
            rest = np.concatenate([fold_slices[g] for g in range(folds) if g != f])
            scorer = fit_linear_scorer(x[rest], y[rest], inverse_regularization=c,
                                       iterations=iterations)
            preds = linear_scores(scorer, x[held]) > 0
            accs.append(float(np.mean(preds == y[held])))
        mean_acc = float(np.mean(accs))
        if mean_acc > best_acc + 1e-12:
            best_acc, best_c = mean_acc, c
    return best_c
