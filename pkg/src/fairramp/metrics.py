"""Bias and accuracy measurement, plus the two theory-side diagnostics:
the finite-sample bound on held-out parity and the witness-partition lower
bound showing a nonconstant deterministic predictor cannot be uncorrelated
with a sensitive attribute across every grouping of the instance space.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import RampModel, predict_batch
from .errors import (
    EmptyGroupError,
    InvalidParameterError,
    MismatchError,
    MissingFieldError,
)

__all__ = [
    "MetricsReport",
    "parity_gap",
    "group_means",
    "conditional_covariance",
    "group_covariances",
    "expected_accuracy",
    "parity_generalization_bound",
    "WitnessResult",
    "covariance_witness",
    "evaluate_model",
]


@dataclass(frozen=True)
class MetricsReport:
    group_means: tuple[float, ...]
    parity_gap: float
    covariances: tuple[float, ...] | None
    expected_accuracy: float | None
    n_per_group: tuple[int, ...]

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "group_means": list(self.group_means),
                "parity_gap": self.parity_gap,
                "covariances": None if self.covariances is None else list(self.covariances),
                "expected_accuracy": self.expected_accuracy,
                "n_per_group": list(self.n_per_group),
            }
        )

    @classmethod
    def from_json_line(cls, line: str) -> "MetricsReport":
        d = json.loads(line)
        return cls(
            group_means=tuple(d["group_means"]),
            parity_gap=d["parity_gap"],
            covariances=None if d["covariances"] is None else tuple(d["covariances"]),
            expected_accuracy=d["expected_accuracy"],
            n_per_group=tuple(d["n_per_group"]),
        )


def _stable_mean(values: np.ndarray) -> float:
    """Mean with a canonical summation order, so metrics are bit-identical
    under any permutation of the examples."""
    return float(np.sort(values).sum() / values.size)


def group_means(predictions, groups, group_count: int | None = None) -> np.ndarray:
    """Mean predicted probability per group; every group must be nonempty."""
    h = np.asarray(predictions, dtype=np.float64)
    groups = np.asarray(groups, dtype=np.int64)
    if h.size == 0:
        raise EmptyGroupError("no predictions to aggregate")
    if group_count is None:
        group_count = int(groups.max())
    out = np.zeros(group_count)
    for k in range(1, group_count + 1):
        mask = groups == k
        if not mask.any():
            raise EmptyGroupError(f"group {k} of {group_count} has no examples")
        out[k - 1] = _stable_mean(h[mask])
    return out


def parity_gap(predictions, groups, group_count: int | None = None) -> float:
    """Max minus min of per-group mean predictions."""
    means = group_means(predictions, groups, group_count)
    return float(means.max() - means.min())


def conditional_covariance(predictions, sensitive_bits) -> float:
    """Empirical covariance E[h*s] - E[h]E[s] over one group's examples."""
    h = np.asarray(predictions, dtype=np.float64)
    bits = sensitive_bits
    if bits is None:
        raise MissingFieldError("sensitive bits are required for the covariance metric")
    bits = np.asarray(bits, dtype=np.float64)
    return _stable_mean(h * bits) - _stable_mean(h) * _stable_mean(bits)


def group_covariances(predictions, sensitive_bits, groups, group_count: int | None = None) -> np.ndarray:
    h = np.asarray(predictions, dtype=np.float64)
    groups = np.asarray(groups, dtype=np.int64)
    if sensitive_bits is None:
        raise MissingFieldError("sensitive bits are required for the covariance metric")
    bits = np.asarray(sensitive_bits, dtype=np.float64)
    if group_count is None:
        group_count = int(groups.max())
    out = np.zeros(group_count)
    for k in range(1, group_count + 1):
        mask = groups == k
        if not mask.any():
            raise EmptyGroupError(f"group {k} of {group_count} has no examples")
        out[k - 1] = conditional_covariance(h[mask], bits[mask])
    return out


def expected_accuracy(predictions, labels) -> float:
    """Mean of h*y + (1-h)*(1-y): the accuracy of the randomized rule in expectation."""
    if labels is None:
        raise MissingFieldError("labels are required for the accuracy metric")
    h = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    return _stable_mean(h * y + (1.0 - h) * (1.0 - y))


def parity_generalization_bound(n: int, group_count: int, delta: float, epsilon: float) -> float:
    """High-probability bound on the held-out parity gap of a rule trained to
    epsilon parity on n fresh examples:

        epsilon + 8 * sqrt(2 * ln(e*n/2) / n) + 2 * sqrt(ln(2K/delta) / n)
    """
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    if group_count < 1:
        raise InvalidParameterError(f"group_count must be >= 1, got {group_count}")
    if not (0.0 < delta < 1.0):
        raise InvalidParameterError(f"delta must lie in (0, 1), got {delta}")
    if epsilon < 0:
        raise InvalidParameterError(f"epsilon must be >= 0, got {epsilon}")
    return (
        epsilon
        + 8.0 * math.sqrt(2.0 * math.log(math.e * n / 2.0) / n)
        + 2.0 * math.sqrt(math.log(2.0 * group_count / delta) / n)
    )


@dataclass(frozen=True)
class WitnessResult:
    in_witness: np.ndarray   # membership mask of the witness partition cell
    lhs: float               # weighted |covariance| over the cell and its complement
    rhs: float               # (1/2) E|rate - mean rate| * min(E f, 1 - E f)
    beta: float              # reporting split point (the cell itself is beta-free)


def _weighted_cov(f: np.ndarray, g: np.ndarray, w: np.ndarray) -> float:
    total = w.sum()
    if total <= 0.0:
        return 0.0
    p = w / total
    return float(np.sum(p * f * g) - np.sum(p * f) * np.sum(p * g))


def covariance_witness(predictions, sensitive_rates, weights) -> WitnessResult:
    """Build the witness partition W = {(rate - mean_rate)(f - beta) > 0} for a
    binary predictor f and check the lower bound

        p(W)|cov(f, rate | W)| + p(W~)|cov(f, rate | W~)|
            >= (1/2) * E|rate - mean_rate| * min(E f, 1 - E f).

    Because f is binary, W does not depend on beta in (0, 1). The inequality
    is a theorem; its violation (beyond 1e-12) indicates an implementation
    bug, so it is asserted here.
    """
    f = np.asarray(predictions, dtype=np.float64)
    rates = np.asarray(sensitive_rates, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if not np.all((f == 0.0) | (f == 1.0)):
        raise InvalidParameterError("predictions must be binary 0/1")
    if (rates < 0).any() or (rates > 1).any():
        raise InvalidParameterError("sensitive rates must lie in [0, 1]")
    if (w < 0).any() or not math.isclose(float(w.sum()), 1.0, rel_tol=0, abs_tol=1e-9):
        raise InvalidParameterError("weights must be a probability vector")

    rate_mean = float(np.sum(w * rates))
    dev = rates - rate_mean
    in_w = ((dev > 0) & (f == 1.0)) | ((dev < 0) & (f == 0.0))
    p_w = float(w[in_w].sum())
    p_wc = float(w[~in_w].sum())
    lhs = p_w * abs(_weighted_cov(f[in_w], rates[in_w], w[in_w])) + p_wc * abs(
        _weighted_cov(f[~in_w], rates[~in_w], w[~in_w])
    )
    f_mean = float(np.sum(w * f))
    rhs = 0.5 * float(np.sum(w * np.abs(dev))) * min(f_mean, 1.0 - f_mean)

    def _side_mean(mask):
        total = w[mask].sum()
        return float(np.sum(w[mask] * f[mask]) / total) if total > 0 else 0.0

    beta = 0.5 * (_side_mean(in_w) + _side_mean(~in_w))
    assert lhs >= rhs - 1e-12, f"witness bound violated: lhs={lhs} < rhs={rhs}"
    return WitnessResult(in_witness=in_w, lhs=lhs, rhs=rhs, beta=beta)


def evaluate_model(model: RampModel, dataset) -> MetricsReport:
    """Assemble the full report for a model over a dataset."""
    if dataset.group_count != model.group_count:
        raise MismatchError(
            f"dataset declares {dataset.group_count} groups, model was trained on {model.group_count}"
        )
    h = predict_batch(model, dataset.scores, dataset.groups, dataset.sensitive_bits)
    means = group_means(h, dataset.groups, dataset.group_count)
    sizes = np.bincount(dataset.groups, minlength=dataset.group_count + 1)[1:]
    covs = None
    if dataset.sensitive_bits is not None:
        covs = tuple(group_covariances(h, dataset.sensitive_bits, dataset.groups, dataset.group_count))
    acc = None
    if dataset.labels is not None:
        acc = expected_accuracy(h, dataset.labels)
    return MetricsReport(
        group_means=tuple(means),
        parity_gap=float(means.max() - means.min()),
        covariances=covs,
        expected_accuracy=acc,
        n_per_group=tuple(int(s) for s in sizes),
    )
