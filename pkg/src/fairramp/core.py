"""Core data types and the randomized ramp decision rule.

Conventions used throughout the package:

- A base classifier is visible only through its score f in [-1, +1]
  (a probability p maps to the score 2p - 1).
- Examples carry a group id in 1..K. The post-processed rule predicts the
  positive label with probability h = clamp((f - nu_k * z) / gamma, 0, 1),
  where nu_k = lambda_k - mu_k is the trained per-group threshold shift,
  z is the per-example constraint coefficient and gamma > 0 is the width
  of the randomization band.
- A fairness criterion compiles to per-example coefficients (z, b) plus a
  per-group slack budget:
    * statistical parity within epsilon of a target rate rho:
        z = 1, b = rho, group slack = |S_k| * epsilon / 2
    * conditional covariance between prediction and a sensitive bit:
        z = bit - rate_k (rate_k = empirical bit mean in group k, frozen
        at compile time), b = 0, group slack = |S_k| * epsilon
  The per-example coefficient on (lambda_k + mu_k) in the dual objective is
  the group slack divided by the group size (epsilon/2 and epsilon
  respectively); it is stored as ``slack_coefficient``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataValidationError,
    EmptyGroupError,
    InvalidParameterError,
    MissingFieldError,
    UnknownGroupError,
)

__all__ = [
    "ScoredExample",
    "StatisticalParity",
    "ConditionalCovariance",
    "ConstraintSpec",
    "DualState",
    "TrainingInfo",
    "RampModel",
    "smoothed_positive_part",
    "ramp",
    "score_from_probability",
    "compile_constraint",
    "predict_probability",
    "predict_batch",
    "sample_prediction",
]


def smoothed_positive_part(w: float, gamma: float) -> float:
    """Smoothed max(0, w): zero for w <= 0, w^2/(2*gamma) on [0, gamma],
    w - gamma/2 beyond. Convex and continuously differentiable in w."""
    if gamma <= 0:
        raise InvalidParameterError(f"gamma must be > 0, got {gamma}")
    if w <= 0.0:
        return 0.0
    if w <= gamma:
        return w * w / (2.0 * gamma)
    return w - gamma / 2.0


def ramp(w: float, gamma: float) -> float:
    """clamp(w / gamma, 0, 1); the derivative of smoothed_positive_part and
    the shape of the randomized decision rule."""
    if gamma <= 0:
        raise InvalidParameterError(f"gamma must be > 0, got {gamma}")
    v = w / gamma
    if v <= 0.0:
        return 0.0
    if v >= 1.0:
        return 1.0
    return v


def smoothed_positive_part_array(w: np.ndarray, gamma: float) -> np.ndarray:
    if gamma <= 0:
        raise InvalidParameterError(f"gamma must be > 0, got {gamma}")
    w = np.asarray(w, dtype=np.float64)
    return np.where(w <= 0.0, 0.0, np.where(w <= gamma, w * w / (2.0 * gamma), w - gamma / 2.0))


def ramp_array(w: np.ndarray, gamma: float) -> np.ndarray:
    if gamma <= 0:
        raise InvalidParameterError(f"gamma must be > 0, got {gamma}")
    return np.clip(np.asarray(w, dtype=np.float64) / gamma, 0.0, 1.0)


def score_from_probability(p: float) -> float:
    """Convert a probability-valued classifier output to a score: f = 2p - 1."""
    if not (0.0 <= p <= 1.0) or not math.isfinite(p):
        raise DataValidationError(f"probability must lie in [0, 1], got {p}")
    return 2.0 * p - 1.0


@dataclass(frozen=True)
class ScoredExample:
    """One classifier output: the atom all pipelines operate on.

    score must already be in [-1, +1]; out-of-range input is rejected, never
    clamped, because silent clamping would corrupt bias measurement.
    """

    id: str
    score: float
    group: int
    sensitive_bit: int | None = None
    label: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise DataValidationError(f"example {self.id!r}: non-finite score {self.score}")
        if not (-1.0 <= self.score <= 1.0):
            raise DataValidationError(
                f"example {self.id!r}: score {self.score} outside [-1, +1]"
            )
        if int(self.group) != self.group or self.group < 1:
            raise DataValidationError(
                f"example {self.id!r}: group must be a positive integer, got {self.group}"
            )
        if self.sensitive_bit is not None and self.sensitive_bit not in (0, 1):
            raise DataValidationError(
                f"example {self.id!r}: sensitive_bit must be 0 or 1, got {self.sensitive_bit}"
            )
        if self.label is not None and self.label not in (0, 1):
            raise DataValidationError(
                f"example {self.id!r}: label must be 0 or 1, got {self.label}"
            )


@dataclass(frozen=True)
class StatisticalParity:
    """Keep every group's mean positive rate within epsilon/2 of rho."""

    rho: float
    epsilon: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.rho <= 1.0):
            raise InvalidParameterError(f"rho must lie in [0, 1], got {self.rho}")
        if self.epsilon < 0.0:
            raise InvalidParameterError(f"epsilon must be >= 0, got {self.epsilon}")


@dataclass(frozen=True)
class ConditionalCovariance:
    """Bound |cov(prediction, sensitive bit)| within each group by epsilon."""

    epsilon: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0.0:
            raise InvalidParameterError(f"epsilon must be >= 0, got {self.epsilon}")


Criterion = StatisticalParity | ConditionalCovariance


@dataclass(frozen=True)
class ConstraintSpec:
    """A fairness criterion compiled against a training sample.

    offset is b, slack_coefficient the per-example coefficient on
    (lambda + mu), group_slack the per-group budget epsilon_k, and
    group_rates the frozen per-group sensitive-bit means (covariance
    criterion only; None for parity).
    """

    criterion: Criterion
    group_count: int
    offset: float
    slack_coefficient: float
    group_slack: tuple[float, ...] | None
    group_rates: tuple[float, ...] | None

    @property
    def requires_sensitive_bit(self) -> bool:
        return isinstance(self.criterion, ConditionalCovariance)

    def coefficient(self, group: int, sensitive_bit: int | None) -> float:
        """Per-example constraint coefficient z."""
        if isinstance(self.criterion, StatisticalParity):
            return 1.0
        if sensitive_bit is None:
            raise MissingFieldError(
                "conditional covariance criterion needs a sensitive bit on every example"
            )
        return float(sensitive_bit) - self.group_rates[group - 1]

    def coefficient_array(self, groups: np.ndarray, sensitive_bits: np.ndarray | None) -> np.ndarray:
        if isinstance(self.criterion, StatisticalParity):
            return np.ones(len(groups), dtype=np.float64)
        if sensitive_bits is None:
            raise MissingFieldError(
                "conditional covariance criterion needs sensitive bits on every example"
            )
        rates = np.asarray(self.group_rates, dtype=np.float64)
        return sensitive_bits.astype(np.float64) - rates[groups - 1]


def _group_sizes(groups: np.ndarray, group_count: int) -> np.ndarray:
    sizes = np.bincount(groups, minlength=group_count + 1)[1:]
    empty = np.nonzero(sizes == 0)[0]
    if empty.size:
        raise EmptyGroupError(f"group {empty[0] + 1} of {group_count} has no examples")
    return sizes


def compile_constraint(criterion: Criterion, examples, group_count: int | None = None) -> ConstraintSpec:
    """Compile a criterion into (z, b, slack) form against a training sample.

    Recompiling the same criterion on the same data yields an identical spec.
    """
    examples = list(examples)
    if not examples:
        raise EmptyGroupError("cannot compile a constraint against an empty sample")
    groups = np.array([e.group for e in examples], dtype=np.int64)
    if group_count is None:
        group_count = int(groups.max())
    if groups.max() > group_count:
        raise DataValidationError(
            f"example group {groups.max()} exceeds declared group count {group_count}"
        )
    sizes = _group_sizes(groups, group_count)

    if isinstance(criterion, StatisticalParity):
        group_slack = tuple(float(s) * criterion.epsilon / 2.0 for s in sizes)
        return ConstraintSpec(
            criterion=criterion,
            group_count=group_count,
            offset=criterion.rho,
            slack_coefficient=criterion.epsilon / 2.0,
            group_slack=group_slack,
            group_rates=None,
        )

    bits = [e.sensitive_bit for e in examples]
    if any(b is None for b in bits):
        raise MissingFieldError(
            "conditional covariance criterion needs a sensitive bit on every training example"
        )
    bits = np.array(bits, dtype=np.float64)
    rates = tuple(
        float(bits[groups == k + 1].mean()) for k in range(group_count)
    )
    group_slack = tuple(float(s) * criterion.epsilon for s in sizes)
    return ConstraintSpec(
        criterion=criterion,
        group_count=group_count,
        offset=0.0,
        slack_coefficient=criterion.epsilon,
        group_slack=group_slack,
        group_rates=rates,
    )


@dataclass
class DualState:
    """Nonnegative per-group multipliers plus their running averages.

    lam/mu are the current iterates; lam_avg/mu_avg the arithmetic means of
    all post-projection iterates seen so far (equal to lam/mu when
    step_count == 0).
    """

    lam: np.ndarray
    mu: np.ndarray
    lam_avg: np.ndarray
    mu_avg: np.ndarray
    step_count: int = 0

    @classmethod
    def zeros(cls, group_count: int) -> "DualState":
        return cls(
            lam=np.zeros(group_count),
            mu=np.zeros(group_count),
            lam_avg=np.zeros(group_count),
            mu_avg=np.zeros(group_count),
            step_count=0,
        )

    def validate(self):
        if (self.lam < 0).any() or (self.mu < 0).any():
            raise InvalidParameterError("dual multipliers must be nonnegative")


@dataclass(frozen=True)
class TrainingInfo:
    seed: int = 0
    schedule: str = "none"
    epochs: int = 0
    final_dual_objective: float = float("nan")
    use_averaged_iterates: bool = False
    max_gradient: float = 0.0


@dataclass(frozen=True)
class RampModel:
    """Everything needed to compute the randomized decision rule.

    Prediction uses the averaged iterates when the training run asked for
    them, otherwise the final ones.
    """

    gamma: float
    constraint: ConstraintSpec
    dual: DualState
    group_count: int
    training: TrainingInfo = field(default_factory=TrainingInfo)
    trace: tuple | None = None  # per-epoch records, populated by a traced training run

    def __post_init__(self):
        if self.gamma <= 0:
            raise InvalidParameterError(
                f"gamma must be strictly positive (got {self.gamma}): "
                "a zero-width randomization band is not allowed"
            )

    def multipliers(self) -> tuple[np.ndarray, np.ndarray]:
        if self.training.use_averaged_iterates:
            return self.dual.lam_avg, self.dual.mu_avg
        return self.dual.lam, self.dual.mu

    def thresholds(self) -> np.ndarray:
        """Per-group threshold shift nu_k = lambda_k - mu_k."""
        lam, mu = self.multipliers()
        return lam - mu


def _check_group(model: RampModel, group: int):
    if not (1 <= group <= model.group_count):
        raise UnknownGroupError(
            f"group {group} unknown to a model trained on {model.group_count} groups"
        )


def predict_probability(model: RampModel, example: ScoredExample) -> float:
    """Probability of predicting the positive class for one example."""
    _check_group(model, example.group)
    z = model.constraint.coefficient(example.group, example.sensitive_bit)
    nu = model.thresholds()[example.group - 1]
    return ramp(example.score - nu * z, model.gamma)


def predict_batch(
    model: RampModel,
    scores: np.ndarray,
    groups: np.ndarray,
    sensitive_bits: np.ndarray | None = None,
) -> np.ndarray:
    """Vectorized predict_probability over parallel arrays."""
    groups = np.asarray(groups, dtype=np.int64)
    if groups.size and (groups.min() < 1 or groups.max() > model.group_count):
        bad = groups.min() if groups.min() < 1 else groups.max()
        raise UnknownGroupError(
            f"group {bad} unknown to a model trained on {model.group_count} groups"
        )
    z = model.constraint.coefficient_array(groups, sensitive_bits)
    nu = model.thresholds()[groups - 1]
    return ramp_array(np.asarray(scores, dtype=np.float64) - nu * z, model.gamma)


def sample_prediction(model: RampModel, example: ScoredExample, rng: np.random.Generator) -> int:
    """Draw a hard 0/1 label from the randomized rule; deterministic given the
    generator state."""
    h = predict_probability(model, example)
    return int(rng.random() < h)
