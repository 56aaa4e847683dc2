"""Projected stochastic gradient descent on the dual of the group-constrained QP.

The dual objective, averaged over the sample, is

    F(lam, mu) = mean_i [ slack_coef * (lam_k + mu_k) + b * (lam_k - mu_k)
                          + xi(f_i - (lam_k - mu_k) * z_i) ]       (k = group of i)

with xi the smoothed positive part. Training performs shuffled full passes
over the sample (same stationary point as i.i.d. sampling, deterministic
under a seed), projecting each multiplier onto [0, inf) after every step.
Every stochastic gradient is bounded by slack_coef + |b| + max|z|, which is
asserted after each run.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (
    ConstraintSpec,
    DualState,
    RampModel,
    TrainingInfo,
    smoothed_positive_part_array,
)
from .errors import (
    DataValidationError,
    EmptyDatasetError,
    EmptyGroupError,
    InvalidParameterError,
    MissingFieldError,
)

__all__ = [
    "Fixed",
    "InverseSqrt",
    "RobbinsMonro",
    "TrainConfig",
    "TraceRecord",
    "train",
    "train_arrays",
    "dual_objective",
    "dual_objective_arrays",
    "convergence_trace",
    "averaged_sgd_gap_bound",
]


@dataclass(frozen=True)
class Fixed:
    """Constant learning rate; alpha=None means 0.1 * sqrt(K / total_steps)."""

    alpha: float | None = None

    def __post_init__(self):
        if self.alpha is not None and self.alpha <= 0:
            raise InvalidParameterError(f"alpha must be > 0, got {self.alpha}")


@dataclass(frozen=True)
class InverseSqrt:
    """alpha_t = c / sqrt(t)."""

    c: float

    def __post_init__(self):
        if self.c <= 0:
            raise InvalidParameterError(f"c must be > 0, got {self.c}")


@dataclass(frozen=True)
class RobbinsMonro:
    """alpha_t = c / t; summable squares, divergent sum."""

    c: float

    def __post_init__(self):
        if self.c <= 0:
            raise InvalidParameterError(f"c must be > 0, got {self.c}")


Schedule = Fixed | InverseSqrt | RobbinsMonro


@dataclass(frozen=True)
class TrainConfig:
    schedule: Schedule = Fixed()
    max_epochs: int = 50
    convergence_tolerance: float = 1e-6
    seed: int = 0
    use_averaged_iterates: bool | None = None
    shuffle_per_epoch: bool = True
    record_trace: bool = False

    def __post_init__(self):
        if self.max_epochs < 0:
            raise InvalidParameterError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if self.convergence_tolerance < 0:
            raise InvalidParameterError(
                f"convergence_tolerance must be >= 0, got {self.convergence_tolerance}"
            )

    def averaging(self) -> bool:
        """Averaged iterates default on for a fixed rate, off for decaying ones."""
        if self.use_averaged_iterates is not None:
            return self.use_averaged_iterates
        return isinstance(self.schedule, Fixed)


@dataclass(frozen=True)
class TraceRecord:
    epoch: int
    thresholds: tuple[float, ...]
    dual_objective: float


def _bit_array(examples) -> np.ndarray:
    bits = [e.sensitive_bit for e in examples]
    if any(b is None for b in bits):
        raise MissingFieldError(
            "conditional covariance criterion needs a sensitive bit on every example"
        )
    return np.array(bits, dtype=np.float64)


def _schedule_params(schedule: Schedule, group_count: int, total_steps: int) -> tuple[int, float, str]:
    if isinstance(schedule, Fixed):
        alpha = schedule.alpha
        if alpha is None:
            alpha = 0.1 * math.sqrt(group_count / max(total_steps, 1))
        return _kernels.SCHEDULE_FIXED, alpha, f"fixed(alpha={alpha:.6g})"
    if isinstance(schedule, InverseSqrt):
        return _kernels.SCHEDULE_INV_SQRT, schedule.c, f"inv-sqrt(c={schedule.c:.6g})"
    if isinstance(schedule, RobbinsMonro):
        return _kernels.SCHEDULE_INV_T, schedule.c, f"robbins-monro(c={schedule.c:.6g})"
    raise InvalidParameterError(f"unknown schedule {schedule!r}")


def train(examples, spec: ConstraintSpec, gamma: float, config: TrainConfig = TrainConfig()) -> RampModel:
    """Fit the dual multipliers on a sample of ScoredExample."""
    examples = list(examples)
    if not examples:
        raise EmptyDatasetError("cannot train on an empty sample")
    scores = np.array([e.score for e in examples], dtype=np.float64)
    groups = np.array([e.group for e in examples], dtype=np.int64)
    bits = _bit_array(examples) if spec.requires_sensitive_bit else None
    return train_arrays(scores, groups, spec, gamma, config, sensitive_bits=bits)


def train_arrays(
    scores: np.ndarray,
    groups: np.ndarray,
    spec: ConstraintSpec,
    gamma: float,
    config: TrainConfig = TrainConfig(),
    sensitive_bits: np.ndarray | None = None,
) -> RampModel:
    """Array-based entry point for train."""
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    groups = np.ascontiguousarray(groups, dtype=np.int64)
    n = scores.size
    if n == 0:
        raise EmptyDatasetError("cannot train on an empty sample")
    if gamma <= 0:
        raise InvalidParameterError(f"gamma must be > 0, got {gamma}")
    if not np.isfinite(scores).all():
        raise DataValidationError("scores contain non-finite values")
    if scores.min() < -1.0 or scores.max() > 1.0:
        raise DataValidationError("scores outside [-1, +1]")
    k_count = spec.group_count
    sizes = np.bincount(groups, minlength=k_count + 1)
    if groups.min() < 1 or groups.max() > k_count:
        raise DataValidationError("group ids outside 1..K")
    if (sizes[1:] == 0).any():
        raise EmptyGroupError(f"group {int(np.nonzero(sizes[1:] == 0)[0][0]) + 1} has no examples")

    z = np.ascontiguousarray(spec.coefficient_array(groups, sensitive_bits))
    epochs = config.max_epochs
    total_steps = epochs * n
    kind, rate, schedule_label = _schedule_params(config.schedule, k_count, total_steps)

    rng = np.random.default_rng(config.seed)
    base = np.tile(np.arange(n, dtype=np.int32), (epochs, 1))
    order = rng.permuted(base, axis=1) if config.shuffle_per_epoch and epochs else base

    lam = np.zeros(k_count)
    mu = np.zeros(k_count)
    lam_avg = np.zeros(k_count)
    mu_avg = np.zeros(k_count)
    epoch_lam = np.zeros((epochs, k_count))
    epoch_mu = np.zeros((epochs, k_count))
    epochs_run, steps_run, max_grad = _kernels.sgd_epochs(
        scores, groups - 1, z, order, gamma, spec.slack_coefficient, spec.offset,
        kind, rate, config.convergence_tolerance,
        lam, mu, lam_avg, mu_avg, epoch_lam, epoch_mu,
    )
    grad_bound = spec.slack_coefficient + abs(spec.offset) + float(np.abs(z).max())
    assert max_grad <= grad_bound + 1e-9, (
        f"stochastic gradient {max_grad} exceeded its bound {grad_bound}"
    )

    dual = DualState(lam=lam, mu=mu, lam_avg=lam_avg, mu_avg=mu_avg, step_count=int(steps_run))
    averaging = config.averaging()
    eff_lam, eff_mu = (lam_avg, mu_avg) if averaging else (lam, mu)
    final_objective = dual_objective_arrays(
        scores, groups, spec, gamma, eff_lam, eff_mu, sensitive_bits=sensitive_bits
    )

    trace = None
    if config.record_trace:
        records = []
        for e in range(epochs_run):
            obj = dual_objective_arrays(
                scores, groups, spec, gamma, epoch_lam[e], epoch_mu[e],
                sensitive_bits=sensitive_bits,
            )
            nu = epoch_lam[e] - epoch_mu[e]
            records.append(
                TraceRecord(epoch=e + 1, thresholds=tuple(float(v) for v in nu), dual_objective=obj)
            )
        trace = tuple(records)

    info = TrainingInfo(
        seed=config.seed,
        schedule=schedule_label,
        epochs=epochs_run,
        final_dual_objective=final_objective,
        use_averaged_iterates=averaging,
        max_gradient=float(max_grad),
    )
    return RampModel(
        gamma=gamma, constraint=spec, dual=dual, group_count=k_count, training=info, trace=trace
    )


def dual_objective(examples, spec: ConstraintSpec, gamma: float, lam, mu) -> float:
    """Mean dual objective of the sample at the given multipliers."""
    examples = list(examples)
    if not examples:
        raise EmptyDatasetError("cannot evaluate the dual objective on an empty sample")
    scores = np.array([e.score for e in examples], dtype=np.float64)
    groups = np.array([e.group for e in examples], dtype=np.int64)
    bits = _bit_array(examples) if spec.requires_sensitive_bit else None
    return dual_objective_arrays(scores, groups, spec, gamma, lam, mu, sensitive_bits=bits)


def dual_objective_arrays(
    scores: np.ndarray,
    groups: np.ndarray,
    spec: ConstraintSpec,
    gamma: float,
    lam,
    mu,
    sensitive_bits: np.ndarray | None = None,
) -> float:
    lam = np.asarray(lam, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if (lam < 0).any() or (mu < 0).any():
        raise InvalidParameterError("dual multipliers must be nonnegative")
    if lam.shape != (spec.group_count,) or mu.shape != (spec.group_count,):
        raise InvalidParameterError("multiplier vectors must have one entry per group")
    groups = np.asarray(groups, dtype=np.int64)
    z = spec.coefficient_array(groups, sensitive_bits)
    nu = (lam - mu)[groups - 1]
    sigma = (lam + mu)[groups - 1]
    xi = smoothed_positive_part_array(np.asarray(scores, dtype=np.float64) - nu * z, gamma)
    return float(np.mean(spec.slack_coefficient * sigma + spec.offset * nu + xi))


def convergence_trace(model: RampModel) -> tuple[TraceRecord, ...]:
    """Per-epoch (thresholds, dual objective) records of a traced training run."""
    if model.trace is None:
        raise InvalidParameterError("model was trained without record_trace=True")
    return model.trace


def averaged_sgd_gap_bound(rho: float, epsilon: float, alpha: float, steps: int,
                           lam_star, mu_star) -> float:
    """Upper bound on the mean dual-objective gap of the averaged iterates after
    `steps` fixed-rate updates: (1 + rho + eps)^2 * alpha + (|lam*|^2 + |mu*|^2) / (2 * steps * alpha)."""
    if alpha <= 0:
        raise InvalidParameterError(f"alpha must be > 0, got {alpha}")
    if steps < 1:
        raise InvalidParameterError(f"steps must be >= 1, got {steps}")
    lam_sq = float(np.sum(np.square(np.asarray(lam_star, dtype=np.float64))))
    mu_sq = float(np.sum(np.square(np.asarray(mu_star, dtype=np.float64))))
    return (1.0 + rho + epsilon) ** 2 * alpha + (mu_sq + lam_sq) / (2.0 * steps * alpha)
