"""Shared builders for the test suite."""

import numpy as np

from fairramp.core import (
    ConditionalCovariance,
    ConstraintSpec,
    DualState,
    RampModel,
    ScoredExample,
    StatisticalParity,
    TrainingInfo,
    compile_constraint,
)


def make_parity_model(nus, gamma, rho=0.5, epsilon=0.0) -> RampModel:
    """Model with prescribed per-group threshold shifts, bypassing training."""
    nus = np.asarray(nus, dtype=np.float64)
    k = nus.size
    spec = ConstraintSpec(
        criterion=StatisticalParity(rho=rho, epsilon=epsilon),
        group_count=k,
        offset=rho,
        slack_coefficient=epsilon / 2.0,
        group_slack=None,
        group_rates=None,
    )
    dual = DualState(
        lam=np.maximum(nus, 0.0),
        mu=np.maximum(-nus, 0.0),
        lam_avg=np.maximum(nus, 0.0),
        mu_avg=np.maximum(-nus, 0.0),
    )
    return RampModel(gamma=gamma, constraint=spec, dual=dual, group_count=k,
                     training=TrainingInfo())


def make_covariance_model(nus, gamma, rates, epsilon=0.0) -> RampModel:
    nus = np.asarray(nus, dtype=np.float64)
    k = nus.size
    spec = ConstraintSpec(
        criterion=ConditionalCovariance(epsilon=epsilon),
        group_count=k,
        offset=0.0,
        slack_coefficient=epsilon,
        group_slack=None,
        group_rates=tuple(rates),
    )
    dual = DualState(
        lam=np.maximum(nus, 0.0),
        mu=np.maximum(-nus, 0.0),
        lam_avg=np.maximum(nus, 0.0),
        mu_avg=np.maximum(-nus, 0.0),
    )
    return RampModel(gamma=gamma, constraint=spec, dual=dual, group_count=k,
                     training=TrainingInfo())


def random_instance(rng, n_max=200, k_max=3, with_labels=False):
    """Uniform-score instance with every group guaranteed nonempty."""
    k = int(rng.integers(1, k_max + 1))
    n = int(rng.integers(4 * k, n_max + 1))
    groups = np.concatenate([np.arange(1, k + 1), rng.integers(1, k + 1, size=n - k)])
    scores = rng.uniform(-1.0, 1.0, size=n)
    examples = [
        ScoredExample(
            id=f"r{i:05d}",
            score=float(scores[i]),
            group=int(groups[i]),
            label=int(rng.random() < (scores[i] + 1) / 2) if with_labels else None,
        )
        for i in range(n)
    ]
    return examples, k


def parity_spec(examples, k, rho, epsilon=0.0):
    return compile_constraint(StatisticalParity(rho=rho, epsilon=epsilon), examples, k)
