"""Post-process binary classifier scores into a randomized, group-aware
thresholding rule that satisfies statistical parity (or a per-group
covariance constraint), trained by projected SGD on the problem's dual and
verifiable against an exact small-instance solver."""

from .core import (
    ConditionalCovariance,
    ConstraintSpec,
    DualState,
    RampModel,
    ScoredExample,
    StatisticalParity,
    compile_constraint,
    predict_batch,
    predict_probability,
    ramp,
    sample_prediction,
    score_from_probability,
    smoothed_positive_part,
)
from .data import (
    Dataset,
    generate_three_atom,
    ingest_scores,
    load_model,
    save_model,
    three_way_split,
    write_scores,
)
from .metrics import (
    MetricsReport,
    conditional_covariance,
    covariance_witness,
    evaluate_model,
    expected_accuracy,
    parity_gap,
    parity_generalization_bound,
)
from .oracle import OracleSolution, brute_force_grid, solve_all, solve_group
from .trainer import (
    Fixed,
    InverseSqrt,
    RobbinsMonro,
    TrainConfig,
    averaged_sgd_gap_bound,
    convergence_trace,
    dual_objective,
    train,
)

__version__ = "0.1.0"
