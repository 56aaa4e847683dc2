"""Exact small-instance solver for the group-constrained quadratic program.

The primal, per group of size M with per-example coefficients (f_i, z_i):

    min_{0 <= h_i <= 1}  sum_i (gamma/2) h_i^2 - f_i h_i
    s.t.                 | sum_i (z_i h_i - b) | <= group_slack

has a dual that depends on its two multipliers only through the scalar
nu = lambda - mu (at any optimum min(lambda, mu) = 0, so lambda + mu = |nu|).
The reduced dual objective

    D(nu) = M * b * nu + group_slack * |nu| + sum_i xi(f_i - nu * z_i)

with xi the smoothed positive part, is convex in nu and is minimized here by
golden-section search on a bracket that provably contains an optimum. The
primal solution is recovered as h_i = clamp((f_i - nu z_i) / gamma, 0, 1),
and strong duality gives primal_objective = -min D (constant rules are
strictly feasible, so the gap is zero up to solver tolerance).

This path shares no code with the stochastic trainer, so agreement between
the two is a genuine cross-check.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import ConstraintSpec, ramp_array, smoothed_positive_part_array
from .errors import EmptyGroupError, InvalidParameterError, MissingFieldError

__all__ = ["OracleSolution", "solve_group", "solve_all", "brute_force_grid"]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

DEFAULT_NU_TOLERANCE = 1e-10


def _group_dual(nu: float, scores: np.ndarray, z: np.ndarray, offset: float,
                group_slack: float, gamma: float) -> float:
    xi = smoothed_positive_part_array(scores - nu * z, gamma)
    return len(scores) * offset * nu + group_slack * abs(nu) + float(xi.sum())


def _golden_section(fn, lo: float, hi: float, tol: float) -> float:
    """Minimize a convex (weakly unimodal) fn on [lo, hi] to bracket width tol."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fn(d)
    return (a + b) / 2.0


def _dual_slope(nu: float, scores: np.ndarray, z: np.ndarray, offset: float,
                group_slack: float, gamma: float, side: float) -> float:
    """Subgradient of the reduced dual; `side` resolves the |nu| kink at 0."""
    sign = math.copysign(1.0, nu) if nu != 0.0 else side
    h = np.clip((scores - nu * z) / gamma, 0.0, 1.0)
    return len(scores) * offset + group_slack * sign - float((z * h).sum())


def _polish_stationary(nu: float, scores: np.ndarray, z: np.ndarray, offset: float,
                       group_slack: float, gamma: float, bound: float) -> float:
    """Refine a near-optimal nu to a machine-precision stationary point.

    The dual slope is continuous, piecewise linear and nondecreasing (except
    for an upward jump at 0 when the slack is positive), so a sign-change
    bracket around the golden-section result can be bisected essentially to
    float resolution. This keeps the recovered primal feasible to roundoff,
    which a width-limited golden section alone does not guarantee.
    """
    def slope(v, side=1.0):
        return _dual_slope(v, scores, z, offset, group_slack, gamma, side)

    width = max(1e-8, abs(nu) * 1e-8)
    lo, hi = nu - width, nu + width
    for _ in range(60):
        if slope(lo, -1.0) <= 0.0:
            break
        lo = max(lo - width, -bound)
        width *= 4.0
        if lo <= -bound:
            lo = -bound
            break
    width = max(1e-8, abs(nu) * 1e-8)
    for _ in range(60):
        if slope(hi, 1.0) >= 0.0:
            break
        hi = min(hi + width, bound)
        width *= 4.0
        if hi >= bound:
            hi = bound
            break
    if slope(lo, -1.0) > 0.0 or slope(hi, 1.0) < 0.0:
        return nu  # no straddling bracket; keep the golden-section point
    if lo < 0.0 < hi and slope(0.0, -1.0) <= 0.0 <= slope(0.0, 1.0):
        return 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if mid == 0.0:
            if slope(0.0, -1.0) <= 0.0 <= slope(0.0, 1.0):
                return 0.0
            mid = math.nextafter(0.0, hi if slope(0.0, 1.0) < 0.0 else lo)
        if slope(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return hi if abs(slope(hi, 1.0)) < abs(slope(lo, -1.0)) else lo


def _bracket(z: np.ndarray, gamma: float) -> float:
    nonzero = np.abs(z[z != 0.0])
    return (2.0 + gamma) / float(nonzero.min())


def solve_group(
    scores_and_z,
    offset: float,
    group_slack: float,
    gamma: float,
    tolerance: float = DEFAULT_NU_TOLERANCE,
) -> tuple[float, float]:
    """Minimize the reduced group dual; returns (nu, objective value).

    The minimizer can be non-unique (the dual has flat stretches wherever no
    example sits on the ramp), so callers should compare objective values and
    recovered h, never nu itself. A group whose coefficients are all zero has
    a vacuous constraint: nu = 0 is returned with a warning.

    The search bracket assumes a feasible primal (true for every compiled
    criterion, since constant rules are feasible); an unattainable offset
    would make the dual unbounded below.
    """
    pairs = list(scores_and_z)
    if not pairs:
        raise EmptyGroupError("cannot solve an empty group")
    if tolerance <= 0:
        raise InvalidParameterError(f"tolerance must be > 0, got {tolerance}")
    if gamma <= 0:
        raise InvalidParameterError(f"gamma must be > 0, got {gamma}")
    scores = np.array([p[0] for p in pairs], dtype=np.float64)
    z = np.array([p[1] for p in pairs], dtype=np.float64)
    if not np.any(z != 0.0):
        warnings.warn("all constraint coefficients are zero: constraint is vacuous, using nu = 0")
        return 0.0, _group_dual(0.0, scores, z, offset, group_slack, gamma)
    bound = _bracket(z, gamma)
    nu = _golden_section(
        lambda v: _group_dual(v, scores, z, offset, group_slack, gamma),
        -bound, bound, tolerance,
    )
    nu = _polish_stationary(nu, scores, z, offset, group_slack, gamma, bound)
    return nu, _group_dual(nu, scores, z, offset, group_slack, gamma)


def brute_force_grid(
    scores_and_z,
    offset: float,
    group_slack: float,
    gamma: float,
    step: float,
) -> float:
    """Exhaustive scan of the reduced group dual; test-only oracle for solve_group."""
    pairs = list(scores_and_z)
    if not pairs:
        raise EmptyGroupError("cannot solve an empty group")
    if step <= 0:
        raise InvalidParameterError(f"step must be > 0, got {step}")
    scores = np.array([p[0] for p in pairs], dtype=np.float64)
    z = np.array([p[1] for p in pairs], dtype=np.float64)
    if not np.any(z != 0.0):
        return 0.0
    bound = _bracket(z, gamma)
    grid = np.arange(-bound, bound + step, step)
    w = scores[None, :] - grid[:, None] * z[None, :]
    xi = smoothed_positive_part_array(w, gamma).sum(axis=1)
    values = len(scores) * offset * grid + group_slack * np.abs(grid) + xi
    return float(grid[int(np.argmin(values))])


@dataclass(frozen=True)
class OracleSolution:
    """Exact solution of the full instance, one scalar nu per group.

    primal_objective and dual_objective are sums over all examples; the gap
    primal + dual is nonnegative by weak duality and zero at the optimum.
    """

    nu: np.ndarray
    h: np.ndarray
    primal_objective: float
    dual_objective: float
    duality_gap: float
    degenerate_groups: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return int(self.h.size)

    @property
    def dual_objective_mean(self) -> float:
        return self.dual_objective / self.n


def solve_all(
    examples,
    spec: ConstraintSpec,
    gamma: float,
    tolerance: float = DEFAULT_NU_TOLERANCE,
) -> OracleSolution:
    """Solve every group and recover the primal variables."""
    examples = list(examples)
    if not examples:
        raise EmptyGroupError("cannot solve an empty instance")
    scores = np.array([e.score for e in examples], dtype=np.float64)
    groups = np.array([e.group for e in examples], dtype=np.int64)
    bits = None
    if spec.requires_sensitive_bit:
        raw = [e.sensitive_bit for e in examples]
        if any(b is None for b in raw):
            raise MissingFieldError(
                "conditional covariance criterion needs a sensitive bit on every example"
            )
        bits = np.array(raw, dtype=np.float64)
    return solve_arrays(scores, groups, spec, gamma, sensitive_bits=bits, tolerance=tolerance)


def solve_arrays(
    scores: np.ndarray,
    groups: np.ndarray,
    spec: ConstraintSpec,
    gamma: float,
    sensitive_bits: np.ndarray | None = None,
    tolerance: float = DEFAULT_NU_TOLERANCE,
) -> OracleSolution:
    """Array-based entry point for solve_all."""
    if spec.group_slack is None:
        raise InvalidParameterError(
            "constraint spec carries no per-group slack; compile it against the sample first"
        )
    scores = np.asarray(scores, dtype=np.float64)
    groups = np.asarray(groups, dtype=np.int64)
    z = spec.coefficient_array(groups, sensitive_bits)
    k_count = spec.group_count
    nu = np.zeros(k_count)
    dual_total = 0.0
    degenerate = []
    for k in range(1, k_count + 1):
        mask = groups == k
        if not mask.any():
            raise EmptyGroupError(f"group {k} of {k_count} has no examples")
        zk = z[mask]
        with warnings.catch_warnings():
            if not np.any(zk != 0.0):
                degenerate.append(k)
                warnings.simplefilter("ignore")
            nu_k, value = solve_group(
                zip(scores[mask], zk), spec.offset, spec.group_slack[k - 1], gamma, tolerance
            )
        nu[k - 1] = nu_k
        dual_total += value
    h = ramp_array(scores - nu[groups - 1] * z, gamma)
    primal = float((gamma / 2.0 * h * h - scores * h).sum())
    return OracleSolution(
        nu=nu,
        h=h,
        primal_objective=primal,
        dual_objective=dual_total,
        duality_gap=primal + dual_total,
        degenerate_groups=tuple(degenerate),
    )
