"""Numba inner loop for the dual stochastic gradient descent.

Kept separate so the trainer module stays readable; everything here is
plain-array code. The update for an example of group k with coefficient z is

    h  = clamp((f - (lam_k - mu_k) * z) / gamma, 0, 1)
    lam_k <- max(0, lam_k - alpha * (slack_coef + offset - z * h))
    mu_k  <- max(0, mu_k  - alpha * (slack_coef - offset + z * h))

Iterate averages are accumulated lazily: a group's coordinate only changes
when one of its examples is visited, so the constant stretches in between
are added in bulk.
"""

import numpy as np
from numba import njit

SCHEDULE_FIXED = 0
SCHEDULE_INV_SQRT = 1
SCHEDULE_INV_T = 2


@njit(cache=True)
def sgd_epochs(scores, groups0, z, order, gamma, slack_coef, offset,
               schedule_kind, rate, tolerance,
               lam, mu, lam_avg, mu_avg, epoch_lam, epoch_mu):
    """Run shuffled-epoch projected SGD; mutates lam/mu/averages in place.

    order has one row of example indices per epoch. epoch_lam/epoch_mu
    receive the post-epoch iterates. Stops early once the max per-group
    movement |d lam_k| + |d mu_k| over an epoch drops below tolerance
    (tolerance 0 disables). Returns (epochs_run, steps_run, max_abs_grad).
    """
    n_epochs, n = order.shape
    k_count = lam.shape[0]
    acc_lam = np.zeros(k_count)
    acc_mu = np.zeros(k_count)
    last = np.zeros(k_count, dtype=np.int64)
    prev_lam = np.zeros(k_count)
    prev_mu = np.zeros(k_count)
    max_grad = 0.0
    t = 0
    epochs_run = 0
    for e in range(n_epochs):
        for k in range(k_count):
            prev_lam[k] = lam[k]
            prev_mu[k] = mu[k]
        for j in range(n):
            i = order[e, j]
            t += 1
            if schedule_kind == SCHEDULE_INV_SQRT:
                alpha = rate / np.sqrt(t)
            elif schedule_kind == SCHEDULE_INV_T:
                alpha = rate / t
            else:
                alpha = rate
            k = groups0[i]
            zi = z[i]
            v = (scores[i] - (lam[k] - mu[k]) * zi) / gamma
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            g_lam = slack_coef + offset - zi * v
            g_mu = slack_coef - offset + zi * v
            a = abs(g_lam)
            if a > max_grad:
                max_grad = a
            a = abs(g_mu)
            if a > max_grad:
                max_grad = a
            # settle the stretch during which this group's pair was constant
            acc_lam[k] += lam[k] * (t - 1 - last[k])
            acc_mu[k] += mu[k] * (t - 1 - last[k])
            last[k] = t - 1
            nl = lam[k] - alpha * g_lam
            lam[k] = nl if nl > 0.0 else 0.0
            nm = mu[k] - alpha * g_mu
            mu[k] = nm if nm > 0.0 else 0.0
        for k in range(k_count):
            epoch_lam[e, k] = lam[k]
            epoch_mu[e, k] = mu[k]
        epochs_run = e + 1
        movement = 0.0
        for k in range(k_count):
            m = abs(lam[k] - prev_lam[k]) + abs(mu[k] - prev_mu[k])
            if m > movement:
                movement = m
        if tolerance > 0.0 and movement < tolerance:
            break
    if t > 0:
        for k in range(k_count):
            acc_lam[k] += lam[k] * (t - last[k])
            acc_mu[k] += mu[k] * (t - last[k])
            lam_avg[k] = acc_lam[k] / t
            mu_avg[k] = acc_mu[k] / t
    return epochs_run, t, max_grad
