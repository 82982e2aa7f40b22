"""Numba inner loops for the log-domain forward-backward recursions.

Two flavors share the same math:

* dense kernels walk a precomputed (T, N, N) branch-metric table;
* structured kernels compose the metric on the fly as
  ``emis[t, j] + trans[i, j] + prior[t, lab[i, j]]``, which is how every
  channel-facing trellis here factors. This avoids materializing
  hundred-MB tables for the product trellises at full frame length.

All arrays are float64 log-probabilities; ``-inf`` marks forbidden
transitions. Reductions use max-shifted log-sum-exp, so ``-inf`` inputs
never produce NaN.
"""

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True)
def forward_dense(metrics, init):
    # alpha[t, j] = LSE_i(alpha[t-1, i] + metrics[t, i, j]), alpha[-1] := init
    T, N, _ = metrics.shape
    alpha = np.empty((T, N))
    prev = init
    for t in range(T):
        for j in range(N):
            m = NEG_INF
            for i in range(N):
                v = prev[i] + metrics[t, i, j]
                if v > m:
                    m = v
            if m == NEG_INF:
                alpha[t, j] = NEG_INF
            else:
                s = 0.0
                for i in range(N):
                    v = prev[i] + metrics[t, i, j]
                    s += np.exp(v - m)
                alpha[t, j] = m + np.log(s)
        prev = alpha[t]
    return alpha


@njit(cache=True)
def backward_dense(metrics, term):
    # beta[t-1, i] = LSE_j(metrics[t, i, j] + beta[t, j]), beta[T-1] := term
    T, N, _ = metrics.shape
    beta = np.empty((T, N))
    beta[T - 1] = term
    for t in range(T - 1, 0, -1):
        for i in range(N):
            m = NEG_INF
            for j in range(N):
                v = metrics[t, i, j] + beta[t, j]
                if v > m:
                    m = v
            if m == NEG_INF:
                beta[t - 1, i] = NEG_INF
            else:
                s = 0.0
                for j in range(N):
                    v = metrics[t, i, j] + beta[t, j]
                    s += np.exp(v - m)
                beta[t - 1, i] = m + np.log(s)
    return beta


@njit(cache=True)
def forward_structured(emis, trans, prior, lab, init):
    T, N = emis.shape
    alpha = np.empty((T, N))
    prev = init
    for t in range(T):
        for j in range(N):
            m = NEG_INF
            for i in range(N):
                v = prev[i] + trans[i, j] + prior[t, lab[i, j]]
                if v > m:
                    m = v
            if m == NEG_INF:
                alpha[t, j] = NEG_INF
            else:
                s = 0.0
                for i in range(N):
                    v = prev[i] + trans[i, j] + prior[t, lab[i, j]]
                    s += np.exp(v - m)
                alpha[t, j] = m + np.log(s) + emis[t, j]
        prev = alpha[t]
    return alpha


@njit(cache=True)
def logz_structured(emis, trans, prior, lab, init):
    # rolling forward pass; returns log of the summed final alpha
    T, N = emis.shape
    prev = init.copy()
    cur = np.empty(N)
    for t in range(T):
        for j in range(N):
            m = NEG_INF
            for i in range(N):
                v = prev[i] + trans[i, j] + prior[t, lab[i, j]]
                if v > m:
                    m = v
            if m == NEG_INF:
                cur[j] = NEG_INF
            else:
                s = 0.0
                for i in range(N):
                    v = prev[i] + trans[i, j] + prior[t, lab[i, j]]
                    s += np.exp(v - m)
                cur[j] = m + np.log(s) + emis[t, j]
        prev, cur = cur, prev
    m = NEG_INF
    for j in range(N):
        if prev[j] > m:
            m = prev[j]
    if m == NEG_INF:
        return NEG_INF
    s = 0.0
    for j in range(N):
        s += np.exp(prev[j] - m)
    return m + np.log(s)


@njit(cache=True)
def fb_marginals_structured(emis, trans, prior, lab, init, term, n_labels):
    """Forward-backward with per-transition-label marginalization.

    Returns (marg, logz) where marg[t, l] = LSE over transitions (i -> j)
    carrying label l of alpha[t-1, i] + metric[t, i, j] + beta[t, j].
    Beta rolls backward in place; only alpha is stored.
    """
    T, N = emis.shape
    alpha = forward_structured(emis, trans, prior, lab, init)

    marg = np.empty((T, n_labels))
    beta = term.copy()
    beta_prev = np.empty(N)
    maxes = np.empty(n_labels)
    sums = np.empty(n_labels)
    for t in range(T - 1, -1, -1):
        aprev = init if t == 0 else alpha[t - 1]
        for l in range(n_labels):
            maxes[l] = NEG_INF
            sums[l] = 0.0
        for i in range(N):
            for j in range(N):
                v = aprev[i] + trans[i, j] + prior[t, lab[i, j]] + emis[t, j] + beta[j]
                if v > maxes[lab[i, j]]:
                    maxes[lab[i, j]] = v
        for i in range(N):
            for j in range(N):
                m = maxes[lab[i, j]]
                if m > NEG_INF:
                    v = aprev[i] + trans[i, j] + prior[t, lab[i, j]] + emis[t, j] + beta[j]
                    sums[lab[i, j]] += np.exp(v - m)
        for l in range(n_labels):
            marg[t, l] = maxes[l] + np.log(sums[l]) if maxes[l] > NEG_INF else NEG_INF
        # roll beta back one step: beta_prev[i] = LSE_j(metric[t,i,j] + beta[j])
        for i in range(N):
            m = NEG_INF
            for j in range(N):
                v = trans[i, j] + prior[t, lab[i, j]] + emis[t, j] + beta[j]
                if v > m:
                    m = v
            if m == NEG_INF:
                beta_prev[i] = NEG_INF
            else:
                s = 0.0
                for j in range(N):
                    v = trans[i, j] + prior[t, lab[i, j]] + emis[t, j] + beta[j]
                    s += np.exp(v - m)
                beta_prev[i] = m + np.log(s)
        beta, beta_prev = beta_prev, beta

    m = NEG_INF
    for j in range(N):
        v = alpha[T - 1, j] + term[j]
        if v > m:
            m = v
    if m == NEG_INF:
        logz = NEG_INF
    else:
        s = 0.0
        for j in range(N):
            s += np.exp(alpha[T - 1, j] + term[j] - m)
        logz = m + np.log(s)
    return marg, logz
