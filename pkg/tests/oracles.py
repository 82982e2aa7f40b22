"""Independent brute-force references for the trellis recursions.

Everything here enumerates complete state paths and sums their weights
with scipy's logsumexp: no recursion, no shared code with the package.
Only usable for tiny (T, N); that's the point.
"""

import itertools

import numpy as np
from scipy.special import logsumexp


def path_weights(metrics, init, term=None):
    """All (path, log weight) pairs; a path includes the pre-initial state."""
    T, N, _ = metrics.shape
    if term is None:
        term = np.zeros(N)
    out = []
    for path in itertools.product(range(N), repeat=T + 1):
        w = init[path[0]] + term[path[T]]
        for t in range(T):
            w += metrics[t][path[t]][path[t + 1]]
        out.append((path, w))
    return out


def brute_alpha(metrics, init):
    T, N, _ = metrics.shape
    alpha = np.empty((T, N))
    for t in range(T):
        for j in range(N):
            vals = []
            for path in itertools.product(range(N), repeat=t + 2):
                if path[t + 1] != j:
                    continue
                w = init[path[0]]
                for u in range(t + 1):
                    w += metrics[u][path[u]][path[u + 1]]
                vals.append(w)
            alpha[t, j] = logsumexp(vals)
    return alpha


def brute_beta(metrics, term):
    T, N, _ = metrics.shape
    beta = np.empty((T, N))
    beta[T - 1] = term
    for t in range(T - 1):
        steps = T - 1 - t  # transitions t+1 .. T-1
        for j in range(N):
            vals = []
            for path in itertools.product(range(N), repeat=steps):
                w = term[path[-1]]
                prev = j
                for k, s in enumerate(path):
                    w += metrics[t + 1 + k][prev][s]
                    prev = s
                vals.append(w)
            beta[t, j] = logsumexp(vals)
    return beta


def brute_joint(metrics, init, term=None):
    T, N, _ = metrics.shape
    weights = path_weights(metrics, init, term)
    joint = np.full((T, N, N), -np.inf)
    for t in range(T):
        for i in range(N):
            for j in range(N):
                vals = [w for path, w in weights if path[t] == i and path[t + 1] == j]
                joint[t, i, j] = logsumexp(vals)
    return joint


def brute_label_marginals(metrics, init, label_of, num_labels, term=None):
    T, N, _ = metrics.shape
    weights = path_weights(metrics, init, term)
    out = np.full((T, num_labels), -np.inf)
    for t in range(T):
        for lbl in range(num_labels):
            vals = [
                w
                for path, w in weights
                if label_of[path[t], path[t + 1]] == lbl
            ]
            if vals:
                out[t, lbl] = logsumexp(vals)
    return out


def gauss_c_pdf(y, mean, var):
    """Complex circular Gaussian density, linear domain."""
    d = y - mean
    return float(np.exp(-(d.real**2 + d.imag**2) / var) / (np.pi * var))


def brute_dpsk_joint(y, priors_chain, trans, state_vars, order, symbol_prior):
    """p(x_t = m, y) by enumerating driving-symbol and noise-state paths.

    priors_chain: stationary noise priors; trans: noise transition matrix;
    symbol_prior: (T, M) linear per-step prior on the driving symbol.
    The differential reference z_0 = 1 (phase index 0).
    """
    t_len = len(y)
    w_count = len(priors_chain)
    syms = np.exp(2j * np.pi * np.arange(order) / order)
    out = np.zeros((t_len, order))
    for xs in itertools.product(range(order), repeat=t_len):
        zs = np.cumsum(xs) % order
        base = 1.0
        for t in range(t_len):
            base *= symbol_prior[t][xs[t]]
        for ws in itertools.product(range(w_count), repeat=t_len):
            w = base * priors_chain[ws[0]]
            for t in range(1, t_len):
                w *= trans[ws[t - 1], ws[t]]
            for t in range(t_len):
                w *= gauss_c_pdf(y[t], syms[zs[t]], state_vars[ws[t]])
            for t in range(t_len):
                out[t, xs[t]] += w
    with np.errstate(divide="ignore"):
        return np.log(out)


def brute_symbol_joint(y, priors_chain, trans, state_vars, order):
    """p(z_t = m, y) for i.i.d.-uniform symbols over the noise chain."""
    t_len = len(y)
    w_count = len(priors_chain)
    syms = np.exp(2j * np.pi * np.arange(order) / order)
    out = np.zeros((t_len, order))
    for zs in itertools.product(range(order), repeat=t_len):
        base = (1.0 / order) ** t_len
        for ws in itertools.product(range(w_count), repeat=t_len):
            w = base * priors_chain[ws[0]]
            for t in range(1, t_len):
                w *= trans[ws[t - 1], ws[t]]
            for t in range(t_len):
                w *= gauss_c_pdf(y[t], syms[zs[t]], state_vars[ws[t]])
            for t in range(t_len):
                out[t, zs[t]] += w
    return np.log(out)


def brute_de_demap(z_joint_linear, symbol_prior, order):
    """Differential demapper reference: enumerate z-paths from z_0 = 0."""
    t_len = len(z_joint_linear)
    out = np.zeros((t_len, order))
    for zs in itertools.product(range(order), repeat=t_len):
        prev = 0
        w = 1.0
        xs = []
        for t in range(t_len):
            x = (zs[t] - prev) % order
            xs.append(x)
            w *= z_joint_linear[t][zs[t]] * symbol_prior[t][x]
            prev = zs[t]
        for t in range(t_len):
            out[t, xs[t]] += w
    with np.errstate(divide="ignore"):
        return np.log(out)


def brute_conv_decode(lik_linear, encode_fn, n_info, memory):
    """MAP decode reference: enumerate every payload, weight by likelihoods.

    Returns (info_joint, coded_joint) in the log domain, including the
    p(b)=1/2 prior per trellis step to match the decoder's scale.
    """
    steps = n_info + memory
    n_coded = len(lik_linear)
    info = np.zeros((steps, 2))
    coded = np.zeros((n_coded, 2))
    for payload in itertools.product((0, 1), repeat=n_info):
        bits = np.array(payload, dtype=np.int64)
        cw = encode_fn(bits)
        w = 0.5**steps
        for k in range(n_coded):
            w *= lik_linear[k][cw[k]]
        full = np.concatenate([bits, np.zeros(memory, dtype=np.int64)])
        for k in range(steps):
            info[k, full[k]] += w
        for k in range(n_coded):
            coded[k, cw[k]] += w
    with np.errstate(divide="ignore"):
        return np.log(info), np.log(coded)
