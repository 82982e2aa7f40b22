"""Generic log-domain forward-backward (BCJR) inference on a trellis.

Every detector, demapper and decoder in this package is an instantiation
of the same machinery: a finite-state chain, a per-step branch-metric
table in the log domain, and the forward/backward recursions that yield
joint state-pair posteriors. Branch metrics are precomputed dense
``(T, N, N)`` tables, with ``-inf`` encoding forbidden transitions; the
engine itself is pure and allocation-predictable.

Conventions: ``metrics[t, i, j]`` is the log branch metric for moving
from state ``i`` at step ``t-1`` to state ``j`` at step ``t``. The
``init`` vector is the log distribution of the state *before* the first
step; metrics at t = 0 already fold in whatever the first step's
transition law is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

__all__ = [
    "TrellisSpec",
    "log_sum_exp",
    "forward",
    "backward",
    "posterior_joint",
    "marginalize_by_label",
]


@dataclass(frozen=True)
class TrellisSpec:
    """A deterministic labeled trellis section.

    ``transitions`` holds (from_state, to_state, input_label) triples; a
    given (from_state, input_label) pair must lead to exactly one
    to_state. Parallel branches of a product chain get distinct labels,
    so this covers the noise-state product trellises too.
    """

    num_states: int
    transitions: tuple
    input_alphabet_size: int

    def __post_init__(self):
        if self.num_states < 1:
            raise ValueError("num_states must be positive")
        if self.input_alphabet_size < 1:
            raise ValueError("input_alphabet_size must be positive")
        seen = {}
        for (i, j, u) in self.transitions:
            if not (0 <= i < self.num_states and 0 <= j < self.num_states):
                raise ValueError(f"state index out of range in transition {(i, j, u)}")
            if not (0 <= u < self.input_alphabet_size):
                raise ValueError(f"input label out of range in transition {(i, j, u)}")
            if (i, u) in seen and seen[(i, u)] != j:
                raise ValueError(
                    f"trellis not deterministic: ({i}, input {u}) reaches both "
                    f"{seen[(i, u)]} and {j}"
                )
            seen[(i, u)] = j

    def allowed_mask(self) -> np.ndarray:
        """Boolean (N, N) matrix of transitions present in the spec."""
        mask = np.zeros((self.num_states, self.num_states), dtype=bool)
        for (i, j, _) in self.transitions:
            mask[i, j] = True
        return mask


def log_sum_exp(values) -> float:
    """log(sum(exp(v) for v in values)) via max shift.

    Returns -inf iff every input is -inf; never NaN. Raises on an empty
    input ("empty reduction").
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("empty reduction")
    m = arr.max()
    if m == -np.inf:
        return -np.inf
    return float(m + np.log(np.sum(np.exp(arr - m))))


def _lse_last_axis(arr: np.ndarray) -> np.ndarray:
    """Vectorized log-sum-exp over the last axis, -inf safe."""
    m = np.max(arr, axis=-1)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = m_safe + np.log(np.sum(np.exp(arr - m_safe[..., None]), axis=-1))
    return np.where(m == -np.inf, -np.inf, out)


def _check_metrics(metrics: np.ndarray, num_states: int) -> np.ndarray:
    metrics = np.ascontiguousarray(metrics, dtype=float)
    if metrics.ndim != 3 or metrics.shape[1] != num_states or metrics.shape[2] != num_states:
        raise ValueError(
            f"metrics must have shape (T, {num_states}, {num_states}), got {metrics.shape}"
        )
    if metrics.shape[0] < 1:
        raise ValueError("metrics must cover at least one step")
    if np.isnan(metrics).any():
        raise ValueError("branch metrics contain NaN")
    return metrics


def _check_boundary(vec: np.ndarray, num_states: int, name: str) -> np.ndarray:
    vec = np.ascontiguousarray(vec, dtype=float)
    if vec.shape != (num_states,):
        raise ValueError(f"{name} must have {num_states} entries, got shape {vec.shape}")
    if np.isnan(vec).any():
        raise ValueError(f"{name} contains NaN")
    return vec


def forward(trellis: TrellisSpec, metrics: np.ndarray, init: np.ndarray) -> np.ndarray:
    """Forward recursion; returns the (T, N) log array alpha.

    ``alpha[t, j]`` is the log joint of being in state j after step t and
    the observations folded into metrics up to and including step t.
    ``init`` is the log distribution over the pre-initial state.
    """
    metrics = _check_metrics(metrics, trellis.num_states)
    init = _check_boundary(init, trellis.num_states, "init")
    return _kernels.forward_dense(metrics, init)


def backward(trellis: TrellisSpec, metrics: np.ndarray, term: np.ndarray) -> np.ndarray:
    """Backward recursion; returns the (T, N) log array beta.

    ``beta[t, j]`` is the log probability of the observations after step
    t given state j at step t; the last row equals ``term`` (all zeros
    for an open-ended chain, a pinned log-indicator for a terminated
    one).
    """
    metrics = _check_metrics(metrics, trellis.num_states)
    term = _check_boundary(term, trellis.num_states, "term")
    return _kernels.backward_dense(metrics, term)


def posterior_joint(
    init: np.ndarray, alpha: np.ndarray, metrics: np.ndarray, beta: np.ndarray
) -> np.ndarray:
    """Joint log posterior over state pairs at every step.

    ``out[t, i, j] = alpha[t-1, i] + metrics[t, i, j] + beta[t, j]`` with
    ``init`` standing in for ``alpha[-1]``. The log-sum-exp over (i, j)
    is the same for every t: the log evidence of the whole sequence.
    """
    T, N = alpha.shape
    metrics = _check_metrics(metrics, N)
    if beta.shape != (T, N):
        raise ValueError(f"beta shape {beta.shape} does not match alpha {alpha.shape}")
    init = _check_boundary(init, N, "init")
    aprev = np.concatenate([init[None, :], alpha[:-1]], axis=0)
    return aprev[:, :, None] + metrics + beta[:, None, :]


def marginalize_by_label(
    joint: np.ndarray, trellis: TrellisSpec, label_of: np.ndarray, num_labels: int | None = None
) -> np.ndarray:
    """Collapse state-pair posteriors onto transition labels.

    ``label_of`` is an (N, N) integer matrix assigning each transition a
    label in [0, num_labels); entries for transitions absent from the
    trellis may be -1. Raises if an allowed transition is unlabeled.
    """
    N = trellis.num_states
    label_of = np.asarray(label_of)
    if label_of.shape != (N, N):
        raise ValueError(f"label_of must be ({N}, {N}), got {label_of.shape}")
    mask = trellis.allowed_mask()
    if (label_of[mask] < 0).any():
        raise ValueError("unlabeled allowed transition")
    if num_labels is None:
        num_labels = int(label_of[mask].max()) + 1
    T = joint.shape[0]
    out = np.full((T, num_labels), -np.inf)
    flat = joint.reshape(T, N * N)
    labels_flat = label_of.reshape(N * N)
    for lbl in range(num_labels):
        sel = (labels_flat == lbl) & mask.reshape(N * N)
        if sel.any():
            out[:, lbl] = _lse_last_axis(flat[:, sel])
    return out
