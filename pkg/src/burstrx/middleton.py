"""Markov-Middleton bursty impulsive noise model.

A finite-state noise model: each sample is drawn from a zero-mean
circularly-symmetric complex Gaussian whose variance depends on a hidden
noise state, and the state sequence follows a stationary Markov chain.
State 0 is the background-noise state; states j >= 1 are impulsive states
of increasing power. Four parameters shape the model: the impulsive index
``A`` (how often impulses occur), the impulsive-to-background power ratio
``lam`` (how strong they are), the correlation ``r`` (how bursty they are)
and the background variance ``sigma0_sq``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MarkovMiddletonParams",
    "NoiseRealization",
    "truncated_priors",
    "state_variances",
    "transition_matrix",
    "sample_noise",
    "log_likelihood",
    "average_powers",
]


@dataclass(frozen=True)
class MarkovMiddletonParams:
    """Parameters of a W-state Markov-Middleton noise model.

    Attributes
    ----------
    num_states : int
        Number of noise states W (>= 1). State 0 is background noise.
    impulsive_index : float
        Impulsive index A > 0. Larger A makes impulsive states more likely.
    power_ratio : float
        Impulsive-to-background average noise power ratio (> 0).
    correlation : float
        Burstiness parameter r in [0, 1). r = 0 gives a memoryless
        (truncated Middleton Class A) channel.
    background_var : float
        Background-state noise variance sigma0^2 > 0, counted as the
        *total* variance of the complex sample (both real dimensions).
    """

    num_states: int
    impulsive_index: float
    power_ratio: float
    correlation: float
    background_var: float

    def __post_init__(self):
        if self.num_states < 1:
            raise ValueError(f"num_states must be >= 1, got {self.num_states}")
        if not self.impulsive_index > 0:
            raise ValueError(f"impulsive_index must be > 0, got {self.impulsive_index}")
        if not self.power_ratio > 0:
            raise ValueError(f"power_ratio must be > 0, got {self.power_ratio}")
        if not 0.0 <= self.correlation < 1.0:
            raise ValueError(f"correlation must be in [0, 1), got {self.correlation}")
        if not self.background_var > 0:
            raise ValueError(f"background_var must be > 0, got {self.background_var}")


@dataclass(frozen=True)
class NoiseRealization:
    """A sampled noise sequence: hidden states and complex noise samples."""

    states: np.ndarray  # (T,) int, values in [0, W)
    samples: np.ndarray  # (T,) complex

    def __len__(self):
        return len(self.samples)


def truncated_priors(params: MarkovMiddletonParams) -> np.ndarray:
    """Stationary state probabilities of the truncated W-state model.

    The prior of state j is proportional to the Poisson weight A^j / j!,
    renormalized over the W retained states. Factorials go through
    ``lgamma`` so large W stays finite.
    """
    a = params.impulsive_index
    j = np.arange(params.num_states)
    log_terms = j * math.log(a) - np.array([math.lgamma(n + 1.0) for n in j])
    log_terms -= log_terms.max()
    terms = np.exp(log_terms)
    return terms / terms.sum()


def state_variances(params: MarkovMiddletonParams) -> np.ndarray:
    """Per-state noise variances sigma_j^2 = (1 + j * lam / A) * sigma0^2."""
    j = np.arange(params.num_states)
    scale = 1.0 + j * params.power_ratio / params.impulsive_index
    return scale * params.background_var


def transition_matrix(params: MarkovMiddletonParams) -> np.ndarray:
    """Row-stochastic state transition matrix.

    P[i, j] = r * [i == j] + (1 - r) * prior[j]; a sample either keeps its
    state (probability r) or re-draws from the stationary prior. The
    truncated priors are the stationary distribution of this chain.
    """
    w = params.num_states
    p = truncated_priors(params)
    return params.correlation * np.eye(w) + (1.0 - params.correlation) * np.tile(p, (w, 1))


def sample_noise(params: MarkovMiddletonParams, length: int, seed) -> NoiseRealization:
    """Draw a length-T noise realization (states + complex samples).

    The first state follows the stationary prior; subsequent states keep
    the previous state with probability r, otherwise re-draw from the
    prior. Conditioned on its state, each sample is circularly-symmetric
    complex Gaussian with total variance sigma_{w_t}^2. Deterministic
    given ``seed``.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(seed)
    p = truncated_priors(params)
    var = state_variances(params)

    draws = rng.choice(params.num_states, size=length, p=p)
    if params.correlation > 0.0:
        redraw = rng.random(length) < (1.0 - params.correlation)
        redraw[0] = True
        # index of the most recent re-draw decides the current state
        src = np.maximum.accumulate(np.where(redraw, np.arange(length), -1))
        states = draws[src]
    else:
        states = draws

    sigma = np.sqrt(var[states] / 2.0)
    gauss = rng.standard_normal((length, 2))
    samples = sigma * (gauss[:, 0] + 1j * gauss[:, 1])
    return NoiseRealization(states=states, samples=samples)


def log_likelihood(y: complex, x: complex, state_var: float) -> float:
    """Log-density of observation y given transmitted x in a given state.

    Circularly-symmetric complex Gaussian with total variance
    ``state_var``: -|y - x|^2 / var - ln(pi * var).
    """
    if not state_var > 0:
        raise ValueError(f"state_var must be > 0, got {state_var}")
    d = y - x
    return -(d.real * d.real + d.imag * d.imag) / state_var - math.log(math.pi * state_var)


def average_powers(params: MarkovMiddletonParams) -> tuple[float, float]:
    """Average background and impulsive noise powers (diagnostic).

    Returns (sigma_B^2, sigma_I^2) with sigma_B^2 = prior[0] * sigma0^2 and
    sigma_I^2 the prior-weighted sum of the impulsive-state variances
    (0 when W = 1). Their ratio is reported alongside sweeps; it is not a
    model input, since the power ratio enters the variance law directly.
    """
    p = truncated_priors(params)
    var = state_variances(params)
    sigma_b = float(p[0] * params.background_var)
    if params.num_states < 2:
        return sigma_b, 0.0
    sigma_i = float(np.dot(p[1:], var[1:]))
    return sigma_b, sigma_i
