"""Simulation-based achievable information rate for PSK over bursty noise.

The rate estimate is the normalized difference of two sequence
log-likelihoods, log p(y|x) - log p(y), each computed by a forward
recursion over an auxiliary product trellis whose states pair a PSK
symbol with a noise state. Running the recursions with parameters other
than the true channel's gives the mismatched-decoding rate (an
auxiliary-channel lower bound).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ._kernels import logz_structured
from .middleton import (
    MarkovMiddletonParams,
    sample_noise,
    state_variances,
    transition_matrix,
    truncated_priors,
)
from .txchain import SymbolFrame

__all__ = [
    "AuxTrellis",
    "AirEstimate",
    "build_aux_trellis",
    "log_p_y",
    "log_p_y_given_x",
    "estimate_air",
    "sigma0_from_snr_db",
]

LOG2 = math.log(2.0)


def sigma0_from_snr_db(snr_db: float) -> float:
    """Background variance for unit-energy symbols: SNR = 1 / sigma0^2."""
    return 10.0 ** (-snr_db / 10.0)


@dataclass(frozen=True)
class AuxTrellis:
    """Product trellis over (symbol, noise state) pairs.

    State s = sym * W + w carries the constellation point ``symbols[s]``
    and the noise variance ``variances[s]``. ``log_trans[i, j]`` holds
    the noise-chain transition log-probability between the states' noise
    components; the symbol prior is supplied per step by the caller.
    """

    params: MarkovMiddletonParams
    order: int
    state_sym: np.ndarray  # (N,) phase index of each state
    state_w: np.ndarray  # (N,) noise state of each state
    symbols: np.ndarray  # (N,) complex constellation point of each state
    variances: np.ndarray  # (N,) noise variance of each state
    log_trans: np.ndarray  # (N, N) log P[w_i, w_j]
    init: np.ndarray  # (N,) log p'(w)/M

    @property
    def num_states(self) -> int:
        return len(self.state_sym)

    def emission_table(self, y: np.ndarray) -> np.ndarray:
        """(T, N) per-state complex-Gaussian log-likelihoods of y."""
        d = y[:, None] - self.symbols[None, :]
        return -(d.real**2 + d.imag**2) / self.variances - np.log(np.pi * self.variances)

    def uniform_symbol_prior(self, length: int) -> np.ndarray:
        return np.full((length, self.order), -math.log(self.order))

    def to_state_symbol_labels(self) -> np.ndarray:
        """(N, N) label map: the to-state's symbol index."""
        n = self.num_states
        return np.broadcast_to(self.state_sym[None, :], (n, n)).copy()

    def symbol_step_labels(self) -> np.ndarray:
        """(N, N) label map: phase increment from from-state to to-state."""
        return (self.state_sym[None, :] - self.state_sym[:, None]) % self.order


def build_aux_trellis(
    rx_params: MarkovMiddletonParams, order: int, symbols: np.ndarray | None = None
) -> AuxTrellis:
    """Assemble the M*W-state trellis for the given receiver parameters.

    ``symbols`` overrides the default constellation exp(2j*pi*k/M)
    (same order), e.g. for a rotated reference.
    """
    w = rx_params.num_states
    if symbols is None:
        symbols = np.exp(2j * np.pi * np.arange(order) / order)
    symbols = np.asarray(symbols, dtype=complex)
    if symbols.shape != (order,):
        raise ValueError(f"need {order} constellation points, got {symbols.shape}")

    state_sym = np.repeat(np.arange(order), w)
    state_w = np.tile(np.arange(w), order)
    var = state_variances(rx_params)
    log_p = np.log(transition_matrix(rx_params))
    priors = truncated_priors(rx_params)
    return AuxTrellis(
        params=rx_params,
        order=order,
        state_sym=state_sym,
        state_w=state_w,
        symbols=symbols[state_sym],
        variances=var[state_w],
        log_trans=log_p[np.ix_(state_w, state_w)].copy(),
        init=np.log(priors[state_w]) - math.log(order),
    )


def log_p_y(y: np.ndarray, trellis: AuxTrellis) -> float:
    """Log-density of the received sequence under the trellis model."""
    y = np.asarray(y, dtype=complex)
    if y.size == 0:
        raise ValueError("empty frame")
    emis = trellis.emission_table(y)
    prior = trellis.uniform_symbol_prior(len(y))
    lab = trellis.to_state_symbol_labels()
    return float(logz_structured(emis, trellis.log_trans, prior, lab, trellis.init))


def log_p_y_given_x(y: np.ndarray, x: SymbolFrame, trellis: AuxTrellis) -> float:
    """Log-density of y conditioned on the transmitted symbol sequence.

    The forward pass restricts each step to the transmitted symbol's
    states and the uniform symbol prior is divided back out at the end.
    """
    y = np.asarray(y, dtype=complex)
    if len(y) != len(x):
        raise ValueError(f"length mismatch: {len(y)} observations vs {len(x)} symbols")
    if x.order != trellis.order:
        raise ValueError("symbol frame order does not match trellis")
    t = len(y)
    emis = trellis.emission_table(y)
    prior = np.full((t, trellis.order), -np.inf)
    prior[np.arange(t), x.indices] = -math.log(trellis.order)
    lab = trellis.to_state_symbol_labels()
    log_joint = float(logz_structured(emis, trellis.log_trans, prior, lab, trellis.init))
    return log_joint + t * math.log(trellis.order)


@dataclass(frozen=True)
class AirEstimate:
    """Across-sequence mean rate in bits/symbol with its standard error."""

    air: float
    std_error: float
    n_sequences: int
    seq_length: int
    snr_db: float
    order: int
    channel_params: MarkovMiddletonParams
    receiver_params: MarkovMiddletonParams


def _sequence_rate_bits(
    channel: MarkovMiddletonParams,
    trellis: AuxTrellis,
    order: int,
    seq_length: int,
    seed,
    index: int,
) -> float:
    sym_rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(index, 0))
    )
    x = SymbolFrame(indices=sym_rng.integers(0, order, size=seq_length), order=order)
    noise = sample_noise(
        channel, seq_length, np.random.SeedSequence(entropy=seed, spawn_key=(index, 1))
    )
    y = x.values + noise.samples
    rate_nats = (log_p_y_given_x(y, x, trellis) - log_p_y(y, trellis)) / seq_length
    return rate_nats / LOG2


def estimate_air(
    channel: MarkovMiddletonParams,
    order: int,
    snr_db: float,
    seq_length: int,
    n_sequences: int,
    seed,
    receiver: MarkovMiddletonParams | None = None,
    threads: int = 1,
) -> AirEstimate:
    """Monte-Carlo information rate between uniform M-PSK input and output.

    Noise is drawn from ``channel``; both likelihood recursions use
    ``receiver`` (defaults to matched). The background variance of both
    is pinned by ``snr_db``: the receiver is never mismatched in
    sigma0^2, only in (W, A, power ratio, correlation). Per-sequence
    seeds derive from (seed, sequence index), so results do not depend
    on the execution schedule.
    """
    if seq_length < 1 or n_sequences < 1:
        raise ValueError("seq_length and n_sequences must be >= 1")
    sigma0 = sigma0_from_snr_db(snr_db)
    chan = replace(channel, background_var=sigma0)
    rx = replace(receiver if receiver is not None else channel, background_var=sigma0)
    trellis = build_aux_trellis(rx, order)

    if threads > 1 and n_sequences > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rates = list(
                pool.map(
                    _sequence_rate_bits,
                    [chan] * n_sequences,
                    [trellis] * n_sequences,
                    [order] * n_sequences,
                    [seq_length] * n_sequences,
                    [seed] * n_sequences,
                    range(n_sequences),
                )
            )
    else:
        rates = [
            _sequence_rate_bits(chan, trellis, order, seq_length, seed, i)
            for i in range(n_sequences)
        ]
    rates = np.asarray(rates)
    std_error = (
        float(rates.std(ddof=1) / math.sqrt(n_sequences)) if n_sequences > 1 else float("nan")
    )
    return AirEstimate(
        air=float(rates.mean()),
        std_error=std_error,
        n_sequences=n_sequences,
        seq_length=seq_length,
        snr_db=snr_db,
        order=order,
        channel_params=chan,
        receiver_params=rx,
    )
