"""MAP receivers: joint and separate turbo DPSK demapping over bursty noise.

Four receiver designs share one forward-backward core:

* ``joint``: a product super-trellis pairing the differential symbol with
  the noise state; demapping and impulsive-noise tracking happen in one
  MAP pass, iterated against the convolutional decoder.
* ``separate``: a one-shot MAP noise detector produces differential-symbol
  posteriors, after which a small M-state differential demapper iterates
  with the decoder.
* ``psk_baseline``: same noise detector on a non-differential PSK frame,
  iterated with the decoder (the conventional receiver).
* ``genie_csi``: the per-symbol likelihoods are computed with the true
  noise states (perfect channel state information) and feed the
  differential demapper loop; an upper benchmark for everything else.

Messages passed between stages are per-index log-probability vectors;
extrinsic exchange divides out whatever input information a stage
consumed, and fed-back priors are renormalized and clamped to keep early
overconfidence from locking the loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import fb_marginals_structured
from .air import AuxTrellis, build_aux_trellis
from .middleton import MarkovMiddletonParams, state_variances, truncated_priors
from .trellis import (
    TrellisSpec,
    _lse_last_axis,
    backward,
    forward,
    marginalize_by_label,
    posterior_joint,
)
from .txchain import ConvCodeSpec, PskMapSpec, deinterleave, interleave

__all__ = [
    "SoftMessage",
    "DESIGNS",
    "build_super_trellis",
    "joint_dpsk_in_demap",
    "in_detect",
    "psk_in_detect",
    "genie_symbol_likelihoods",
    "de_demap",
    "conv_map_decode",
    "extrinsic_divide",
    "bits_to_symbols",
    "symbols_to_bits",
    "turbo_decode",
]

DESIGNS = ("joint", "separate", "psk_baseline", "genie_csi")

LOG_CLAMP = 50.0  # extrinsic log-probabilities live in [-LOG_CLAMP, 0]


@dataclass(frozen=True)
class SoftMessage:
    """Per-index log-probability vectors exchanged between stages.

    ``values`` has shape (num_indices, alphabet). ``role`` is one of
    "joint", "extrinsic_likelihood", "extrinsic_prior"; ``domain`` one of
    "info_bit", "coded_bit", "interleaved_bit", "symbol", "diff_symbol".
    """

    values: np.ndarray
    role: str
    domain: str

    def __len__(self):
        return len(self.values)

    @property
    def alphabet(self) -> int:
        return self.values.shape[1]

    def normalized(self) -> "SoftMessage":
        """Rescale each index to a distribution (log-sum-exp zero)."""
        vals = self.values - _lse_last_axis(self.values)[:, None]
        return SoftMessage(values=vals, role=self.role, domain=self.domain)

    def clamped(self, floor: float = -LOG_CLAMP) -> "SoftMessage":
        return SoftMessage(
            values=np.clip(self.values, floor, 0.0), role=self.role, domain=self.domain
        )


def uniform_prior(length: int, alphabet: int, domain: str) -> SoftMessage:
    vals = np.full((length, alphabet), -math.log(alphabet))
    return SoftMessage(values=vals, role="extrinsic_prior", domain=domain)


def _require_normalized(msg: SoftMessage, tol: float = 1e-6) -> None:
    norms = _lse_last_axis(msg.values)
    if not np.all(np.abs(norms) <= tol):
        raise ValueError(f"{msg.role}/{msg.domain} message is not normalized per index")


def build_super_trellis(
    rx_params: MarkovMiddletonParams, order: int, symbols: np.ndarray | None = None
) -> AuxTrellis:
    """The joint demapper's trellis: states pair the *differential* symbol
    with the noise state, and the initial state pins the z = 1 reference
    while leaving the noise state at its stationary prior."""
    aux = build_aux_trellis(rx_params, order, symbols)
    init = np.where(aux.state_sym == 0, np.log(truncated_priors(rx_params))[aux.state_w], -np.inf)
    return AuxTrellis(
        params=aux.params,
        order=aux.order,
        state_sym=aux.state_sym,
        state_w=aux.state_w,
        symbols=aux.symbols,
        variances=aux.variances,
        log_trans=aux.log_trans,
        init=init,
    )


def _channel_fb(
    y: np.ndarray, trellis: AuxTrellis, prior: np.ndarray, labels: np.ndarray
) -> np.ndarray:
    emis = trellis.emission_table(np.asarray(y, dtype=complex))
    marg, _ = fb_marginals_structured(
        emis,
        trellis.log_trans,
        np.ascontiguousarray(prior),
        np.ascontiguousarray(labels),
        trellis.init,
        np.zeros(trellis.num_states),
        trellis.order,
    )
    return marg


def joint_dpsk_in_demap(
    y: np.ndarray,
    rx_params: MarkovMiddletonParams,
    prior: SoftMessage | None = None,
    order: int = 4,
    trellis: AuxTrellis | None = None,
) -> SoftMessage:
    """Joint differential-PSK / noise-state MAP demapper.

    Returns the per-step log joint of the driving symbol x_t and the full
    received sequence, marginalized over all super-trellis transitions
    whose phase increment is x_t. ``prior`` is the extrinsic symbol prior
    fed back by the decoder (uniform on the first pass).
    """
    if trellis is None:
        trellis = build_super_trellis(rx_params, order)
    if prior is None:
        prior_vals = trellis.uniform_symbol_prior(len(y))
    else:
        if len(prior) != len(y):
            raise ValueError(f"prior length {len(prior)} does not match frame {len(y)}")
        _require_normalized(prior)
        prior_vals = prior.values
    marg = _channel_fb(y, trellis, prior_vals, trellis.symbol_step_labels())
    return SoftMessage(values=marg, role="joint", domain="symbol")


def in_detect(
    y: np.ndarray,
    rx_params: MarkovMiddletonParams,
    order: int = 4,
    trellis: AuxTrellis | None = None,
    prior: SoftMessage | None = None,
) -> SoftMessage:
    """One-shot MAP impulsive-noise detector.

    Forward-backward over the (symbol, noise-state) trellis, marginalized
    onto the transmitted symbol of each step (the to-state's symbol).
    For a differential frame that symbol is z_t; the result is computed
    once and reused across turbo iterations.
    """
    if trellis is None:
        trellis = build_aux_trellis(rx_params, order)
    if prior is None:
        prior_vals = trellis.uniform_symbol_prior(len(y))
    else:
        _require_normalized(prior)
        prior_vals = prior.values
    marg = _channel_fb(y, trellis, prior_vals, trellis.to_state_symbol_labels())
    return SoftMessage(values=marg, role="joint", domain="diff_symbol")


def psk_in_detect(
    y: np.ndarray,
    rx_params: MarkovMiddletonParams,
    prior: SoftMessage | None = None,
    order: int = 4,
    trellis: AuxTrellis | None = None,
) -> SoftMessage:
    """IN detector for plain (non-differential) PSK with a symbol prior.

    Identical trellis to :func:`in_detect` but the output is read as the
    joint over the PSK symbol x_t, and the decoder's extrinsic prior
    enters the transition probabilities on later turbo iterations.
    """
    msg = in_detect(y, rx_params, order=order, trellis=trellis, prior=prior)
    return SoftMessage(values=msg.values, role="joint", domain="symbol")


def genie_symbol_likelihoods(
    y: np.ndarray,
    rx_params: MarkovMiddletonParams,
    noise_states: np.ndarray,
    order: int = 4,
) -> SoftMessage:
    """Per-symbol likelihoods with the true noise state known.

    With w_t given, each step is a single Gaussian: no noise trellis is
    needed and the detector reduces to a memoryless soft demapper over
    the differential symbols.
    """
    y = np.asarray(y, dtype=complex)
    states = np.asarray(noise_states)
    if len(states) != len(y):
        raise ValueError("noise_states length does not match frame")
    var = state_variances(rx_params)[states]
    symbols = np.exp(2j * np.pi * np.arange(order) / order)
    d = y[:, None] - symbols[None, :]
    vals = -(d.real**2 + d.imag**2) / var[:, None] - np.log(np.pi * var)[:, None]
    return SoftMessage(values=vals, role="joint", domain="diff_symbol")


def _de_trellis(order: int) -> TrellisSpec:
    transitions = tuple(
        (zp, (zp + x) % order, x) for zp in range(order) for x in range(order)
    )
    return TrellisSpec(num_states=order, transitions=transitions, input_alphabet_size=order)


def de_demap(z_joint: SoftMessage, prior: SoftMessage | None = None) -> SoftMessage:
    """Differential demapper: M-state trellis over the accumulated phase.

    Branch metrics multiply the detector's differential-symbol joint for
    the target state with the extrinsic prior of the driving symbol x_t;
    the z = 1 reference pins the initial state.
    """
    m = z_joint.alphabet
    t = len(z_joint)
    if prior is None:
        prior = uniform_prior(t, m, "symbol")
    else:
        if len(prior) != t:
            raise ValueError("prior length does not match detector output")
        _require_normalized(prior)
    spec = _de_trellis(m)
    step = (np.arange(m)[None, :] - np.arange(m)[:, None]) % m  # x driving z' -> z
    metrics = z_joint.values[:, None, :] + prior.values[:, step]
    init = np.full(m, -np.inf)
    init[0] = 0.0
    term = np.zeros(m)
    alpha = forward(spec, metrics, init)
    beta = backward(spec, metrics, term)
    joint = posterior_joint(init, alpha, metrics, beta)
    marg = marginalize_by_label(joint, spec, step, num_labels=m)
    return SoftMessage(values=marg, role="joint", domain="symbol")


def _code_label_maps(code: ConvCodeSpec):
    next_state, out_bits = code.tables()
    n = code.num_states
    n_out = len(code.generators)
    transitions = tuple((s, int(next_state[s, b]), b) for s in range(n) for b in (0, 1))
    lab_input = np.full((n, n), -1, dtype=np.int64)
    lab_coded = np.full((n_out, n, n), -1, dtype=np.int64)
    for s in range(n):
        for b in (0, 1):
            j = next_state[s, b]
            lab_input[s, j] = b
            for g in range(n_out):
                lab_coded[g, s, j] = out_bits[s, b, g]
    spec = TrellisSpec(num_states=n, transitions=transitions, input_alphabet_size=2)
    return spec, next_state, out_bits, lab_input, lab_coded


def conv_map_decode(
    coded_lik: SoftMessage, code: ConvCodeSpec
) -> tuple[SoftMessage, SoftMessage]:
    """MAP decoder of the terminated convolutional code.

    ``coded_lik`` carries one log-likelihood pair per coded bit. Both
    trellis endpoints are pinned to state zero. Returns the log joints
    over the input bits (tail steps included) and over the coded bits.
    """
    n_out = len(code.generators)
    lik = coded_lik.values
    if lik.shape[0] % n_out:
        raise ValueError(f"coded length {lik.shape[0]} not a multiple of {n_out}")
    steps = lik.shape[0] // n_out
    if steps <= code.memory:
        raise ValueError("frame shorter than the code's tail")
    spec, next_state, out_bits, lab_input, lab_coded = _code_label_maps(code)
    n = code.num_states

    lik_steps = lik.reshape(steps, n_out, 2)
    metrics = np.full((steps, n, n), -np.inf)
    for s in range(n):
        for b in (0, 1):
            j = next_state[s, b]
            contrib = lik_steps[:, np.arange(n_out), out_bits[s, b]].sum(axis=1)
            metrics[:, s, j] = contrib - math.log(2.0)

    pinned = np.full(n, -np.inf)
    pinned[0] = 0.0
    alpha = forward(spec, metrics, pinned)
    beta = backward(spec, metrics, pinned)
    joint = posterior_joint(pinned, alpha, metrics, beta)
    info = marginalize_by_label(joint, spec, lab_input, num_labels=2)
    coded = np.empty_like(lik)
    for g in range(n_out):
        coded[g::n_out] = marginalize_by_label(joint, spec, lab_coded[g], num_labels=2)
    return (
        SoftMessage(values=info, role="joint", domain="info_bit"),
        SoftMessage(values=coded, role="joint", domain="coded_bit"),
    )


def extrinsic_divide(joint: SoftMessage, used_input: SoftMessage) -> SoftMessage:
    """Remove consumed input information: log-domain elementwise quotient."""
    if joint.values.shape != used_input.values.shape:
        raise ValueError(
            f"shape mismatch: joint {joint.values.shape} vs divisor {used_input.values.shape}"
        )
    bad = np.isneginf(used_input.values) & ~np.isneginf(joint.values)
    if bad.any():
        raise ValueError("extrinsic division by zero-probability")
    with np.errstate(invalid="ignore"):
        vals = joint.values - used_input.values
    # -inf dividend with -inf divisor: the branch was impossible for both;
    # keep it impossible rather than NaN
    vals[np.isnan(vals)] = -np.inf
    role = "extrinsic_likelihood" if joint.role == "joint" else joint.role
    return SoftMessage(values=vals, role=role, domain=joint.domain)


def bits_to_symbols(msg: SoftMessage, labeling: PskMapSpec) -> SoftMessage:
    """Per-symbol log-probabilities as products of independent bit terms."""
    b = labeling.bits_per_symbol
    if len(msg) % b:
        raise ValueError(f"bit message length {len(msg)} not divisible by {b}")
    t = len(msg) // b
    groups = msg.values.reshape(t, b, 2)
    bits_of = labeling.bits_of_phase()  # (M, B)
    vals = np.zeros((t, labeling.order))
    for k in range(b):
        vals += groups[:, k, :][:, bits_of[:, k]]
    return SoftMessage(values=vals, role=msg.role, domain="symbol")


def symbols_to_bits(msg: SoftMessage, labeling: PskMapSpec) -> SoftMessage:
    """Per-bit log-probabilities by summing symbols sharing the bit value."""
    m = labeling.order
    if msg.alphabet != m:
        raise ValueError(f"symbol message alphabet {msg.alphabet} does not match order {m}")
    b = labeling.bits_per_symbol
    t = len(msg)
    bits_of = labeling.bits_of_phase()  # (M, B)
    out = np.empty((t * b, 2))
    for k in range(b):
        for v in (0, 1):
            sel = bits_of[:, k] == v
            out[k::b, v] = _lse_last_axis(msg.values[:, sel])
    domain = "interleaved_bit" if msg.domain == "symbol" else msg.domain
    return SoftMessage(values=out, role=msg.role, domain=domain)


def _hard_bits(info_joint: SoftMessage) -> np.ndarray:
    vals = info_joint.values
    return (vals[:, 1] > vals[:, 0]).astype(np.int64)  # ties resolve to 0


def turbo_decode(
    y: np.ndarray,
    design: str,
    rx_params: MarkovMiddletonParams,
    iterations: int,
    interleaver: np.ndarray,
    code: ConvCodeSpec,
    labeling: PskMapSpec,
    noise_states: np.ndarray | None = None,
):
    """Run a full receiver and return (decoded info bits, per-iteration joints).

    ``iterations`` counts extrinsic feedback passes after the initial
    demap+decode, so ``iterations = 0`` runs each stage exactly once.
    ``interleaver`` is the full coded-length permutation (tail positions
    may map to themselves). The genie design additionally needs the true
    noise-state sequence.

    Returns the hard decisions for the information bits (tail excluded)
    and a list of the (num_info_bits, 2) info-bit log joints after every
    iteration.
    """
    if design not in DESIGNS:
        raise ValueError(f"unknown design {design!r}; expected one of {DESIGNS}")
    if design == "genie_csi":
        if noise_states is None:
            raise ValueError("genie_csi needs the true noise-state sequence")
    elif noise_states is not None:
        raise ValueError(f"noise_states only applies to genie_csi, not {design}")

    y = np.asarray(y, dtype=complex)
    t = len(y)
    m = labeling.order
    b = labeling.bits_per_symbol
    n_coded = t * b
    if len(interleaver) != n_coded:
        raise ValueError(f"interleaver depth {len(interleaver)} != coded length {n_coded}")
    n_out = len(code.generators)
    steps = n_coded // n_out
    n_info = steps - code.memory

    # stage-one detector output that never changes across iterations
    if design == "separate":
        z_joint = in_detect(y, rx_params, order=m)
    elif design == "genie_csi":
        z_joint = genie_symbol_likelihoods(y, rx_params, noise_states, order=m)
    elif design == "joint":
        super_trellis = build_super_trellis(rx_params, m)
    else:  # psk_baseline
        psk_trellis = build_aux_trellis(rx_params, m)

    prior_d = uniform_prior(n_coded, 2, "interleaved_bit")
    history = []
    decoded = None
    for it in range(iterations + 1):
        prior_sym = bits_to_symbols(prior_d, labeling)
        if design == "joint":
            sym_joint = joint_dpsk_in_demap(y, rx_params, prior_sym, trellis=super_trellis)
        elif design == "psk_baseline":
            sym_joint = psk_in_detect(y, rx_params, prior_sym, trellis=psk_trellis)
        else:
            sym_joint = de_demap(z_joint, prior_sym)

        d_joint = symbols_to_bits(sym_joint, labeling)
        ext_lik_d = extrinsic_divide(d_joint, prior_d)
        ext_lik_c = SoftMessage(
            values=deinterleave(ext_lik_d.values, interleaver),
            role="extrinsic_likelihood",
            domain="coded_bit",
        ).normalized().clamped()

        info_joint, coded_joint = conv_map_decode(ext_lik_c, code)
        info_payload = SoftMessage(
            values=info_joint.values[:n_info], role="joint", domain="info_bit"
        )
        history.append(info_payload.values)
        decoded = _hard_bits(info_payload)

        if it == iterations:
            break
        ext_prior_c = extrinsic_divide(coded_joint, ext_lik_c)
        prior_d = SoftMessage(
            values=interleave(ext_prior_c.values, interleaver),
            role="extrinsic_prior",
            domain="interleaved_bit",
        ).normalized().clamped()

    return decoded, history
