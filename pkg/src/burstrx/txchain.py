"""Transmitter chain: convolutional code, interleaver, PSK and DPSK.

The frame pipeline is: info bits -> terminated rate-1/(n) feedforward
convolutional encoder -> seeded uniform bit interleaver (info-driven
coded bits only; the tail's coded bits ride along unpermuted at the end)
-> Gray-labeled M-PSK mapper -> differential symbol encoder -> additive
noise channel. Symbols are tracked as integer phase indices, so
differential encoding is exact index arithmetic mod M.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .middleton import NoiseRealization

__all__ = [
    "ConvCodeSpec",
    "PskMapSpec",
    "SymbolFrame",
    "default_conv_code",
    "psk_spec",
    "conv_encode",
    "make_interleaver",
    "interleave",
    "deinterleave",
    "psk_map",
    "psk_demap_hard",
    "differential_encode",
    "apply_channel",
]


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


@dataclass(frozen=True)
class ConvCodeSpec:
    """Feedforward convolutional code with an L-stage shift register.

    ``generators`` are octal-style integers whose binary digits are the
    taps over (current bit, previous bit, ...); e.g. 0o5 = 101 taps the
    current and the second-last bit. Rate is 1 / len(generators).
    """

    memory: int
    generators: tuple

    def __post_init__(self):
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if not self.generators:
            raise ValueError("need at least one generator polynomial")
        for g in self.generators:
            if not 0 < g < (1 << (self.memory + 1)):
                raise ValueError(
                    f"generator {g:o} (octal) does not fit {self.memory + 1} taps"
                )

    @property
    def rate(self) -> Fraction:
        return Fraction(1, len(self.generators))

    @property
    def num_states(self) -> int:
        return 1 << self.memory

    def tables(self):
        """(next_state, out_bits) lookup tables.

        next_state[s, b] is the register state after input bit b in state
        s; out_bits[s, b, g] the corresponding coded bit of generator g.
        States pack the most recent bit in the MSB.
        """
        n_states = self.num_states
        n_out = len(self.generators)
        next_state = np.empty((n_states, 2), dtype=np.int64)
        out_bits = np.empty((n_states, 2, n_out), dtype=np.int64)
        for s in range(n_states):
            for b in (0, 1):
                reg = (b << self.memory) | s
                next_state[s, b] = (b << (self.memory - 1)) | (s >> 1)
                for gi, g in enumerate(self.generators):
                    out_bits[s, b, gi] = _parity(g & reg)
        return next_state, out_bits


def default_conv_code() -> ConvCodeSpec:
    """The stock rate-1/2, memory-2 code with generators (5, 7) octal."""
    return ConvCodeSpec(memory=2, generators=(0o5, 0o7))


@dataclass(frozen=True)
class PskMapSpec:
    """M-PSK constellation with a bit labeling.

    ``phase_of_bits[v]`` is the phase index of the symbol labeled by the
    bit group read as a binary number (first bit = MSB). Constellation
    points are exp(2j*pi*i/M): unit energy.
    """

    order: int
    phase_of_bits: tuple

    def __post_init__(self):
        m = self.order
        if m < 1 or (m & (m - 1)):
            raise ValueError(f"order must be a power of two, got {m}")
        if sorted(self.phase_of_bits) != list(range(m)):
            raise ValueError("labeling must be a bijection onto phase indices")

    @property
    def bits_per_symbol(self) -> int:
        return int(self.order).bit_length() - 1

    def bits_of_phase(self) -> np.ndarray:
        """(M, bits_per_symbol) inverse labeling table."""
        b = self.bits_per_symbol
        out = np.zeros((self.order, max(b, 1)), dtype=np.int64)
        for v, phase in enumerate(self.phase_of_bits):
            for k in range(b):
                out[phase, k] = (v >> (b - 1 - k)) & 1
        return out[:, :b] if b else out[:, :0]

    def symbol_values(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.arange(self.order) / self.order)


def psk_spec(order: int) -> PskMapSpec:
    """Gray-labeled M-PSK: adjacent constellation points differ in one bit."""
    phase_of_bits = [0] * order
    for i in range(order):
        phase_of_bits[i ^ (i >> 1)] = i
    return PskMapSpec(order=order, phase_of_bits=tuple(phase_of_bits))


@dataclass(frozen=True)
class SymbolFrame:
    """A PSK symbol sequence held as integer phase indices."""

    indices: np.ndarray  # (T,) int in [0, order)
    order: int

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.ndim != 1:
            raise ValueError("indices must be one-dimensional")
        if idx.size and (idx.min() < 0 or idx.max() >= self.order):
            raise ValueError("phase index out of range")

    def __len__(self):
        return len(self.indices)

    @property
    def values(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.indices / self.order)


def conv_encode(bits: np.ndarray, spec: ConvCodeSpec | None = None) -> np.ndarray:
    """Encode and terminate: L zero tail bits drive the register home.

    Output length is len(generators) * (K + L) coded bits for K input
    bits; both start and end states are 0.
    """
    if spec is None:
        spec = default_conv_code()
    bits = np.asarray(bits, dtype=np.int64)
    if bits.ndim != 1:
        raise ValueError("bits must be one-dimensional")
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise ValueError("bits must be 0/1")
    next_state, out_bits = spec.tables()
    padded = np.concatenate([bits, np.zeros(spec.memory, dtype=np.int64)])
    n_out = len(spec.generators)
    coded = np.empty(padded.size * n_out, dtype=np.int64)
    s = 0
    for k, b in enumerate(padded):
        coded[k * n_out : (k + 1) * n_out] = out_bits[s, b]
        s = next_state[s, b]
    return coded


def make_interleaver(depth: int, seed) -> np.ndarray:
    """Uniformly random permutation of [0, depth), deterministic in seed."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.permutation(depth)


def interleave(x: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Permute along axis 0: out[k] = x[perm[k]]."""
    if len(x) != len(perm):
        raise ValueError(f"length mismatch: {len(x)} values vs permutation {len(perm)}")
    return x[perm]


def deinterleave(y: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Inverse of :func:`interleave`: out[perm[k]] = y[k]."""
    if len(y) != len(perm):
        raise ValueError(f"length mismatch: {len(y)} values vs permutation {len(perm)}")
    out = np.empty_like(y)
    out[perm] = y
    return out


def psk_map(bits: np.ndarray, spec: PskMapSpec) -> SymbolFrame:
    """Group log2(M) bits per symbol and map through the labeling."""
    bits = np.asarray(bits, dtype=np.int64)
    b = spec.bits_per_symbol
    if b == 0:
        raise ValueError("cannot map bits onto a single-point constellation")
    if bits.size % b:
        raise ValueError(f"bit count {bits.size} not divisible by {b}")
    groups = bits.reshape(-1, b)
    weights = 1 << np.arange(b - 1, -1, -1)
    vals = groups @ weights
    phase = np.asarray(spec.phase_of_bits, dtype=np.int64)[vals]
    return SymbolFrame(indices=phase, order=spec.order)


def psk_demap_hard(frame: SymbolFrame, spec: PskMapSpec) -> np.ndarray:
    """Inverse of :func:`psk_map` for exact phase indices."""
    return spec.bits_of_phase()[frame.indices].reshape(-1)


def differential_encode(x: SymbolFrame) -> SymbolFrame:
    """z_t = x_t * z_{t-1} with reference z_0 = 1, as index sums mod M."""
    z = np.cumsum(x.indices) % x.order
    return SymbolFrame(indices=z, order=x.order)


def apply_channel(z: SymbolFrame, noise: NoiseRealization) -> np.ndarray:
    """Received sequence y_t = z_t + n_t (complex, symbol rate)."""
    if len(z) != len(noise):
        raise ValueError(f"length mismatch: {len(z)} symbols vs {len(noise)} noise samples")
    return z.values + noise.samples
