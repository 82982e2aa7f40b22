import numpy as np
import pytest

from burstrx.middleton import NoiseRealization
from burstrx.txchain import (
    ConvCodeSpec,
    SymbolFrame,
    apply_channel,
    conv_encode,
    default_conv_code,
    deinterleave,
    differential_encode,
    interleave,
    make_interleaver,
    psk_demap_hard,
    psk_map,
    psk_spec,
)


class TestConvEncode:
    def test_all_zero_input(self):
        out = conv_encode(np.zeros(10, dtype=int))
        assert out.shape == (24,)  # 2 * (10 + 2)
        assert not out.any()

    def test_impulse_response(self):
        # shift-register trace of generators (5, 7) octal: 11, 01, 11
        out = conv_encode(np.array([1, 0, 0, 0]))
        assert list(out[:6]) == [1, 1, 0, 1, 1, 1]

    def test_termination_returns_to_zero(self):
        # encoding the tail of any frame leaves the register at state 0:
        # re-encoding the same bits twice in one frame ends identically
        rng = np.random.default_rng(0)
        bits = rng.integers(0, 2, 32)
        once = conv_encode(bits)
        twice = conv_encode(np.concatenate([bits, np.zeros(2, dtype=int), bits]))
        assert np.array_equal(twice[: len(once)], once)

    def test_linear_code_superposition(self):
        rng = np.random.default_rng(1)
        a = rng.integers(0, 2, 40)
        b = rng.integers(0, 2, 40)
        assert np.array_equal(
            conv_encode(a ^ b), conv_encode(a) ^ conv_encode(b)
        )

    def test_bad_inputs_rejected(self):
        with pytest.raises(ValueError):
            conv_encode(np.array([0, 2, 1]))
        with pytest.raises(ValueError):
            ConvCodeSpec(memory=2, generators=(0o17,))  # too many taps

    def test_rate_and_states(self):
        code = default_conv_code()
        assert code.rate == pytest.approx(0.5)
        assert code.num_states == 4


class TestInterleaver:
    def test_depth_one_identity(self):
        assert list(make_interleaver(1, 0)) == [0]

    def test_is_permutation(self):
        perm = make_interleaver(100_000, 7)
        assert np.array_equal(np.sort(perm), np.arange(100_000))

    def test_round_trip(self):
        rng = np.random.default_rng(2)
        perm = make_interleaver(10_000, 3)
        x = rng.integers(0, 2, 10_000)
        assert np.array_equal(deinterleave(interleave(x, perm), perm), x)

    def test_round_trip_2d(self):
        rng = np.random.default_rng(3)
        perm = make_interleaver(64, 5)
        x = rng.normal(size=(64, 2))
        assert np.array_equal(deinterleave(interleave(x, perm), perm), x)

    def test_seed_determinism(self):
        assert np.array_equal(make_interleaver(512, 9), make_interleaver(512, 9))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            interleave(np.zeros(3), make_interleaver(4, 0))


class TestPskMap:
    def test_bpsk_convention(self):
        frame = psk_map(np.array([0, 1]), psk_spec(2))
        assert np.allclose(frame.values, [1.0, -1.0])

    def test_qpsk_gray_table(self):
        spec = psk_spec(4)
        frame = psk_map(np.array([0, 0, 0, 1, 1, 1, 1, 0]), spec)
        assert list(frame.indices) == [0, 1, 2, 3]
        assert np.allclose(frame.values, [1, 1j, -1, -1j])

    def test_gray_adjacency(self):
        spec = psk_spec(8)
        bits = spec.bits_of_phase()
        for i in range(8):
            assert np.sum(bits[i] != bits[(i + 1) % 8]) == 1

    def test_demap_round_trip(self):
        spec = psk_spec(4)
        rng = np.random.default_rng(4)
        bits = rng.integers(0, 2, 1000)
        assert np.array_equal(psk_demap_hard(psk_map(bits, spec), spec), bits)

    def test_unit_energy(self):
        frame = psk_map(np.arange(8) % 2, psk_spec(4))
        assert np.allclose(np.abs(frame.values), 1.0)

    def test_misaligned_length_rejected(self):
        with pytest.raises(ValueError, match="not divisible"):
            psk_map(np.array([0, 1, 0]), psk_spec(4))


class TestDifferentialEncode:
    def test_identity_input(self):
        x = SymbolFrame(indices=np.zeros(5, dtype=int), order=4)
        z = differential_encode(x)
        assert np.allclose(z.values, 1.0)

    def test_quarter_turns(self):
        x = SymbolFrame(indices=np.array([1, 1, 1, 1]), order=4)
        z = differential_encode(x)
        assert np.allclose(z.values, [1j, -1, -1j, 1])

    def test_phase_difference_recovers_input(self):
        rng = np.random.default_rng(5)
        x = SymbolFrame(indices=rng.integers(0, 4, 200), order=4)
        z = differential_encode(x)
        zprev = np.concatenate([[1.0 + 0j], z.values[:-1]])
        assert np.allclose(z.values * np.conj(zprev), x.values)

    def test_closure_exact(self):
        rng = np.random.default_rng(6)
        x = SymbolFrame(indices=rng.integers(0, 4, 10_000), order=4)
        z = differential_encode(x)
        assert z.indices.min() >= 0 and z.indices.max() < 4


class TestApplyChannel:
    def test_zero_noise(self):
        z = SymbolFrame(indices=np.array([0, 1, 2]), order=4)
        noise = NoiseRealization(states=np.zeros(3, dtype=int), samples=np.zeros(3, dtype=complex))
        assert np.array_equal(apply_channel(z, noise), z.values)

    def test_additive_exactly(self):
        rng = np.random.default_rng(7)
        z = SymbolFrame(indices=rng.integers(0, 4, 50), order=4)
        samples = rng.normal(size=50) + 1j * rng.normal(size=50)
        noise = NoiseRealization(states=np.zeros(50, dtype=int), samples=samples)
        y = apply_channel(z, noise)
        assert np.allclose(y - z.values, samples)

    def test_length_mismatch(self):
        z = SymbolFrame(indices=np.array([0, 1]), order=4)
        noise = NoiseRealization(states=np.zeros(3, dtype=int), samples=np.zeros(3, dtype=complex))
        with pytest.raises(ValueError, match="length mismatch"):
            apply_channel(z, noise)
