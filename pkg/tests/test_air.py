import itertools
import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from burstrx.air import (
    build_aux_trellis,
    estimate_air,
    log_p_y,
    log_p_y_given_x,
    sigma0_from_snr_db,
)
from burstrx.middleton import (
    MarkovMiddletonParams,
    state_variances,
    transition_matrix,
    truncated_priors,
)
from burstrx.txchain import SymbolFrame


def params(W=2, A=0.3, lam=10.0, r=0.5, var=0.8):
    return MarkovMiddletonParams(
        num_states=W, impulsive_index=A, power_ratio=lam, correlation=r, background_var=var
    )


def gauss_c(y, mean, var):
    """Complex circular Gaussian density via an independent bivariate normal."""
    return multivariate_normal.pdf(
        [y.real, y.imag], mean=[mean.real, mean.imag], cov=var / 2 * np.eye(2)
    )


def brute_p_y(y, p, order):
    """Sum over every symbol path and noise-state path."""
    pri = truncated_priors(p)
    mat = transition_matrix(p)
    var = state_variances(p)
    syms = np.exp(2j * np.pi * np.arange(order) / order)
    t = len(y)
    total = 0.0
    for xs in itertools.product(range(order), repeat=t):
        for ws in itertools.product(range(p.num_states), repeat=t):
            w = (1.0 / order) ** t * pri[ws[0]]
            for k in range(1, t):
                w *= mat[ws[k - 1], ws[k]]
            for k in range(t):
                w *= gauss_c(y[k], syms[xs[k]], var[ws[k]])
            total += w
    return math.log(total)


def brute_p_y_given_x(y, xs, p, order):
    pri = truncated_priors(p)
    mat = transition_matrix(p)
    var = state_variances(p)
    syms = np.exp(2j * np.pi * np.arange(order) / order)
    t = len(y)
    total = 0.0
    for ws in itertools.product(range(p.num_states), repeat=t):
        w = pri[ws[0]]
        for k in range(1, t):
            w *= mat[ws[k - 1], ws[k]]
        for k in range(t):
            w *= gauss_c(y[k], syms[xs[k]], var[ws[k]])
        total += w
    return math.log(total)


class TestAuxTrellis:
    def test_state_count_and_row_sums(self):
        trellis = build_aux_trellis(params(W=2), 4)
        assert trellis.num_states == 8
        rows = np.exp(trellis.log_trans - math.log(4)).sum(axis=1)
        assert np.allclose(rows, 1.0, atol=1e-12)

    def test_single_noise_state_rows_are_uniform(self):
        trellis = build_aux_trellis(params(W=1), 4)
        rows = np.exp(trellis.log_trans - math.log(4))
        assert np.allclose(rows, 0.25, atol=1e-15)

    def test_degenerate_single_symbol_reduces_to_noise_chain(self):
        p = params(W=3, r=0.4)
        trellis = build_aux_trellis(p, 1)
        assert np.allclose(np.exp(trellis.log_trans), transition_matrix(p), atol=1e-12)

    def test_init_is_normalized(self):
        trellis = build_aux_trellis(params(W=4), 4)
        assert np.exp(trellis.init).sum() == pytest.approx(1.0, abs=1e-12)


class TestLogPY:
    def test_single_step_two_point_mixture(self):
        p = params(W=1, var=0.6)
        trellis = build_aux_trellis(p, 2)
        y = np.array([0.35 - 0.2j])
        expected = math.log(
            0.5 * gauss_c(y[0], 1 + 0j, 0.6) + 0.5 * gauss_c(y[0], -1 + 0j, 0.6)
        )
        assert log_p_y(y, trellis) == pytest.approx(expected, abs=1e-9)

    def test_matches_exhaustive_sum(self):
        p = params(W=2, r=0.5)
        trellis = build_aux_trellis(p, 2)
        rng = np.random.default_rng(8)
        y = rng.normal(size=3) + 1j * rng.normal(size=3)
        assert log_p_y(y, trellis) == pytest.approx(brute_p_y(y, p, 2), abs=1e-9)

    def test_global_phase_rotation_invariance(self):
        p = params(W=2)
        rng = np.random.default_rng(9)
        y = rng.normal(size=16) + 1j * rng.normal(size=16)
        rot = np.exp(1j * 0.41)
        plain = build_aux_trellis(p, 4)
        rotated = build_aux_trellis(
            p, 4, symbols=np.exp(2j * np.pi * np.arange(4) / 4) * rot
        )
        assert log_p_y(y * rot, rotated) == pytest.approx(log_p_y(y, plain), abs=1e-9)


class TestLogPYGivenX:
    def test_awgn_factorization(self):
        p = params(W=1, var=0.5)
        trellis = build_aux_trellis(p, 4)
        rng = np.random.default_rng(10)
        idx = rng.integers(0, 4, 6)
        x = SymbolFrame(indices=idx, order=4)
        y = x.values + 0.3 * (rng.normal(size=6) + 1j * rng.normal(size=6))
        expected = sum(
            math.log(gauss_c(y[k], x.values[k], 0.5)) for k in range(6)
        )
        assert log_p_y_given_x(y, x, trellis) == pytest.approx(expected, abs=1e-9)

    def test_matches_exhaustive_sum(self):
        p = params(W=2, r=0.7)
        trellis = build_aux_trellis(p, 2)
        rng = np.random.default_rng(11)
        idx = rng.integers(0, 2, 3)
        y = rng.normal(size=3) + 1j * rng.normal(size=3)
        expected = brute_p_y_given_x(y, idx, p, 2)
        got = log_p_y_given_x(y, SymbolFrame(indices=idx, order=2), trellis)
        assert got == pytest.approx(expected, abs=1e-9)

    def test_rate_nonnegative_in_expectation(self):
        p = params(W=2, A=0.5, lam=5.0, r=0.3, var=0.9)
        trellis = build_aux_trellis(p, 2)
        rng = np.random.default_rng(12)
        diffs = []
        for _ in range(100):
            idx = rng.integers(0, 2, 50)
            x = SymbolFrame(indices=idx, order=2)
            noise_scale = np.sqrt(
                state_variances(p)[rng.choice(2, 50, p=truncated_priors(p))] / 2
            )
            y = x.values + noise_scale * (rng.normal(size=50) + 1j * rng.normal(size=50))
            diffs.append(log_p_y_given_x(y, x, trellis) - log_p_y(y, trellis))
        diffs = np.array(diffs) / 50
        se = diffs.std(ddof=1) / math.sqrt(len(diffs))
        assert diffs.mean() > -2 * se


class TestEstimateAir:
    def test_saturates_at_high_snr(self):
        p = params(W=1, A=0.3, lam=1.0, r=0.0)
        est = estimate_air(p, 4, 20.0, 2000, 4, seed=13)
        assert est.air == pytest.approx(2.0, abs=0.01)

    def test_matched_at_least_mismatched(self):
        chan = params(W=4, A=0.3, lam=10.0, r=0.9)
        rx_bad = params(W=1, A=0.3, lam=10.0, r=0.0)
        matched = estimate_air(chan, 4, 3.0, 3000, 6, seed=14)
        mismatched = estimate_air(chan, 4, 3.0, 3000, 6, seed=14, receiver=rx_bad)
        gap = matched.air - mismatched.air
        comb = math.hypot(matched.std_error, mismatched.std_error)
        assert gap > -2 * comb

    def test_seed_determinism(self):
        p = params()
        a = estimate_air(p, 4, 3.0, 500, 3, seed=15)
        b = estimate_air(p, 4, 3.0, 500, 3, seed=15)
        assert a.air == b.air and a.std_error == b.std_error

    def test_parallel_schedule_invariance(self):
        p = params()
        serial = estimate_air(p, 4, 3.0, 400, 4, seed=16, threads=1)
        parallel = estimate_air(p, 4, 3.0, 400, 4, seed=16, threads=2)
        assert serial.air == parallel.air
        assert serial.std_error == parallel.std_error

    def test_snr_sets_background_variance(self):
        p = params()
        est = estimate_air(p, 4, 7.0, 100, 2, seed=17)
        assert est.channel_params.background_var == pytest.approx(sigma0_from_snr_db(7.0))
        assert est.receiver_params.background_var == est.channel_params.background_var

    def test_bounded_by_modulation_order(self):
        p = params(W=2, A=0.3, lam=3.0, r=0.5)
        est = estimate_air(p, 2, 5.0, 3000, 5, seed=18)
        assert -1e-3 <= est.air <= 1.0 + 1e-3

    def test_doubling_length_halves_variance(self):
        # consistency: across-sequence variance scales like 1/T, within
        # the wide scatter of a 15-dof variance ratio
        p = params(W=2, A=0.4, lam=8.0, r=0.6)
        short = estimate_air(p, 4, 3.0, 2000, 16, seed=100)
        long_ = estimate_air(p, 4, 3.0, 4000, 16, seed=101)
        ratio = (short.std_error / long_.std_error) ** 2
        assert 1.2 < ratio < 3.4
