import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from relaysec.af import (
    af_achievable,
    af_individual_bounds,
    af_optimize,
    af_precompute,
    af_secrecy_rate,
    af_secrecy_rates,
    af_snrs,
    af_t1,
    af_t2,
    af_total_bounds,
)
from relaysec.channel import ChannelRealization, ChannelStatistics, PowerConstraint, sample_channel
from relaysec.conic import Status
from relaysec.errors import ValidationError
from relaysec.oracle import random_search_oracle

from conftest import crandn


def af_data(seed, M, Ps=10.0, stats=(3.0, 2.0, 2.0), N0=1.0):
    ch = sample_channel(M, ChannelStatistics(*stats), N0=N0, seed=seed)
    return af_precompute(ch, Ps)


def same_magnitudes(seed, M):
    """Channel with |h_m| = |z_m|, so D_h = D_z."""
    rng = np.random.default_rng(seed)
    g, h = crandn(rng, M), crandn(rng, M)
    z = h * np.exp(2j * np.pi * rng.random(M))
    return af_precompute(ChannelRealization(g, h, z, 1.0, 1.0), 2.0)


def no_eavesdropper(seed, M):
    rng = np.random.default_rng(seed)
    ch = ChannelRealization(crandn(rng, M), crandn(rng, M), np.zeros(M), 1.0, 1.0)
    return af_precompute(ch, 2.0)


def ratio_direct(w, ch, Ps):
    """(1 + SNR_d) / (1 + SNR_e) from the relay signal model, term by term."""
    l = 1.0 / np.sqrt(np.abs(ch.g) ** 2 * Ps + ch.Nm)
    out = []
    for c in (ch.h, ch.z):
        gain = c.conj() * w * l
        signal = Ps * abs(np.sum(gain * ch.g)) ** 2
        noise = np.sum(np.abs(gain) ** 2 * ch.Nm) + ch.N0
        out.append(1.0 + signal / noise)
    return out[0] / out[1]


class TestPrecompute:
    def test_zero_gain(self):
        d = af_precompute(ChannelRealization([0.0], [1.0], [1.0], 1.0, 1.0), 4.0)
        assert_allclose(d.l, [1.0])

    def test_scaling(self):
        d = af_precompute(ChannelRealization([math.sqrt(3.0)], [1.0], [1.0], 1.0, 1.0), 1.0)
        assert_allclose(d.l, [0.5])

    def test_zero_channel(self):
        d = af_precompute(ChannelRealization([1.0, 1.0], [0.0, 2.0], [1.0, 1.0], 1.0, 1.0), 1.0)
        assert d.d_h[0] == 0.0 and d.d_h[1] > 0

    def test_relay_power_normalized(self, rng):
        ch = sample_channel(4, ChannelStatistics(2.0, 1.0, 1.0), Nm=[0.5, 1.0, 2.0, 3.0], seed=1)
        d = af_precompute(ch, 3.0)
        # E|l_m (g_m sqrt(Ps) s + n_m)|^2 = 1, so relay m transmits |w_m|^2
        assert_allclose(d.l**2 * (np.abs(ch.g) ** 2 * 3.0 + ch.Nm), 1.0)

    def test_rejects_bad_power(self):
        with pytest.raises(ValidationError):
            af_precompute(sample_channel(2, ChannelStatistics()), 0.0)


class TestSecrecyRate:
    def test_zero_weights(self):
        assert af_secrecy_rate(np.zeros(3), af_data(1, 3)) == 0.0

    def test_no_eavesdropper(self, rng):
        d = no_eavesdropper(2, 3)
        w = crandn(rng, 3)
        gd, ge = af_snrs(w, d)
        assert ge == 0.0
        assert af_secrecy_rate(w, d) == pytest.approx(math.log2(1 + gd))

    def test_symmetric_scalar(self):
        d = af_precompute(ChannelRealization([1.0], [1.0], [1.0], 1.0, 1.0), 1.0)
        assert d.l[0] ** 2 == pytest.approx(0.5)
        assert af_secrecy_rate([1.0], d) == 0.0

    def test_matches_signal_model(self, rng):
        ch = sample_channel(4, ChannelStatistics(2.0, 1.5, 1.0), Nm=[0.3, 1.0, 2.0, 0.7], N0=0.8, seed=9)
        d = af_precompute(ch, 2.5)
        for _ in range(20):
            w = crandn(rng, 4)
            expect = max(0.0, math.log2(ratio_direct(w, ch, 2.5)))
            assert af_secrecy_rate(w, d) == pytest.approx(expect, rel=1e-12, abs=1e-14)

    def test_vectorized_matches(self, rng):
        d = af_data(4, 3)
        W = crandn(rng, 30, 3)
        assert_allclose(af_secrecy_rates(W, d), [af_secrecy_rate(w, d) for w in W], atol=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_factorization(self, M, seed):
        rng = np.random.default_rng(seed)
        d = af_data(seed, M)
        for _ in range(30):
            w = crandn(rng, M) * 10.0 ** rng.uniform(-2, 2)
            gd, ge = af_snrs(w, d)
            X = np.outer(w, w.conj())
            assert af_t1(X, d) * af_t2(X, d) == pytest.approx((1 + gd) / (1 + ge), rel=1e-10)


class TestTotalBounds:
    def test_same_magnitudes(self):
        _, t2, _, _ = af_total_bounds(same_magnitudes(3, 4), 5.0)
        assert t2 == pytest.approx(1.0, abs=1e-12)

    def test_no_eavesdropper(self):
        d = no_eavesdropper(3, 3)
        t1, _, w1, _ = af_total_bounds(d, 2.0)
        assert t1 >= 1.0
        X = np.outer(w1, w1.conj())
        assert af_t1(X, d) == pytest.approx(t1, rel=1e-10)

    def test_witnesses_and_sampling(self):
        for seed in range(6):
            M = 2 + seed % 3
            d = af_data(seed, M)
            P_T = 4.0
            t1, t2, w1, w2 = af_total_bounds(d, P_T)
            assert np.vdot(w1, w1).real == pytest.approx(P_T)
            assert np.vdot(w2, w2).real == pytest.approx(P_T)
            assert af_t1(np.outer(w1, w1.conj()), d) == pytest.approx(t1, rel=1e-10)
            assert af_t2(np.outer(w2, w2.conj()), d) == pytest.approx(t2, rel=1e-10)
            rng = np.random.default_rng(seed)
            W = crandn(rng, 100_000, M)
            W *= math.sqrt(P_T) / np.linalg.norm(W, axis=1)[:, None]
            A, B = d.t1_matrices()
            quad = lambda Q: np.einsum("ki,ij,kj->k", W.conj(), Q, W).real
            assert np.max((d.N0 + quad(A)) / (d.N0 + quad(B))) <= t1 * (1 + 1e-12)
            P = np.abs(W) ** 2
            assert np.max((d.N0 + P @ d.d_z) / (d.N0 + P @ d.d_h)) <= t2 * (1 + 1e-12)


class TestIndividualBounds:
    def test_inside_total(self):
        for seed in range(4):
            d = af_data(seed, 3)
            p = np.array([0.5, 1.0, 2.0])
            b = af_individual_bounds(d, p)
            t1_u, t2_u, _, _ = af_total_bounds(d, p.sum())
            assert b.t1 <= max(1.0, t1_u) * (1 + 1e-6)
            assert b.t2 <= max(1.0, t2_u) * (1 + 1e-6)
            assert np.all(np.diag(b.X1).real <= p + 1e-9)

    def test_same_magnitudes(self):
        b = af_individual_bounds(same_magnitudes(5, 3), np.ones(3))
        assert b.t2 == pytest.approx(1.0, abs=1e-6)

    def test_scalar_grid_oracle(self):
        for seed in range(5):
            d = af_data(seed, 1)
            p1 = 2.0
            b = af_individual_bounds(d, [p1])
            x = np.linspace(0.0, p1, 200_001)
            A, B = d.t1_matrices()
            t1 = (d.N0 + A[0, 0].real * x) / (d.N0 + B[0, 0].real * x)
            t2 = (d.N0 + d.d_z[0] * x) / (d.N0 + d.d_h[0] * x)
            assert b.t1 == pytest.approx(t1.max(), rel=1e-6)
            assert b.t2 == pytest.approx(t2.max(), rel=1e-6)


class TestAchievable:
    def test_same_magnitudes(self):
        d = same_magnitudes(1, 3)
        ach = af_achievable(d, PowerConstraint.total(3.0))
        assert ach.t2_l == pytest.approx(1.0, abs=1e-12)
        assert ach.rate_bits == pytest.approx(max(0.0, math.log2(ach.t1)), abs=1e-12)

    def test_no_eavesdropper(self):
        d = no_eavesdropper(1, 3)
        for c in (PowerConstraint.total(3.0), PowerConstraint.individual(np.ones(3))):
            ach = af_achievable(d, c)
            X = ach.X
            assert ach.t2_l == pytest.approx(d.N0 / (d.N0 + np.real(np.diag(X)) @ d.d_h), rel=1e-10)
            assert ach.t2_l <= 1.0

    def test_rate_of_witness(self):
        d = af_data(2, 3)
        ach = af_achievable(d, PowerConstraint.total(3.0))
        assert ach.rate_bits == pytest.approx(af_secrecy_rate(ach.w, d), abs=1e-10)


class TestOptimize:
    @pytest.mark.parametrize("kind", ["total", "individual"])
    def test_improves_on_achievable(self, kind):
        for seed in range(4):
            M = 2 + seed % 3
            d = af_data(40 + seed, M)
            c = PowerConstraint.total(5.0) if kind == "total" else PowerConstraint.individual(np.full(M, 5.0 / M))
            res = af_optimize(d, c, N=30)
            ach = af_achievable(d, c)
            assert res.rate_bits >= ach.rate_bits - 1e-6
            products = [s.product for s in res.trace]
            assert np.all(np.diff(products) >= 0)
            assert res.status in (Status.OPTIMAL, Status.FEASIBLE)
            pw = np.abs(res.w) ** 2
            if c.has_total:
                assert np.real(np.trace(res.X)) <= 5.0 * (1 + 1e-8)
                assert pw.sum() <= 5.0 * (1 + 1e-8)
            else:
                assert np.all(np.real(np.diag(res.X)) <= c.p * (1 + 1e-8))
            if not res.rank_flagged:
                assert res.achieved_rate_bits == pytest.approx(res.rate_bits, abs=1e-4)

    def test_visited_points_within_caps(self):
        d = af_data(11, 3)
        res = af_optimize(d, PowerConstraint.total(5.0), N=30)
        t1_u, t2_u, _, _ = af_total_bounds(d, 5.0)
        for step in res.trace:
            assert step.t1 <= max(1.0, t1_u) * (1 + 1e-12)
            if step.t2 is not None:
                assert step.t2 <= max(1.0, t2_u) * (1 + 1e-6)
        X = res.X
        assert af_t1(X, d) <= t1_u * (1 + 1e-9)
        assert af_t2(X, d) <= t2_u * (1 + 1e-9)

    def test_against_random_search(self):
        for seed in range(3):
            M = 2 + seed % 2
            d = af_data(60 + seed, M)
            c = PowerConstraint.total(3.0)
            res = af_optimize(d, c)
            orc = random_search_oracle(d, c, 100_000, seed=seed)
            assert res.rate_bits >= orc.rate_bits - 2e-2

    def test_grid_refinement(self):
        # compared at a bisection tolerance finer than the 1e-8 check
        for seed, M in ((306, 2), (307, 3), (304, 3), (305, 4)):
            d = af_data(seed, M)
            for c in (PowerConstraint.total(5.0), PowerConstraint.individual(np.full(M, 5.0 / M))):
                coarse = af_optimize(d, c, N=20, tol=1e-10)
                fine = af_optimize(d, c, N=40, tol=1e-10)
                assert fine.rate_bits >= coarse.rate_bits - 1e-8

    def test_rejects_small_grid(self):
        with pytest.raises(ValidationError):
            af_optimize(af_data(1, 2), PowerConstraint.total(1.0), N=5)

    def test_dimension_check(self):
        with pytest.raises(ValidationError):
            af_optimize(af_data(1, 2), PowerConstraint.individual([1.0, 1.0, 1.0]))


class TestConstraintInclusion:
    def test_individual_below_total(self):
        # the per-relay feasible set sits inside the ball of radius sum(p)
        for i in range(50):
            M = 2 + i % 2
            d = af_data(700 + i, M)
            p = np.random.default_rng(i).uniform(0.2, 3.0, M)
            ind = af_optimize(d, PowerConstraint.individual(p), N=10)
            tot = af_optimize(d, PowerConstraint.total(p.sum()), N=100)
            assert ind.rate_bits <= tot.rate_bits + 1e-6
