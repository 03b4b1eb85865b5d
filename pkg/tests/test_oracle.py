import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from relaysec.af import af_precompute, af_secrecy_rate
from relaysec.channel import ChannelStatistics, PowerConstraint, sample_channel
from relaysec.df import df_secrecy_rate, df_total_power
from relaysec.errors import ValidationError
from relaysec.oracle import random_search_oracle


def pair(seed, M):
    ch = sample_channel(M, ChannelStatistics(1.0, 3.0, 1.0), seed=seed)
    return ch.h, ch.z


class TestRandomSearchOracle:
    def test_single_sample_reproducible(self):
        h, z = pair(1, 3)
        c = PowerConstraint.total(2.0)
        a = random_search_oracle((h, z), c, 1, seed=5)
        b = random_search_oracle((h, z), c, 1, seed=5)
        assert a.samples == 1
        assert_array_equal(a.w, b.w)
        assert a.rate_bits == b.rate_bits
        assert a.rate_bits == pytest.approx(df_secrecy_rate(a.w, h, z, 1.0), rel=1e-14)

    def test_scalar_total(self):
        for seed in range(5):
            h, z = pair(seed, 1)
            orc = random_search_oracle((h, z), PowerConstraint.total(3.0), 1000, seed=seed)
            exact = df_total_power(h, z, 1.0, 3.0).second_hop_rate_bits
            assert orc.rate_bits == pytest.approx(exact, abs=1e-9)

    def test_never_beats_closed_form(self):
        for i in range(50):
            M = 1 + i % 4
            h, z = pair(100 + i, M)
            P_T = (1.0, 10.0)[i % 2]
            orc = random_search_oracle((h, z), PowerConstraint.total(P_T), 20_000, seed=i)
            assert orc.rate_bits <= df_total_power(h, z, 1.0, P_T).second_hop_rate_bits + 1e-6

    @pytest.mark.parametrize(
        "c",
        [
            PowerConstraint.total(2.0),
            PowerConstraint.individual([0.5, 1.0, 2.0]),
            PowerConstraint.both(1.5, [0.5, 1.0, 2.0]),
        ],
    )
    def test_samples_feasible(self, c):
        h, z = pair(2, 3)
        orc = random_search_oracle((h, z), c, 5000, seed=1)
        assert c.is_satisfied(orc.w, rtol=1e-12)

    def test_af_target(self):
        ch = sample_channel(3, ChannelStatistics(3.0, 2.0, 2.0), seed=4)
        d = af_precompute(ch, 10.0)
        orc = random_search_oracle(d, PowerConstraint.total(5.0), 5000, seed=2)
        assert orc.rate_bits == pytest.approx(af_secrecy_rate(orc.w, d))
        assert np.vdot(orc.w, orc.w).real <= 5.0 * (1 + 1e-12)

    def test_chunking_is_deterministic(self):
        h, z = pair(3, 2)
        c = PowerConstraint.individual([1.0, 1.0])
        n = (1 << 16) + 17
        a = random_search_oracle((h, z), c, n, seed=8)
        b = random_search_oracle((h, z), c, n, seed=8)
        assert a.rate_bits == b.rate_bits
        assert_array_equal(a.w, b.w)

    @pytest.mark.parametrize("samples", [0, -3, 2.5])
    def test_rejects_bad_samples(self, samples):
        with pytest.raises(ValidationError):
            random_search_oracle(pair(0, 2), PowerConstraint.total(1.0), samples)

    def test_rejects_bad_target(self):
        with pytest.raises(ValidationError):
            random_search_oracle("nope", PowerConstraint.total(1.0), 10)
        with pytest.raises(ValidationError):
            random_search_oracle(([1, 2], [1]), PowerConstraint.total(1.0), 10)
        with pytest.raises(ValidationError):
            random_search_oracle(pair(0, 2), PowerConstraint.individual([1.0]), 10)
