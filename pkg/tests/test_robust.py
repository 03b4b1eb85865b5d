import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from relaysec.channel import ChannelStatistics, PowerConstraint, rng_for, sample_channel
from relaysec.df import df_individual_sdr
from relaysec.errors import DomainError, ValidationError
from relaysec.robust import (
    CsiUncertainty,
    UncertaintyMode,
    hermitian_perturbations,
    outage_kappa,
    robust_statistical,
    robust_worst_case,
    validate_nonoutage,
)

from conftest import crandn

P_T = 10.0


def estimates(seed, M=4, sh=1.0, sz=2.0):
    ch = sample_channel(M, ChannelStatistics(1.0, sh, sz), seed=seed)
    return ch.h, ch.z, np.outer(ch.h, ch.h.conj()), np.outer(ch.z, ch.z.conj())


def budget(M):
    return PowerConstraint.individual(np.full(M, P_T / M))


def random_direction(rng, M, norm):
    """Hermitian matrix of Frobenius norm ``norm`` in a uniformly random direction."""
    E = crandn(rng, M, M)
    E = E + E.conj().T
    return norm * E / np.linalg.norm(E)


class TestUncertainty:
    def test_constructors(self):
        assert CsiUncertainty.worst_case(0.1, 0.2).mode is UncertaintyMode.WORST_CASE
        u = CsiUncertainty.statistical(0.1, 0.2, 0.9)
        assert u.mode is UncertaintyMode.STATISTICAL and u.epsilon == 0.9

    @pytest.mark.parametrize(
        "make",
        [
            lambda: CsiUncertainty.worst_case(-0.1, 0.0),
            lambda: CsiUncertainty.statistical(0.1, math.nan, 0.9),
            lambda: CsiUncertainty.statistical(0.1, 0.1, 1.0),
            lambda: CsiUncertainty(UncertaintyMode.STATISTICAL, var_H=0.1),
        ],
    )
    def test_rejects_invalid(self, make):
        with pytest.raises(ValidationError):
            make()

    def test_mode_mismatch(self):
        _, _, H, Z = estimates(1)
        with pytest.raises(ValidationError):
            robust_worst_case(H, Z, CsiUncertainty.statistical(0, 0, 0.9), 1.0, budget(4))
        with pytest.raises(ValidationError):
            robust_statistical(H, Z, CsiUncertainty.worst_case(0, 0), 1.0, budget(4))


class TestWorstCase:
    def test_nominal_reduction(self):
        for seed in range(3):
            h, z, H, Z = estimates(seed)
            nominal = df_individual_sdr(h, z, 1.0, np.full(4, P_T / 4)).diagnostics.t_max
            res = robust_worst_case(H, Z, CsiUncertainty.worst_case(0.0, 0.0), 1.0, budget(4))
            assert res.t_max == pytest.approx(nominal, rel=1e-6)
            assert res.rate_bits == pytest.approx(math.log2(res.t_max))

    def test_overwhelming_uncertainty(self):
        _, _, H, Z = estimates(2)
        eps = np.linalg.eigvalsh(H)[-1] + 1.0
        res = robust_worst_case(H, Z, CsiUncertainty.worst_case(eps, 0.0), 1.0, budget(4))
        assert res.t_max == 1.0
        assert res.rate_bits == 0.0

    @pytest.mark.parametrize("which", ["eps_H", "eps_Z"])
    def test_monotone(self, which):
        _, _, H, Z = estimates(3)
        ts = []
        for e in np.linspace(0.0, 2.0, 5):
            unc = CsiUncertainty.worst_case(**{"eps_H": 0.0, "eps_Z": 0.0, which: e})
            ts.append(robust_worst_case(H, Z, unc, 1.0, budget(4)).t_max)
        assert np.all(np.diff(ts) <= 1e-9 * np.array(ts[:-1]))

    def test_sound_against_norm_bounded_errors(self):
        _, _, H, Z = estimates(4)
        eps_H, eps_Z = 0.3, 0.2
        res = robust_worst_case(H, Z, CsiUncertainty.worst_case(eps_H, eps_Z), 1.0, budget(4))
        X, t = res.X, res.t_max
        assert res.constraint_slack >= -1e-8
        rng = np.random.default_rng(0)
        for _ in range(1000):
            Hp = H + random_direction(rng, 4, eps_H)
            Zp = Z + random_direction(rng, 4, eps_Z)
            lhs = np.trace((Hp - t * Zp) @ X).real
            assert lhs >= (t - 1.0) * 1.0 - 1e-7

    def test_total_budget(self):
        _, _, H, Z = estimates(5)
        res = robust_worst_case(H, Z, CsiUncertainty.worst_case(0.1, 0.1), 1.0, PowerConstraint.total(P_T))
        assert np.trace(res.X).real <= P_T * (1 + 1e-9)
        assert np.vdot(res.w, res.w).real <= P_T * (1 + 1e-9)

    def test_unbounded_ratio(self):
        _, _, H, Z = estimates(5)
        with pytest.raises(DomainError):
            robust_worst_case(H, -Z - np.eye(4), CsiUncertainty.worst_case(0.0, 0.0), 1.0, budget(4))


class TestStatistical:
    def test_nominal_reduction(self):
        for seed in range(3):
            h, z, H, Z = estimates(seed)
            nominal = df_individual_sdr(h, z, 1.0, np.full(4, P_T / 4)).diagnostics.t_max
            res = robust_statistical(H, Z, CsiUncertainty.statistical(0.0, 0.0, 0.9), 1.0, budget(4))
            assert res.t_max == pytest.approx(nominal, rel=1e-6)

    @pytest.mark.parametrize("eps", [0.5, 0.3])
    def test_rejects_low_epsilon(self, eps):
        _, _, H, Z = estimates(1)
        with pytest.raises(DomainError):
            robust_statistical(H, Z, CsiUncertainty.statistical(0.1, 0.1, eps), 1.0, budget(4))
        with pytest.raises(DomainError):
            outage_kappa(2.0, 0.1, 0.1, eps)

    def test_kappa(self):
        # erf^-1(1 - 2 * 0.9) = -0.9061938024368232
        k = outage_kappa(2.0, 0.1, 0.05, 0.9)
        assert k == pytest.approx(math.sqrt(2 * (0.1 + 4 * 0.05)) * 0.9061938024368232, rel=1e-12)

    def test_epsilon_grid(self):
        _, _, H, Z = estimates(6)
        ts = []
        for eps in (0.6, 0.7, 0.8, 0.9, 0.95):
            unc = CsiUncertainty.statistical(0.1 / P_T, 0.2 / P_T, eps)
            res = robust_statistical(H, Z, unc, 1.0, budget(4))
            assert res.constraint_slack >= -1e-8
            ts.append(res.t_max)
        assert np.all(np.diff(ts) <= 0)

    @pytest.mark.parametrize("which", ["var_H", "var_Z"])
    def test_variance_grid(self, which):
        _, _, H, Z = estimates(7)
        ts = []
        for v in np.linspace(0.0, 0.1, 5):
            kw = {"var_H": 0.01, "var_Z": 0.01, which: v}
            res = robust_statistical(H, Z, CsiUncertainty.statistical(epsilon=0.9, **kw), 1.0, budget(4))
            ts.append(res.t_max)
        assert np.all(np.diff(ts) <= 1e-9 * np.array(ts[:-1]))

    def test_rate_grows_with_power(self):
        ch = sample_channel(5, ChannelStatistics(1.0, 1.0, 2.0), seed=6)
        H, Z = np.outer(ch.h, ch.h.conj()), np.outer(ch.z, ch.z.conj())
        rates = []
        for dB in (0.0, 10.0, 20.0):
            P = 10.0 ** (dB / 10)
            unc = CsiUncertainty.statistical(0.1 / P, 0.2 / P, 0.9)
            res = robust_statistical(H, Z, unc, 1.0, PowerConstraint.individual(np.full(5, P / 5)),
                                     validate_trials=20_000, validate_seed=dB)
            assert res.empirical_nonoutage >= 0.9 - 3 * math.sqrt(0.9 * 0.1 / 20_000)
            rates.append(res.rate_bits)
        assert np.all(np.diff(rates) > 0)

    def test_frobenius_constraint_holds(self):
        _, _, H, Z = estimates(8)
        unc = CsiUncertainty.statistical(0.05, 0.05, 0.9)
        res = robust_statistical(H, Z, unc, 1.0, budget(4))
        t, X = res.t_max, res.X
        kappa = outage_kappa(t, 0.05, 0.05, 0.9)
        lhs = kappa * np.linalg.norm(X)
        rhs = np.trace((H - t * Z) @ X).real - (t - 1.0)
        assert lhs <= rhs + 1e-8
        assert res.constraint_slack == pytest.approx(rhs - lhs, abs=1e-9)


class TestValidateNonoutage:
    def test_no_randomness(self):
        h, z, H, Z = estimates(1)
        res = df_individual_sdr(h, z, 1.0, np.full(4, P_T / 4))
        t = 0.999 * res.diagnostics.t_max
        assert validate_nonoutage(res.X, t, H, Z, 0.0, 0.0, 1.0, trials=10_000) == 1.0

    def test_below_nominal_level(self):
        h, z, H, Z = estimates(2)
        res = df_individual_sdr(h, z, 1.0, np.full(4, P_T / 4))
        t = 0.9 * res.diagnostics.t_max
        assert validate_nonoutage(res.X, t, H, Z, 0.5, 0.5, 1.0, trials=10_000) > 0.5

    def test_design_meets_target(self):
        _, _, H, Z = estimates(3)
        unc = CsiUncertainty.statistical(0.1 / P_T, 0.2 / P_T, 0.9)
        res = robust_statistical(H, Z, unc, 1.0, budget(4))
        n = 100_000
        est = validate_nonoutage(res.X, res.t_max, H, Z, unc.var_H, unc.var_Z, 1.0, trials=n, seed=1)
        assert est >= 0.9 - 3 * math.sqrt(0.9 * 0.1 / n)

    def test_deterministic(self):
        _, _, H, Z = estimates(4)
        X = np.eye(4)
        a = validate_nonoutage(X, 1.5, H, Z, 0.3, 0.3, 1.0, trials=25_000, seed=9)
        b = validate_nonoutage(X, 1.5, H, Z, 0.3, 0.3, 1.0, trials=25_000, seed=9)
        assert a == b

    def test_rejects_bad_trials(self):
        with pytest.raises(ValidationError):
            validate_nonoutage(np.eye(2), 1.5, np.eye(2), np.eye(2), 0.1, 0.1, 1.0, trials=0)


class TestPerturbations:
    def test_hermitian(self):
        E = hermitian_perturbations(rng_for(0), 0.5, 4, 10)
        assert_allclose(E, np.conj(np.transpose(E, (0, 2, 1))))
        assert_allclose(np.imag(np.diagonal(E, axis1=1, axis2=2)), 0.0)

    def test_trace_variance(self):
        # Var(tr(E X)) = var * ||X||_F^2 for Hermitian X
        rng = np.random.default_rng(3)
        F = crandn(rng, 3, 3)
        X = F @ F.conj().T
        var = 0.7
        E = hermitian_perturbations(rng_for(5), var, 3, 200_000)
        y = np.real(np.einsum("kij,ji->k", E, X))
        target = var * np.linalg.norm(X) ** 2
        # sample variance of a Gaussian has relative standard error sqrt(2/n)
        assert abs(y.var() / target - 1) <= 3 * math.sqrt(2 / y.size)
        assert abs(y.mean()) <= 3 * math.sqrt(target / y.size)
