"""Tests for likelihood, score equations, information matrix and fitting."""

import math

import numpy as np
import pytest
from scipy import special as sps

from gamnorm import (
    Dataset,
    FitSpec,
    GnParams,
    fit,
    fit_en,
    fit_gn,
    fit_od_chi2,
    identifiability_report,
    ks_test,
    log_likelihood,
    log_pdf,
    observed_info,
    plug_in_fit,
    reduced_system_residual,
    sample,
    score,
    sprott_residual,
)
from gamnorm import mle, oracle

OD_PARENT = GnParams(0.5, 0.5, 5.0, 1.0)
EN_PARENT = GnParams(0.5, 1.0, 1.0, 1.0)


def random_cases(n_cases, seed=314, n_obs=50):
    rng = np.random.default_rng(seed)
    for _ in range(n_cases):
        parent = GnParams(
            rng.uniform(0.3, 2.5),
            rng.uniform(0.4, 5.0),
            rng.uniform(-4.0, 4.0),
            rng.uniform(0.5, 3.0),
        )
        data = sample(parent, n_obs, seed=int(rng.integers(0, 2 ** 31)))
        theta = GnParams(
            parent.alpha * rng.uniform(0.7, 1.4),
            parent.r * rng.uniform(0.7, 1.4),
            parent.mu + rng.uniform(-0.5, 0.5),
            parent.sigma * rng.uniform(0.8, 1.3),
        )
        yield theta, data


class TestLogLikelihood:
    def test_single_datum_reduces_to_log_pdf(self):
        params = GnParams(0.8, 2.0, 1.0, 1.5)
        data = Dataset(np.array([3.7]))
        assert log_likelihood(params, data) == pytest.approx(
            log_pdf(params, 3.7), abs=1e-12
        )

    def test_joint_shift_invariance(self):
        params = GnParams(0.8, 2.0, 1.0, 1.5)
        data = sample(params, 40, seed=2)
        c = 123.456
        shifted = GnParams(0.8, 2.0, 1.0 + c, 1.5)
        assert log_likelihood(shifted, Dataset(data.values + c)) == pytest.approx(
            log_likelihood(params, data), abs=1e-9
        )

    def test_matches_convolution_oracle(self):
        params = GnParams(0.6, 1.7, 0.5, 1.2)
        data = sample(params, 20, seed=9)
        ref = sum(math.log(oracle.conv_pdf(params, z)) for z in data.values)
        assert log_likelihood(params, data) == pytest.approx(ref, abs=1e-6)


class TestScore:
    def test_matches_finite_differences(self):
        for theta, data in random_cases(12):
            analytic = score(theta, data)
            fd = oracle.fd_gradient(lambda t: log_likelihood(t, data), theta, 1e-6)
            assert np.allclose(analytic, fd, rtol=1e-5, atol=1e-7), theta

    def test_vanishes_at_converged_fit(self):
        data = sample(OD_PARENT, 100, seed=1)
        res = fit_od_chi2(data)
        assert res.converged
        free = [1, 2, 3]
        assert float(np.max(np.abs(res.score_residual[free]))) < 1e-8 * data.n

    def test_alpha_mu_equation_dependency(self):
        # s_alpha = sigma^2 s_mu + n (r/alpha + mu - zbar) identically
        for theta, data in random_cases(8, seed=99):
            s = score(theta, data)
            zbar = float(np.mean(data.values))
            lhs = s[0]
            rhs = theta.sigma2 * s[2] + data.n * (theta.r / theta.alpha + theta.mu - zbar)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-8)


class TestObservedInfo:
    def test_matches_fd_hessian(self):
        for theta, data in random_cases(12, seed=77):
            analytic = observed_info(theta, data)
            fd = -oracle.fd_hessian(lambda t: log_likelihood(t, data), theta, 1e-4)
            scale = np.maximum(np.abs(fd), 1e-3)
            assert float(np.max(np.abs(analytic - fd) / scale)) < 1e-4, theta

    def test_symmetric_by_construction(self):
        theta, data = next(random_cases(1, seed=5))
        info = observed_info(theta, data)
        assert float(np.max(np.abs(info - info.T))) == 0.0

    def test_printed_three_parameter_pair(self):
        info = np.array([
            [168.65, 83.67, 21.47],
            [83.67, 63.51, -25.44],
            [21.47, -25.44, 88.77],
        ])
        expect = np.array([
            [0.0502, -0.0802, -0.0351],
            [-0.0802, 0.1459, 0.0612],
            [-0.0351, 0.0612, 0.0373],
        ])
        assert np.allclose(np.linalg.inv(info), expect, atol=2e-3)

    def test_printed_en_pair(self):
        info = np.array([
            [326.92, -61.54, -16.01],
            [-61.54, 33.68, -14.02],
            [-16.01, -14.02, 42.63],
        ])
        diag = np.diag(np.linalg.inv(info))
        assert np.allclose(diag, [0.0060, 0.0660, 0.0348], atol=2e-3)


class TestFit:
    def test_od_chi2_recovery(self):
        data = sample(OD_PARENT, 100, seed=1)
        res = fit_od_chi2(data)
        assert res.converged and res.positive_definite
        se = res.standard_errors
        th = res.theta_hat
        assert th.alpha == 0.5  # held fixed
        assert abs(th.r - 0.5) < 3.0 * se[0]
        assert abs(th.mu - 5.0) < 3.0 * se[1]
        assert abs(th.sigma - 1.0) < 3.0 * se[2]

    def test_en_recovery(self):
        data = sample(EN_PARENT, 100, seed=3)
        res = fit_en(data)
        assert res.converged and res.positive_definite
        se = res.standard_errors
        th = res.theta_hat
        assert th.r == 1.0
        assert abs(th.alpha - 0.5) < 3.0 * se[0]
        assert abs(th.mu - 1.0) < 3.0 * se[1]
        assert abs(th.sigma - 1.0) < 3.0 * se[2]

    def test_four_free_near_singularity_instance(self):
        # replication in which the free four-parameter fit stalls on the
        # flat likelihood ridge with an indefinite information matrix
        data = sample(OD_PARENT, 100, seed=13)
        res = fit_gn(data)
        ae = np.abs(res.eigenvalues)
        ratio = float(ae.min() / ae.max())
        assert ratio < 1e-3 or res.determinant <= 0.0

    def test_solver_idempotence(self):
        data = sample(OD_PARENT, 100, seed=1)
        first = fit_od_chi2(data)
        again = fit(FitSpec(data=data, free_mask=first.free_mask,
                            initial=first.theta_hat))
        assert again.converged
        assert again.iterations <= 5  # a couple of verification passes
        t1, t2 = first.theta_hat, again.theta_hat
        for a, b in [(t1.alpha, t2.alpha), (t1.r, t2.r), (t1.mu, t2.mu),
                     (t1.sigma, t2.sigma)]:
            assert abs(a - b) < 1e-10

    def test_shift_equivariance(self):
        data = sample(OD_PARENT, 100, seed=4)
        res0 = fit_od_chi2(data)
        c = 250.0
        res1 = fit_od_chi2(Dataset(data.values + c))
        assert res1.theta_hat.mu - res0.theta_hat.mu == pytest.approx(c, abs=1e-6)
        assert res1.theta_hat.r == pytest.approx(res0.theta_hat.r, abs=1e-6)
        assert res1.theta_hat.sigma == pytest.approx(res0.theta_hat.sigma, abs=1e-6)

    def test_shift_preprocessing_path(self):
        # recording the shift on the Dataset must reproduce the plain fit
        data = sample(OD_PARENT, 100, seed=4)
        res0 = fit_od_chi2(data)
        pre = Dataset(data.values).shifted(-1000.0)  # values moved up by 1000
        res1 = fit_od_chi2(pre)
        assert res1.theta_hat.mu == pytest.approx(res0.theta_hat.mu, abs=1e-6)
        assert res1.theta_hat.r == pytest.approx(res0.theta_hat.r, abs=1e-6)

    def test_covariance_inverts_information(self):
        data = sample(OD_PARENT, 100, seed=1)
        res = fit_od_chi2(data)
        assert res.positive_definite
        eye = res.observed_info @ res.covariance
        assert float(np.max(np.abs(eye - np.eye(3)))) < 1e-8

    def test_correlation_signs(self):
        od_signs = en_signs = total = 0
        for seed in range(8):
            res = fit_od_chi2(sample(OD_PARENT, 100, seed=seed))
            if res.converged and res.covariance is not None:
                total += 1
                od_signs += (res.covariance[0, 1] < 0) and (res.covariance[0, 2] < 0)
            res = fit_en(sample(EN_PARENT, 100, seed=seed))
            if res.converged and res.covariance is not None:
                en_signs += (res.covariance[0, 1] > 0) and (res.covariance[1, 2] > 0)
        assert total >= 6
        assert od_signs >= total - 1
        assert en_signs >= total - 1

    def test_degenerate_data_rejected(self):
        with pytest.raises(ValueError):
            fit_od_chi2(Dataset(np.full(20, 3.0)))

    def test_fixed_nu_two_parameter_regime(self):
        data = sample(OD_PARENT, 100, seed=6)
        res = fit_od_chi2(data, fix_nu=1.0)
        assert res.theta_hat.r == 0.5
        assert res.theta_hat.alpha == 0.5
        assert res.observed_info.shape == (2, 2)
        assert res.converged

    def test_fd_jacobian_fallback(self, monkeypatch):
        # force the analytic information path to fail so the solver must
        # fall back to finite differences of the score
        import gamnorm.mle as mle_mod

        real_info_sums = mle_mod.info_sums

        def flaky_info_sums(params, data):
            raise mle_mod.specfun.QuadratureError("forced", 1.0)

        data = sample(OD_PARENT, 100, seed=1)
        reference = fit_od_chi2(data)
        monkeypatch.setattr(mle_mod, "info_sums", flaky_info_sums)
        res = fit_od_chi2(data)
        monkeypatch.setattr(mle_mod, "info_sums", real_info_sums)
        assert res.converged
        assert res.theta_hat.r == pytest.approx(reference.theta_hat.r, abs=1e-6)
        assert res.theta_hat.mu == pytest.approx(reference.theta_hat.mu, abs=1e-6)

    def test_spec_validation(self):
        data = sample(OD_PARENT, 20, seed=0)
        with pytest.raises(ValueError):
            FitSpec(data=data, free_mask=(False, False, False, False),
                    initial=OD_PARENT)
        with pytest.raises(ValueError):
            FitSpec(data=data, free_mask=(False, True, True, True))
        with pytest.raises(ValueError):
            fit_gn(data, fixed={"bogus": 1.0})


class TestSprott:
    def test_converged_four_free_satisfies_mean_identity(self):
        for seed in (0, 1, 2, 3, 4, 5):
            data = sample(OD_PARENT, 100, seed=seed)
            res = fit_gn(data)
            if not res.converged:
                continue
            zbar = float(np.mean(data.original_values))
            assert abs(sprott_residual(res, data)) < 1e-6 * abs(zbar)

    def test_implied_rate_in_od_regime(self):
        data = sample(OD_PARENT, 100, seed=1)
        res = fit_od_chi2(data)
        implied = mle.sprott_implied_alpha(res, data)
        assert implied == pytest.approx(0.5, abs=0.15)

    def test_implied_shape_in_en_regime(self):
        data = sample(EN_PARENT, 100, seed=3)
        res = fit_en(data)
        implied = mle.sprott_implied_r(res, data)
        assert implied == pytest.approx(1.0, abs=0.35)


class TestReducedSystem:
    def test_vanishes_at_four_free_root(self):
        for seed in (0, 1, 2, 4, 6):
            data = sample(OD_PARENT, 100, seed=seed)
            res = fit_gn(data)
            if not res.converged:
                continue
            resid = reduced_system_residual(res.theta_hat, data)
            assert float(np.max(np.abs(resid))) < 1e-6

    def test_nonzero_off_stationarity(self):
        data = sample(OD_PARENT, 100, seed=2)
        resid = reduced_system_residual(GnParams(1.0, 2.0, 0.0, 2.0), data)
        assert float(np.max(np.abs(resid))) > 1e-2

    def test_full_root_iff_reduced_root(self):
        # at points with a small full score the reduced system is small,
        # and at reduced-system roots the full score vanishes
        found = 0
        for seed in range(10):
            data = sample(OD_PARENT, 100, seed=seed)
            res = fit_gn(data)
            if not res.converged:
                continue
            found += 1
            full = score(res.theta_hat, data)
            reduced = reduced_system_residual(res.theta_hat, data)
            assert float(np.max(np.abs(full))) < 1e-6 * data.n
            assert float(np.max(np.abs(reduced))) < 1e-6
            if found >= 5:
                break
        assert found >= 3


class TestPlugInFit:
    def test_two_stage_workflow(self):
        rng = np.random.default_rng(1016)
        background = Dataset(rng.normal(57.6, 7.8, 1000))
        signal = sample(GnParams(2.48, 5.65, 57.6, 7.8), 25, seed=16)
        res = plug_in_fit(signal, background)
        assert res.converged
        th, se = res.theta_hat, res.standard_errors
        # location/scale pinned at the background plug-in values
        assert th.mu == pytest.approx(float(np.mean(background.values)), abs=1e-12)
        assert th.sigma == pytest.approx(
            float(np.std(background.values, ddof=1)), abs=1e-12
        )
        assert res.observed_info.shape == (2, 2)
        assert abs(th.alpha - 2.48) < 3.0 * se[0]
        assert abs(th.r - 5.65) < 3.0 * se[1]
        assert res.covariance[0, 0] > 0 and res.covariance[1, 1] > 0
        assert res.covariance[0, 1] > 0  # gamma rate and shape move together

    def test_degenerate_background_rejected(self):
        signal = sample(GnParams(1, 1, 0, 1), 10, seed=0)
        with pytest.raises(ValueError):
            plug_in_fit(signal, Dataset(np.array([1.0])))
        with pytest.raises(ValueError):
            plug_in_fit(signal, Dataset(np.array([2.0, 2.0])))


class TestKsTest:
    def test_calibration_under_null(self):
        params = GnParams(0.5, 2.5, 0.0, 1.0)
        passed = 0
        for seed in range(100):
            _, p_value = ks_test(sample(params, 500, seed=seed), params)
            passed += p_value > 0.01
        assert passed >= 98

    def test_single_point_degenerate(self):
        params = GnParams(1.0, 1.0, 0.0, 1.0)
        from gamnorm.dist import cdf

        z0 = 1.3
        d, _ = ks_test(Dataset(np.array([z0])), params)
        f = cdf(params, z0)
        assert d == pytest.approx(max(f, 1.0 - f), abs=1e-12)

    def test_asymptotic_p_value_convention(self):
        # survival series sum 2 (-1)^{k-1} exp(-2 k^2 lam^2) at lam = sqrt(N) D
        lam = math.sqrt(25) * 0.21
        series = 2.0 * sum(
            (-1) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
            for k in range(1, 80)
        )
        assert series == pytest.approx(0.2202, abs=5e-4)
        assert float(sps.kolmogorov(lam)) == pytest.approx(series, abs=1e-12)


class TestIdentifiability:
    def test_identity_matrix(self):
        rep = identifiability_report(np.eye(4), n=100)
        assert rep.condition_number == 1.0
        assert not rep.flagged_near_singular
        assert rep.positive_definite

    def test_three_free_not_flagged(self):
        res = fit_od_chi2(sample(OD_PARENT, 100, seed=1))
        rep = identifiability_report(res)
        assert res.positive_definite
        assert not rep.flagged_near_singular
        assert rep.det_scaled is not None

    def test_four_free_stall_flagged(self):
        res = fit_gn(sample(OD_PARENT, 100, seed=13))
        rep = identifiability_report(res)
        assert rep.flagged_near_singular
