"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
report lines; every tolerance is pinned here, not configurable.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from gamnorm import (
    Dataset,
    EnParams,
    GnParams,
    OdChi2Params,
    cdf,
    convolve_params,
    fit_en,
    fit_gn,
    fit_od_chi2,
    log_likelihood,
    log_pdf,
    normal_approx,
    observed_info,
    pdf,
    pdf_b,
    pdf_en,
    quantile,
    sample,
    score,
    sprott_residual,
)
from gamnorm import oracle

OD_PARENT = GnParams(0.5, 0.5, 5.0, 1.0)
EN_PARENT = GnParams(0.5, 1.0, 1.0, 1.0)

# Reference upper-tail critical values of the B(nu, mu=0, sigma^2)
# family, indexed [p][sigma] -> list over nu = 1, 2, 3, 4, 5, 10.  The
# (p=0.90, sigma=10, nu=2) cell of the published reference is excluded
# below: it reads 5.078, inconsistent with the monotone trend of its
# neighbours (this generator yields 15.078; see README).
CRITICAL_VALUES = {
    0.5: {
        1: [0.738, 1.577, 2.492, 3.448, 4.423, 9.376],
        2: [0.859, 1.752, 2.671, 3.612, 4.568, 9.462],
        5: [0.959, 1.922, 2.888, 3.857, 4.829, 9.722],
        10: [0.988, 1.976, 2.964, 3.953, 4.942, 9.894],
    },
    0.90: {
        1: [3.067, 4.855, 6.460, 7.964, 9.404, 16.111],
        2: [4.061, 5.584, 7.066, 8.499, 9.891, 16.475],
        5: [7.659, 8.907, 10.149, 11.386, 12.617, 18.688],
        10: [13.947, 5.078, 16.207, 17.335, 18.462, 24.081],
    },
    0.95: {
        1: [4.163, 6.241, 8.032, 9.684, 11.252, 18.447],
        2: [5.171, 6.988, 8.673, 10.262, 11.785, 18.861],
        5: [9.603, 10.969, 12.322, 13.662, 14.990, 21.469],
        10: [17.632, 18.813, 19.991, 21.168, 22.343, 28.190],
    },
    0.99: {
        1: [6.924, 9.460, 11.573, 13.489, 15.286, 23.373],
        2: [7.817, 10.210, 12.251, 14.120, 15.880, 23.859],
        5: [13.349, 15.012, 16.627, 18.200, 19.738, 27.055],
        10: [24.562, 25.855, 27.143, 28.426, 29.705, 36.036],
    },
    0.999: {
        1: [11.101, 14.066, 16.501, 18.691, 20.729, 29.771],
        2: [11.927, 14.816, 17.203, 19.356, 21.366, 30.316],
        5: [17.839, 19.992, 21.984, 23.866, 25.669, 33.984],
        10: [32.371, 33.826, 35.269, 36.701, 38.123, 45.099],
    },
}

CHI2_ROWS = {
    0.5: [0.455, 1.386, 2.366, 3.357, 4.351, 9.342],
    0.90: [2.706, 4.605, 6.251, 7.779, 9.236, 15.987],
    0.95: [3.841, 5.991, 7.815, 9.488, 11.070, 18.307],
    0.99: [6.635, 9.210, 11.345, 13.277, 15.086, 23.209],
    0.999: [10.827, 13.816, 16.266, 18.467, 20.515, 29.588],
}

NU_LIST = [1, 2, 3, 4, 5, 10]
EXCLUDED_CELL = (0.90, 10, 2)

DENSITY_PANEL = [
    GnParams(0.1, 0.5, 0.0, 1.0),
    GnParams(0.1, 5.0, -3.0, 5.0),
    GnParams(0.5, 0.5, 2.0, 0.5),
    GnParams(0.5, 1.0, 0.0, 1.0),
    GnParams(0.5, 5.0, 10.0, 5.0),
    GnParams(1.0, 0.5, -1.0, 5.0),
    GnParams(1.0, 1.0, 4.0, 0.5),
    GnParams(1.0, 5.0, 0.0, 1.0),
    GnParams(4.0, 0.5, 0.0, 5.0),
    GnParams(4.0, 1.0, -2.0, 1.0),
    GnParams(4.0, 5.0, 1.0, 0.5),
    GnParams(2.0, 2.5, 5.0, 2.0),
]


def report(criterion, ok, detail):
    print(f"[criterion {criterion:>2}] {'PASS' if ok else 'FAIL'}  {detail}")


def random_theta_data_panel(n_cases, seed=2718, n_obs=50):
    rng = np.random.default_rng(seed)
    cases = []
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
        cases.append((theta, data))
    return cases


def test_criterion_01_critical_value_table():
    start = time.monotonic()
    worst = 0.0
    checked = 0
    for p, panel in CRITICAL_VALUES.items():
        for sigma, row in panel.items():
            for nu, expected in zip(NU_LIST, row):
                if (p, sigma, nu) == EXCLUDED_CELL:
                    continue
                got = quantile(OdChi2Params(nu, 0.0, sigma).to_gn(), p)
                worst = max(worst, abs(got - expected))
                checked += 1
                assert abs(got - expected) <= 0.005, (p, sigma, nu, got, expected)
    elapsed = time.monotonic() - start
    ok = worst <= 0.005 and elapsed < 60.0
    report(1, ok, f"{checked} cells, worst |err| {worst:.4f}, {elapsed:.1f}s")
    assert elapsed < 60.0


def test_criterion_02_chi2_consistency():
    worst = 0.0
    for p, row in CHI2_ROWS.items():
        for nu, expected in zip(NU_LIST, row):
            ref = float(stats.chi2.ppf(p, nu))
            worst = max(worst, abs(ref - expected))
            assert abs(ref - expected) <= 0.001, (p, nu)
    report(2, True, f"30 chi-squared cells, worst |err| {worst:.5f}")


def test_criterion_03_closed_form_vs_convolution():
    start = time.monotonic()
    worst = 0.0
    for params in DENSITY_PANEL:
        mean, var = normal_approx(params)
        lo = params.mu - 6.0 * params.sigma
        hi = mean + 8.0 * math.sqrt(var)
        grid = np.linspace(lo, hi, 200)
        closed = pdf(params, grid)
        direct = np.array([oracle.conv_pdf(params, z) for z in grid])
        worst = max(worst, float(np.max(np.abs(closed - direct))))
    elapsed = time.monotonic() - start
    report(3, worst < 1e-8 and elapsed < 30.0,
           f"12 panels x 200 points, sup |diff| {worst:.2e}, {elapsed:.1f}s")
    assert worst < 1e-8
    assert elapsed < 30.0


def test_criterion_04_special_case_identities():
    worst_en = worst_b = 0.0
    en = EnParams(0.5, 0.0, 1.0)
    grid = np.linspace(-5.0, 12.0, 120)
    base = pdf(en.to_gn(), grid)
    worst_en = float(np.max(np.abs(pdf_en(en, grid) - base) / np.abs(base)))
    for nu, sigma in ((1.0, 1.0), (3.0, 2.0), (10.0, 0.7)):
        b = OdChi2Params(nu, 0.5, sigma)
        grid = np.linspace(-4.0 * sigma, 3.0 * nu + 6.0 * sigma, 120)
        base = pdf(b.to_gn(), grid)
        worst_b = max(worst_b, float(np.max(np.abs(pdf_b(b, grid) - base) / np.abs(base))))
    report(4, worst_en < 1e-10 and worst_b < 1e-10,
           f"rel err: exponential-normal {worst_en:.2e}, chi-squared-normal {worst_b:.2e}")
    assert worst_en < 1e-10
    assert worst_b < 1e-10


PANEL_50 = None


def _panel():
    global PANEL_50
    if PANEL_50 is None:
        PANEL_50 = random_theta_data_panel(50)
    return PANEL_50


def test_criterion_05_score_against_finite_differences():
    worst = 0.0
    for theta, data in _panel():
        analytic = score(theta, data)
        fd = oracle.fd_gradient(lambda t: log_likelihood(t, data), theta, 1e-6)
        rel = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-4 * data.n)
        worst = max(worst, float(np.max(rel)))
        assert float(np.max(rel)) < 1e-5, theta
    report(5, True, f"50 cases, worst rel err {worst:.2e}")


def test_criterion_06_information_against_fd_hessian():
    worst = 0.0
    for theta, data in _panel():
        analytic = observed_info(theta, data)
        fd = -oracle.fd_hessian(lambda t: log_likelihood(t, data), theta, 1e-4)
        rel = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-3 * data.n)
        worst = max(worst, float(np.max(rel)))
        assert float(np.max(rel)) < 1e-4, theta
    report(6, True, f"50 cases, worst rel err {worst:.2e}")


def test_criterion_07_printed_matrix_pairs():
    info_3 = np.array([
        [168.65, 83.67, 21.47],
        [83.67, 63.51, -25.44],
        [21.47, -25.44, 88.77],
    ])
    cov_3 = np.array([
        [0.0502, -0.0802, -0.0351],
        [-0.0802, 0.1459, 0.0612],
        [-0.0351, 0.0612, 0.0373],
    ])
    err_3 = float(np.max(np.abs(np.linalg.inv(info_3) - cov_3)))
    info_en = np.array([
        [326.92, -61.54, -16.01],
        [-61.54, 33.68, -14.02],
        [-16.01, -14.02, 42.63],
    ])
    err_en = float(np.max(np.abs(
        np.diag(np.linalg.inv(info_en)) - np.array([0.0060, 0.0660, 0.0348])
    )))
    report(7, err_3 < 2e-3 and err_en < 2e-3,
           f"entrywise errors {err_3:.2e} / {err_en:.2e}")
    assert err_3 < 2e-3
    assert err_en < 2e-3


FOUR_FREE_RESULTS = None


def _four_free_results():
    global FOUR_FREE_RESULTS
    if FOUR_FREE_RESULTS is None:
        FOUR_FREE_RESULTS = []
        for seed in range(100):
            data = sample(OD_PARENT, 100, seed=seed)
            FOUR_FREE_RESULTS.append((fit_gn(data), data))
    return FOUR_FREE_RESULTS


def test_criterion_08_estimator_recovery():
    od_hits = 0
    for seed in range(100):
        res = fit_od_chi2(sample(OD_PARENT, 100, seed=seed))
        se = res.standard_errors
        if not (res.converged and se is not None):
            continue
        th = res.theta_hat
        od_hits += (
            abs(th.r - 0.5) < 3 * se[0]
            and abs(th.mu - 5.0) < 3 * se[1]
            and abs(th.sigma - 1.0) < 3 * se[2]
        )
    en_hits = 0
    for seed in range(100):
        res = fit_en(sample(EN_PARENT, 100, seed=seed))
        se = res.standard_errors
        if not (res.converged and se is not None):
            continue
        th = res.theta_hat
        en_hits += (
            abs(th.alpha - 0.5) < 3 * se[0]
            and abs(th.mu - 1.0) < 3 * se[1]
            and abs(th.sigma - 1.0) < 3 * se[2]
        )
    report(8, od_hits >= 95 and en_hits >= 95,
           f"3-s.e. recovery: chi-squared-normal {od_hits}/100, "
           f"exponential-normal {en_hits}/100")
    assert od_hits >= 95
    assert en_hits >= 95


def test_criterion_09_near_singularity_signature():
    """Free four-parameter fits should display the near-singular
    information signature (eigenvalue ratio < 1e-3 or non-positive
    determinant) in at least 90 of 100 replications.

    Implemented exactly as stated.  At honestly converged score roots
    the observed information is typically weakly identified but still
    positive definite (ratio around 1e-2..1e-3), so this criterion is
    expected to fail; the full analysis lives outside the package in
    the project notes, and the shipped diagnostics report the weak
    identification on every fit regardless.
    """
    signature = 0
    for res, _ in _four_free_results():
        abs_eigs = np.abs(res.eigenvalues)
        ratio = float(abs_eigs.min() / abs_eigs.max()) if abs_eigs.max() > 0 else 0.0
        signature += (ratio < 1e-3) or (res.determinant <= 0.0)
    report(9, signature >= 90, f"signature in {signature}/100 replications (need >= 90)")
    assert signature >= 90, (
        f"near-singularity signature in {signature}/100 four-parameter fits; "
        "the criterion requires >= 90. Converged score roots carry a small "
        "but positive smallest eigenvalue (weak identification), so the "
        "stated threshold is not reached at honest endpoints."
    )


def test_criterion_10_sprott_identity():
    converged = 0
    worst = 0.0
    for res, data in _four_free_results():
        if not res.converged:
            continue
        converged += 1
        zbar = abs(float(np.mean(data.original_values)))
        worst = max(worst, abs(sprott_residual(res, data)) / zbar)
        assert abs(sprott_residual(res, data)) < 1e-6 * zbar
    report(10, converged > 0,
           f"{converged} converged four-parameter fits, worst |resid|/|zbar| {worst:.2e}")
    assert converged > 0


def test_criterion_11_distribution_properties():
    # normalization at 1e-9 on a reduced panel (criterion 3 covers shape)
    from scipy import integrate

    for params in DENSITY_PANEL[:4]:
        mean, var = normal_approx(params)
        gamma_far = stats.gamma.isf(1e-14, params.r, scale=1.0 / params.alpha)
        total, _ = integrate.quad(
            lambda zz: pdf(params, zz),
            params.mu - 12 * params.sigma,
            params.mu + gamma_far + 12 * params.sigma,
            points=[params.mu, mean], limit=400, epsabs=1e-11, epsrel=1e-11,
        )
        assert abs(total - 1.0) < 1e-9

    # translation at 1e-12
    base = GnParams(0.7, 1.8, -2.0, 1.3)
    shifted = GnParams(0.7, 1.8, -2.0 + 7.3, 1.3)
    for z in (-4.0, 0.0, 2.5, 11.0):
        assert abs(log_pdf(shifted, z + 7.3) - log_pdf(base, z)) < 1e-12

    # convolution closure via two-sample KS at n = 1e4
    p1, p2 = GnParams(0.5, 1.0, 0.0, 1.0), GnParams(0.5, 2.0, 3.0, 2.0)
    psum = convolve_params(p1, p2)
    direct = sample(p1, 10 ** 4, seed=21).values + sample(p2, 10 ** 4, seed=22).values
    closed = sample(psum, 10 ** 4, seed=23).values
    ks_p = float(stats.ks_2samp(direct, closed).pvalue)
    assert ks_p > 0.01

    # upper quantiles dominate the chi-squared reference
    for nu in (1.0, 3.0, 10.0):
        for sigma in (1.0, 5.0):
            params = OdChi2Params(nu, 0.0, sigma).to_gn()
            for p in (0.6, 0.9, 0.95, 0.99):
                assert quantile(params, p) > stats.chi2.ppf(p, nu)

    # central-limit approach at gamma mean 500
    params = GnParams(1.0, 500.0, 0.0, 1.0)
    mean, var = normal_approx(params)
    grid = np.linspace(mean - 6 * math.sqrt(var), mean + 6 * math.sqrt(var), 201)
    clt_sup = float(np.max(np.abs(
        cdf(params, grid) - stats.norm.cdf(grid, mean, math.sqrt(var))
    )))
    assert clt_sup < 0.01

    report(11, True,
           f"normalization/translation/convolution (KS p {ks_p:.2f})/ordering/"
           f"CLT (sup {clt_sup:.3f})")


def test_criterion_12_overflow_robustness():
    checked = 0
    for alpha, r, mu, sigma in [
        (0.5, 50.0, 0.0, 10.0),
        (0.5, 0.5, 5.0, 10.0),
        (1.0, 25.0, -10.0, 5.0),
        (2.0, 50.0, 100.0, 1.0),
        (0.2, 10.0, 0.0, 10.0),
    ]:
        params = GnParams(alpha, r, mu, sigma)
        sd = math.sqrt(params.sigma2 + r / alpha ** 2)
        z = np.linspace(mu - 30.0 * sigma, mu + r / alpha + 30.0 * sd, 41)
        vals = log_pdf(params, z)
        assert np.all(np.isfinite(vals))
        data = Dataset(z)
        assert np.all(np.isfinite(score(params, data)))
        assert np.all(np.isfinite(observed_info(params, data)))
        checked += 1
    report(12, True, f"{checked} extreme parameter/data spans, all finite")
