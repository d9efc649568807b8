"""Brute-force reference implementations used by the test suite.

Everything here deliberately avoids the parabolic-cylinder machinery:
the density oracle integrates the defining gamma-normal convolution
directly, derivatives are finite differences, and the grid CDF is plain
trapezoid accumulation.  Agreement between these and the closed-form
paths is evidence, not tautology.  Accuracy targets are modest and
stated per function; speed is not a goal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats
from scipy import special as sps

from .dataset import Dataset
from .dist import GnParams, sample

__all__ = [
    "GridSpec",
    "conv_pdf",
    "conv_pdf_grid",
    "fd_gradient",
    "fd_hessian",
    "grid_cdf_quantile",
    "mc_moments",
]


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    n_points: int

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise ValueError("GridSpec requires lo < hi")
        if self.n_points < 2:
            raise ValueError("GridSpec requires at least two points")

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_points)


def conv_pdf(params: GnParams, z: float) -> float:
    """Density by direct quadrature of the defining convolution,

        f(z) = alpha^r / (Gamma(r) sqrt(2 pi sigma^2))
               * int_0^inf x^(r-1) e^(-alpha x) e^(-(x-(z-mu))^2/(2 sigma^2)) dx,

    with absolute tolerance 1e-12.
    """
    a, r, mu, sg = params.alpha, params.r, params.mu, params.sigma
    c = float(z) - mu

    def integrand(x):
        return x ** (r - 1.0) * math.exp(-a * x - (x - c) ** 2 / (2.0 * sg * sg))

    hi = max(stats.gamma.ppf(1.0 - 1e-16, r, scale=1.0 / a), c + 14.0 * sg, 1.0)
    pts = [p for p in (1.0, c) if 0.0 < p < hi]
    val, err = integrate.quad(
        integrand, 0.0, hi, points=pts or None,
        epsabs=1e-12, epsrel=1e-10, limit=800,
    )
    pref = math.exp(r * math.log(a) - sps.gammaln(r)) / math.sqrt(2.0 * math.pi * sg * sg)
    return pref * val


def conv_pdf_grid(params: GnParams, z_grid) -> np.ndarray:
    """Vectorized convolution density for dense grids.

    Fixed-order Gauss-Legendre on a per-point window where the Gaussian
    factor is non-negligible; for r < 1 the substitution x = t**2 tames
    the endpoint singularity (exact for r >= 1/2, which covers every
    integer-degrees-of-freedom case; below that accuracy degrades).
    Intended for the O(h^2) grid CDF, not as a precision reference.
    """
    a, r, mu, sg = params.alpha, params.r, params.mu, params.sigma
    z_grid = np.asarray(z_grid, dtype=float)
    c = z_grid - mu
    lo = np.maximum(c - 13.5 * sg, 0.0)
    hi = np.maximum(c + 13.5 * sg, 1e-12)
    dead = hi <= 1e-12  # Gaussian mass enters x > 0 only beyond ~13.5 sd

    spike = np.zeros_like(z_grid)
    if r < 0.75:
        # small shapes concentrate integrable x**(r-1) mass at the origin;
        # below x_low the Gaussian factor is Taylor-expanded and the slice
        # reduces to lower incomplete gamma functions (relative error
        # ~(x_low/sigma)^3 of the slice)
        x_low = np.where(lo <= 0.0, np.minimum(0.02 * sg, 0.5 * hi), 0.0)
        g0 = np.exp(-c * c / (2.0 * sg * sg))
        g1 = g0 * c / (sg * sg)
        g2 = g0 * (c * c / sg ** 4 - 1.0 / (sg * sg))
        for k, coef in enumerate((g0, g1, 0.5 * g2)):
            ik = sps.gammainc(r + k, a * x_low) * math.exp(
                sps.gammaln(r + k) - (r + k) * math.log(a)
            )
            spike += coef * ik
        lo = np.maximum(lo, x_low)

    nodes, weights = np.polynomial.legendre.leggauss(48)
    # three panels per window, denser near the Gaussian center; the
    # substitution x = t**2 removes the x**(r-1) edge non-smoothness
    # whenever the window touches the origin (polynomial for 2r integer)
    edges = np.stack([lo, np.maximum(c - 4.0 * sg, lo), np.minimum(c + 4.0 * sg, hi), hi])
    edges = np.sort(np.maximum(edges, 0.0), axis=0)
    total = np.zeros_like(z_grid)
    for p in range(3):
        ta, tb = np.sqrt(edges[p]), np.sqrt(edges[p + 1])
        half = 0.5 * (tb - ta)
        mid = 0.5 * (tb + ta)
        t = mid[:, None] + half[:, None] * nodes
        x = t * t
        with np.errstate(divide="ignore", invalid="ignore"):
            logf = (r - 1.0) * np.log(np.maximum(x, 1e-300)) - a * x \
                - (x - c[:, None]) ** 2 / (2.0 * sg * sg)
        total += np.sum(half[:, None] * weights * 2.0 * t * np.exp(logf), axis=1)
    pref = math.exp(r * math.log(a) - sps.gammaln(r)) / math.sqrt(2.0 * math.pi * sg * sg)
    out = pref * (total + spike)
    out[dead] = 0.0
    return out


def _theta_vec(params: GnParams) -> np.ndarray:
    return np.array([params.alpha, params.r, params.mu, params.sigma])


def _theta_from_vec(v) -> GnParams:
    return GnParams(v[0], v[1], v[2], v[3])


def fd_gradient(f, theta: GnParams, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of f(GnParams) with scaled steps."""
    v = _theta_vec(theta)
    grad = np.empty(4)
    for i in range(4):
        h = rel_step * max(abs(v[i]), 1.0)
        vp, vm = v.copy(), v.copy()
        vp[i] += h
        vm[i] -= h
        grad[i] = (f(_theta_from_vec(vp)) - f(_theta_from_vec(vm))) / (2.0 * h)
    return grad


def fd_hessian(f, theta: GnParams, rel_step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of f(GnParams), symmetrized."""
    v = _theta_vec(theta)
    steps = np.array([rel_step * max(abs(v[i]), 1.0) for i in range(4)])
    hess = np.empty((4, 4))
    f0 = f(theta)
    for i in range(4):
        ei = np.zeros(4)
        ei[i] = steps[i]
        fp = f(_theta_from_vec(v + ei))
        fm = f(_theta_from_vec(v - ei))
        hess[i, i] = (fp - 2.0 * f0 + fm) / steps[i] ** 2
        for j in range(i + 1, 4):
            ej = np.zeros(4)
            ej[j] = steps[j]
            fpp = f(_theta_from_vec(v + ei + ej))
            fpm = f(_theta_from_vec(v + ei - ej))
            fmp = f(_theta_from_vec(v - ei + ej))
            fmm = f(_theta_from_vec(v - ei - ej))
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * steps[i] * steps[j])
    return hess


def grid_cdf_quantile(params: GnParams, grid: GridSpec, p: float) -> float:
    """Quantile from a trapezoid CDF on a dense grid, O(h^2) accurate."""
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie strictly between 0 and 1")
    z = grid.points()
    dens = conv_pdf_grid(params, z)
    csum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(z))])
    return float(np.interp(p, csum, z))


def mc_moments(params: GnParams, n: int, seed: int):
    """Monte Carlo mean / variance / third central moment with standard errors.

    Returns a dict with keys 'mean', 'variance', 'third_central' and the
    matching '<name>_se' entries, suitable for 3-sigma band checks.
    """
    values = sample(params, n, seed).values
    mean = float(np.mean(values))
    centered = values - mean
    m2 = float(np.mean(centered ** 2))
    m3 = float(np.mean(centered ** 3))
    m4 = float(np.mean(centered ** 4))
    m6 = float(np.mean(centered ** 6))
    var_se = math.sqrt(max(m4 - m2 * m2, 0.0) / n)
    # var(m3) ~ (mu6 - mu3^2 + 9 mu2^3 - 6 mu2 mu4) / n  (large-n)
    m3_var = (m6 - m3 * m3 + 9.0 * m2 ** 3 - 6.0 * m2 * m4) / n
    return {
        "mean": mean,
        "mean_se": math.sqrt(m2 / n),
        "variance": float(np.var(values, ddof=1)),
        "variance_se": var_se,
        "third_central": m3 * n ** 2 / ((n - 1) * (n - 2)) if n > 2 else m3,
        "third_central_se": math.sqrt(max(m3_var, 0.0)),
    }
