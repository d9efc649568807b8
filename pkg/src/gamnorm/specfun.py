"""Overflow-safe evaluation of parabolic cylinder functions of negative order.

Everything here is built on the weighted tail integrals

    A_k(zeta, r) = int_0^inf exp(-x*zeta - x**2/2) * x**(r-1) * (ln x)**k dx,

for k = 0, 1, 2, which carry the parabolic cylinder function through

    D_{-r}(zeta) = exp(-zeta**2/4) / Gamma(r) * A_0(zeta, r),   r > 0,

together with its derivatives with respect to the argument (via the
standard recursions) and with respect to the order (via A_1, A_2).

All quantities are computed and stored in log space: the integrals grow
like exp(zeta**2/2) for large negative ``zeta`` and the functions
themselves would overflow double precision long before the parameter
regimes of interest are exhausted.  Ratios such as D'/D are assembled
from differences of logs and never form a raw function value.

Two evaluation paths coexist:

* a vectorized fixed-panel Gauss-Legendre scheme (`log_a` and friends),
  used by every hot code path in the package, and
* :func:`a_integrals`, an adaptive-quadrature reference with error
  reporting, kept deliberately independent so the two can be checked
  against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import special as sps

__all__ = [
    "PcfEval",
    "AIntegrals",
    "LogValue",
    "QuadratureError",
    "pcf_d",
    "pcf_d_prime",
    "pcf_ratio",
    "pcf_ratio_dzeta",
    "pcf_ratio_dr",
    "a_integrals",
    "log_a",
    "log_pcf",
    "t_ratio",
    "t_ratio_dr",
    "erf",
    "log_gamma",
    "digamma",
    "trigamma",
]

# Asymptotic handling of the logarithmic-derivative ratios.  Beyond
# |zeta| = RATIO_CUTOFF the first-order expansions replace the quadrature
# values; the zeta-derivative is blended linearly over the window below
# the cutoff so the limiting value is reached exactly at the cutoff.
RATIO_CUTOFF = 40.0
RATIO_DZ_BLEND_START = 35.0

# Log-drop below the integrand peak at which the tails are truncated.
# exp(-110) ~ 1.7e-48, far below the 1e-12 relative target.
_LOG_DROP = 110.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
# Panels per side of the peak; knots are geometrically graded from the
# integrand's natural peak scale out to the truncation point, so both a
# sharp turnover and a long slow tail are resolved with the same budget.
_PANELS_PER_SIDE = 10


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance.

    The achieved absolute-error estimate is retained on ``achieved``.
    """

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved abs. error {achieved:.3e})")
        self.achieved = achieved


@dataclass(frozen=True)
class LogValue:
    """A real number stored as (log|value|, sign)."""

    log_abs: float
    sign: int

    @property
    def value(self) -> float:
        return self.sign * math.exp(self.log_abs)


@dataclass(frozen=True)
class PcfEval:
    """Log-scaled parabolic cylinder function value D_p(z)."""

    log_abs: float
    sign: int
    order: float
    arg: float

    @property
    def value(self) -> float:
        return self.sign * math.exp(self.log_abs)


@dataclass(frozen=True)
class AIntegrals:
    """The weighted tail integrals A, A_r, A_rr at a fixed (zeta, r)."""

    zeta: float
    r: float
    a: LogValue
    a_r: LogValue
    a_rr: LogValue


def _validate_finite(name: str, x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return x


# ----------------------------------------------------------------------
# Vectorized log-scaled evaluation of the A-family
# ----------------------------------------------------------------------

def _bisect_to_level(g, lo, hi, level, iters=18):
    """Solve g(x) = level for x between lo and hi, vectorized.

    ``g`` must be monotone on each [lo_i, hi_i]; either direction works.
    The crossing only anchors a truncation point deep in the integrand
    tail, so interval/2**18 localization is far more than enough.
    """
    lo_sign = np.sign(g(lo) - level)
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        same_side = np.sign(g(mid) - level) == lo_sign
        np.copyto(lo, mid, where=same_side)
        np.copyto(hi, mid, where=~same_side)
    return 0.5 * (lo + hi)


def _panel_quadrature(peak, lo, hi, scale):
    """Gauss-Legendre nodes/weights on a two-sided geometric panel ladder.

    Knot offsets from the peak grow geometrically from ``scale`` (the
    integrand's natural width at the peak) out to each truncation point,
    clipped to the side width.  Returns arrays of shape
    (m, n_panels, n_gl); zero-width sides collapse to zero-weight panels.
    """
    t = np.linspace(0.0, 1.0, _PANELS_PER_SIDE)
    base = np.maximum(scale, 1e-12)[:, None]

    def side_knots(width):
        ratio = np.maximum(width[:, None] / base, 1.0)
        return np.minimum(base * ratio ** t[None, :], width[:, None])

    off_l = side_knots(peak - lo)
    off_r = side_knots(hi - peak)
    knots = np.concatenate(
        [peak[:, None] - off_l[:, ::-1], peak[:, None], peak[:, None] + off_r],
        axis=1,
    )
    a, b = knots[:, :-1], knots[:, 1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[..., None] + half[..., None] * _GL_NODES
    w = half[..., None] * _GL_WEIGHTS
    return x, w


def _signed_log(scaled, scale):
    """(log|v|, sign) for v = scaled * exp(scale), vectorized."""
    mag = np.abs(scaled)
    ok = mag > 0.0
    log_abs = np.where(ok, np.log(np.where(ok, mag, 1.0)) + scale, -np.inf)
    sign = np.where(scaled >= 0.0, 1.0, -1.0)
    return log_abs, sign


def _signed_log_sum(logs, signs):
    """Combine signed log-space terms along axis 0."""
    ref = np.max(logs, axis=0)
    ref_safe = np.where(np.isfinite(ref), ref, 0.0)
    total = np.sum(signs * np.exp(logs - ref_safe), axis=0)
    mag = np.abs(total)
    ok = mag > 0.0
    log_abs = np.where(ok, np.log(np.where(ok, mag, 1.0)) + ref_safe, -np.inf)
    sign = np.where(total >= 0.0, 1.0, -1.0)
    return log_abs, sign


def log_a_multi(r, zeta, ks=(0,)):
    """Log-scaled A_k(zeta, r) for several k at once, vectorized.

    The bracketing, panel layout and exp evaluations depend only on
    (r, zeta); the ln(x)**k weights are applied to the shared node
    values, so asking for all of k = 0, 1, 2 costs barely more than one.
    Returns ``{k: (log_abs, sign)}`` with array entries.

    The integral is split at x = 1.  On (0, 1] the substitution x = e^u
    removes the x**(r-1) endpoint singularity, which matters for r < 1;
    on [1, inf) the integrand is evaluated directly.  Each piece is
    bracketed where its log-integrand has dropped ``_LOG_DROP`` below the
    peak and integrated on a geometric Gauss-Legendre panel ladder
    anchored at the peak.  On each piece the ln(x) weight has a fixed
    sign, so there is no intra-piece cancellation.
    """
    r = float(r)
    if not (r > 0.0) or not math.isfinite(r):
        raise ValueError(f"order r must be positive and finite, got {r!r}")
    for k in ks:
        if k not in (0, 1, 2):
            raise ValueError(f"k must be 0, 1 or 2, got {k!r}")
    zeta_arr = np.atleast_1d(np.asarray(zeta, dtype=float))
    if not np.all(np.isfinite(zeta_arr)):
        raise ValueError("zeta must be finite")
    m = zeta_arr.shape[0]

    # --- piece on [1, inf): integrand exp(g(x)) (ln x)^k, ln x >= 0 ---
    def g(x):
        return -zeta_arr * x - 0.5 * x * x + (r - 1.0) * np.log(x)

    disc = zeta_arr * zeta_arr + 4.0 * (r - 1.0)
    root = np.sqrt(np.maximum(disc, 0.0))
    # stable larger-root form on both signs of zeta (avoids cancellation)
    crit = np.where(
        zeta_arr <= 0.0,
        0.5 * (-zeta_arr + root),
        2.0 * (r - 1.0) / np.maximum(zeta_arr + root, 1e-300),
    )
    crit = np.where(disc >= 0.0, crit, 1.0)
    peak = np.maximum(crit, 1.0)
    g_peak = g(peak)
    level = g_peak - _LOG_DROP
    # seed the expansion near the quadratic-model width, then double
    curvature = 1.0 + np.abs(r - 1.0) / (peak * peak)
    hi = peak + np.sqrt(2.0 * _LOG_DROP / curvature) + 1.0
    for _ in range(200):
        above = g(hi) > level
        if not above.any():
            break
        hi = np.where(above, peak + 2.0 * (hi - peak), hi)
    x_hi = _bisect_to_level(g, peak, hi, level)
    ones = np.ones(m)
    x_lo = np.where(g(ones) < level, _bisect_to_level(g, ones, peak, level), 1.0)
    slope = -zeta_arr - peak + (r - 1.0) / peak
    peak_scale = 1.0 / np.sqrt(1.0 + np.abs(r - 1.0) / (peak * peak) + slope * slope)
    x, w = _panel_quadrature(peak, x_lo, x_hi, peak_scale)
    log_x = np.log(x)
    # the scaled exponent is <= 0 in exact arithmetic; clip the rounding
    # garbage that appears when zeta^2 approaches 1/eps so that extreme
    # arguments still yield finite (if low-precision) values
    scaled_hi = w * np.exp(np.minimum(
        -zeta_arr[:, None, None] * x - 0.5 * x * x + (r - 1.0) * log_x
        - g_peak[:, None, None], 50.0,
    ))

    # --- piece on (0, 1]: x = e^u, integrand exp(phi(u)) u^k, u <= 0 ---
    def phi(u):
        eu = np.exp(u)
        return -zeta_arr * eu - 0.5 * eu * eu + r * u

    root0 = np.sqrt(zeta_arr * zeta_arr + 4.0 * r)
    t_crit = np.where(
        zeta_arr <= 0.0,
        0.5 * (-zeta_arr + root0),
        2.0 * r / np.maximum(zeta_arr + root0, 1e-300),
    )
    u_peak = np.minimum(np.log(t_crit), 0.0)
    phi_peak = phi(u_peak)
    level0 = phi_peak - _LOG_DROP
    # tail decays like exp(r*u): seed the bracket at the linear-model width
    lo = u_peak - _LOG_DROP / r - np.sqrt(2.0 * _LOG_DROP) - 1.0
    for _ in range(200):
        above = phi(lo) > level0
        if not above.any():
            break
        lo = np.where(above, u_peak + 2.0 * (lo - u_peak), lo)
    u_lo = _bisect_to_level(phi, lo, u_peak, level0)
    e_pk = np.exp(u_peak)
    slope0 = -zeta_arr * e_pk - e_pk * e_pk + r
    curv0 = np.abs(-zeta_arr * e_pk - 2.0 * e_pk * e_pk)
    peak_scale0 = 1.0 / np.sqrt(curv0 + slope0 * slope0 + 1e-12)
    u, w0 = _panel_quadrature(u_peak, u_lo, np.zeros(m), peak_scale0)
    eu = np.exp(u)
    scaled_lo = w0 * np.exp(np.minimum(
        -zeta_arr[:, None, None] * eu - 0.5 * eu * eu + r * u
        - phi_peak[:, None, None], 50.0,
    ))

    out = {}
    for k in ks:
        piece_hi = np.sum(scaled_hi * (log_x ** k if k else 1.0), axis=(1, 2))
        piece_lo = np.sum(scaled_lo * (u ** k if k else 1.0), axis=(1, 2))
        log_hi, sign_hi = _signed_log(piece_hi, g_peak)
        log_lo, sign_lo = _signed_log(piece_lo, phi_peak)
        out[k] = _signed_log_sum(
            np.stack([log_lo, log_hi]), np.stack([sign_lo, sign_hi])
        )
    return out


def log_a(r, zeta, k=0):
    """Log-scaled A_k(zeta, r), vectorized over ``zeta``.

    Parameters
    ----------
    r : float
        Order parameter, r > 0.
    zeta : float or array_like
        Argument(s); any finite value is supported.
    k : {0, 1, 2}
        Power of the ln(x) weight.

    Returns
    -------
    (log_abs, sign)
        Arrays (or scalars, matching the input) with
        ``sign * exp(log_abs) == A_k(zeta, r)``.
    """
    scalar = np.isscalar(zeta) or np.ndim(zeta) == 0
    log_abs, sign = log_a_multi(r, zeta, (k,))[k]
    if scalar:
        return float(log_abs[0]), float(sign[0])
    return log_abs, sign


def log_pcf(r, zeta):
    """ln D_{-r}(zeta) for r >= 0, vectorized over ``zeta``.

    D_{-r} is strictly positive on the real line for non-negative r, so
    only the log is returned.  r = 0 uses D_0(z) = exp(-z**2/4).
    """
    r = float(r)
    if r < 0.0 or not math.isfinite(r):
        raise ValueError(f"log_pcf requires r >= 0, got {r!r}")
    zeta_arr = np.asarray(zeta, dtype=float)
    if r == 0.0:
        return -0.25 * zeta_arr * zeta_arr
    la, _ = log_a(r, zeta_arr, 0)
    return -0.25 * zeta_arr * zeta_arr + la - sps.gammaln(r)


def _ratio_family(r, zeta, need_dzeta=False, need_dr=False, need_t=False,
                  need_t_dr=False):
    """Shared assembly of the logarithmic-derivative ratios.

    Returns a dict with the requested entries among ``ratio``, ``dzeta``,
    ``dr``, ``t`` (= A_r/A) and ``t_dr`` (= d(A_r/A)/dr), each an array of
    the shape of ``zeta``.  The base quantities are

        e1 = A(zeta, r+1) / A(zeta, r)   (= r * D_{-r-1}/D_{-r})
        e2 = A(zeta, r+2) / A(zeta, r+1)

    from which

        D'/D               = -zeta/2 - e1
        d/dzeta (D'/D)     = -1/2 + e1 * (e2 - e1)
        d/dr    (D'/D)     = -e1 * (t(r+1) - t(r))
        d/dr    (A_r/A)    = A_rr/A - (A_r/A)**2.

    The asymptotic windows on the ratio and its zeta-derivative are
    applied here so every caller sees identical values.
    """
    zeta_arr = np.atleast_1d(np.asarray(zeta, dtype=float))
    out = {}
    ks0 = {0}
    if need_t or need_dr:
        ks0.add(1)
    if need_t_dr:
        ks0.update((1, 2))
    ks1 = {0}
    if need_dr:
        ks1.add(1)
    fam0 = log_a_multi(r, zeta_arr, tuple(sorted(ks0)))
    fam1 = log_a_multi(r + 1.0, zeta_arr, tuple(sorted(ks1)))
    la0 = fam0[0][0]
    la1 = fam1[0][0]
    e1 = np.exp(la1 - la0)

    exact_ratio = -0.5 * zeta_arr - e1
    high = zeta_arr > RATIO_CUTOFF
    low = zeta_arr < -RATIO_CUTOFF
    ratio = np.where(
        high,
        -0.5 * zeta_arr - r / np.where(high, zeta_arr, 1.0),
        np.where(
            low,
            0.5 * zeta_arr + (r - 1.0) / np.where(low, zeta_arr, 1.0),
            exact_ratio,
        ),
    )
    out["ratio"] = ratio

    if need_dzeta:
        la2, _ = log_a(r + 2.0, zeta_arr, 0)
        e2 = np.exp(la2 - la1)
        exact = -0.5 + e1 * (e2 - e1)
        limit = -0.5 * np.sign(zeta_arr)
        abs_z = np.abs(zeta_arr)
        w = np.clip(
            (abs_z - RATIO_DZ_BLEND_START) / (RATIO_CUTOFF - RATIO_DZ_BLEND_START),
            0.0,
            1.0,
        )
        out["dzeta"] = (1.0 - w) * exact + w * limit

    if need_t or need_dr or need_t_dr:
        lr0, sr0 = fam0[1]
        t0 = sr0 * np.exp(lr0 - la0)
        out["t"] = t0
        if need_dr:
            lr1, sr1 = fam1[1]
            t1 = sr1 * np.exp(lr1 - la1)
            out["dr"] = -e1 * (t1 - t0)

    if need_t_dr:
        lrr, srr = fam0[2]
        out["t_dr"] = srr * np.exp(lrr - la0) - out["t"] ** 2

    return out


def _shape_like(values, template):
    if np.isscalar(template) or np.ndim(template) == 0:
        return float(values[0])
    return values


def pcf_ratio(r, zeta):
    """The logarithmic derivative D'_{-r}(zeta) / D_{-r}(zeta).

    Computed as -zeta/2 - exp(ln A(zeta, r+1) - ln A(zeta, r)); no raw
    D value is ever formed, so the result is finite for every finite
    argument.  For zeta > RATIO_CUTOFF the first-order expansion
    -zeta/2 - r/zeta is used, and for zeta < -RATIO_CUTOFF the dominant
    reflection term zeta/2 + (r-1)/zeta.
    """
    r = float(r)
    if not (r > 0.0):
        raise ValueError(f"pcf_ratio requires r > 0, got {r!r}")
    fam = _ratio_family(r, zeta)
    return _shape_like(fam["ratio"], zeta)


def pcf_ratio_dzeta(r, zeta):
    """d/dzeta of :func:`pcf_ratio`.

    Uses (D'' D - D'^2) / D^2 rewritten in overflow-free ratio form.
    The value tends to -1/2 as zeta -> +inf and +1/2 as zeta -> -inf
    (convention validated numerically); a linear blend over
    [RATIO_DZ_BLEND_START, RATIO_CUTOFF] hands over to those limits.
    """
    r = float(r)
    if not (r > 0.0):
        raise ValueError(f"pcf_ratio_dzeta requires r > 0, got {r!r}")
    fam = _ratio_family(r, zeta, need_dzeta=True)
    return _shape_like(fam["dzeta"], zeta)


def pcf_ratio_dr(r, zeta):
    """d/dr of :func:`pcf_ratio`, via the order-derivative integrals."""
    r = float(r)
    if not (r > 0.0):
        raise ValueError(f"pcf_ratio_dr requires r > 0, got {r!r}")
    fam = _ratio_family(r, zeta, need_dr=True)
    return _shape_like(fam["dr"], zeta)


def t_ratio(r, zeta):
    """A_r(zeta, r) / A(zeta, r), the order-derivative of ln A."""
    r = float(r)
    if not (r > 0.0):
        raise ValueError(f"t_ratio requires r > 0, got {r!r}")
    fam = _ratio_family(r, zeta, need_t=True)
    return _shape_like(fam["t"], zeta)


def t_ratio_dr(r, zeta):
    """d/dr of :func:`t_ratio`; equals A_rr/A - (A_r/A)**2 >= 0."""
    r = float(r)
    if not (r > 0.0):
        raise ValueError(f"t_ratio_dr requires r > 0, got {r!r}")
    fam = _ratio_family(r, zeta, need_t_dr=True)
    return _shape_like(fam["t_dr"], zeta)


# ----------------------------------------------------------------------
# Parabolic cylinder function values
# ----------------------------------------------------------------------

def pcf_d(p, z) -> PcfEval:
    """Parabolic cylinder function D_p(z) for p <= 0, log-scaled.

    Raises ValueError for p > 0 (the integral representation used here
    requires negative order) or non-finite arguments.
    """
    p = float(p)
    z = _validate_finite("z", z)
    if not (p <= 0.0) or not math.isfinite(p):
        raise ValueError(f"pcf_d requires p <= 0, got p={p!r}")
    log_val = float(log_pcf(-p, z))
    return PcfEval(log_abs=log_val, sign=1, order=p, arg=z)


def _log_d_signed(r, z):
    """(log|D_{-r}(z)|, sign) for r > -1, one recursion step below 0."""
    if r >= 0.0:
        return float(log_pcf(r, z)), 1
    # D_{-r}(z) = z * D_{-(r+1)}(z) + (r+1) * D_{-(r+2)}(z), both orders >= 0
    ld1 = float(log_pcf(r + 1.0, z))
    ld2 = float(log_pcf(r + 2.0, z))
    terms_log = []
    terms_sign = []
    if z != 0.0:
        terms_log.append(math.log(abs(z)) + ld1)
        terms_sign.append(1.0 if z > 0 else -1.0)
    terms_log.append(math.log(r + 1.0) + ld2)
    terms_sign.append(1.0)
    log_abs, sign = _signed_log_sum(
        np.asarray(terms_log)[:, None], np.asarray(terms_sign)[:, None]
    )
    return float(log_abs[0]), int(sign[0])


def pcf_d_prime(r, zeta) -> PcfEval:
    """d/dz of D_{-r} at zeta, from the recursion

        D'_{-r}(z) = -(z/2) D_{-r}(z) - r D_{-r-1}(z),

    valid for r > -1.  Returned log-scaled with sign.
    """
    r = float(r)
    zeta = _validate_finite("zeta", zeta)
    if not (r > -1.0) or not math.isfinite(r):
        raise ValueError(f"pcf_d_prime requires r > -1, got r={r!r}")
    ld0, s0 = _log_d_signed(r, zeta)
    terms_log = []
    terms_sign = []
    if zeta != 0.0:
        terms_log.append(math.log(abs(zeta) / 2.0) + ld0)
        terms_sign.append(-s0 if zeta > 0 else s0)
    if r != 0.0:
        ld1 = float(log_pcf(r + 1.0, zeta))
        terms_log.append(math.log(abs(r)) + ld1)
        terms_sign.append(-1.0 if r > 0 else 1.0)
    if not terms_log:
        # r = 0 and zeta = 0: D'_0(0) = 0
        return PcfEval(log_abs=-math.inf, sign=1, order=-r, arg=zeta)
    log_abs, sign = _signed_log_sum(
        np.asarray(terms_log)[:, None], np.asarray(terms_sign)[:, None]
    )
    return PcfEval(log_abs=float(log_abs[0]), sign=int(sign[0]), order=-r, arg=zeta)


# ----------------------------------------------------------------------
# Adaptive-quadrature reference for the A-family
# ----------------------------------------------------------------------

_QUAD_TOL = 1e-12
_QUAD_LIMIT = 2000


def _a_piece_adaptive(r, zeta, k, lower):
    """One piece of A_k by adaptive Gauss-Kronrod, log-scaled.

    ``lower`` selects the (0, 1] piece (integrated in u = ln x) or the
    [1, inf) piece.  Returns (log_abs, sign, achieved_error_in_log_units).
    """
    if lower:
        root = math.sqrt(zeta * zeta + 4.0 * r)
        t_crit = 0.5 * (-zeta + root) if zeta <= 0.0 else 2.0 * r / (zeta + root)
        peak = min(math.log(t_crit), 0.0) if t_crit > 0 else 0.0
        eu_pk = math.exp(peak)
        scale = -zeta * eu_pk - 0.5 * eu_pk * eu_pk + r * peak

        def integrand(u):
            eu = math.exp(u)
            val = math.exp(-zeta * eu - 0.5 * eu * eu + r * u - scale)
            return val * u ** k if k else val

        lo = peak - 1.0
        level = -_LOG_DROP
        while -zeta * math.exp(lo) - 0.5 * math.exp(2 * lo) + r * lo - scale > level:
            lo = peak + 2.0 * (lo - peak)
        pts = [peak] if lo < peak < 0.0 else None
        val, err = integrate.quad(
            integrand, lo, 0.0, points=pts,
            epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=_QUAD_LIMIT,
        )
    else:
        disc = zeta * zeta + 4.0 * (r - 1.0)
        if disc >= 0.0:
            root = math.sqrt(disc)
            crit = 0.5 * (-zeta + root) if zeta <= 0.0 else 2.0 * (r - 1.0) / (zeta + root)
        else:
            crit = 1.0
        peak = max(crit, 1.0)
        scale = -zeta * peak - 0.5 * peak * peak + (r - 1.0) * math.log(peak)

        def g(x):
            return -zeta * x - 0.5 * x * x + (r - 1.0) * math.log(x) - scale

        def integrand(x):
            val = math.exp(g(x))
            return val * math.log(x) ** k if k else val

        hi = peak + 1.0
        while g(hi) > -_LOG_DROP:
            hi = peak + 2.0 * (hi - peak)
        pts = [peak] if 1.0 < peak < hi else None
        val, err = integrate.quad(
            integrand, 1.0, hi, points=pts,
            epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=_QUAD_LIMIT,
        )
    return val, scale, err


def a_integrals(r, zeta) -> AIntegrals:
    """Adaptive-quadrature evaluation of A, A_r and A_rr at (zeta, r).

    This is the error-controlled reference path: each integral is
    integrated piecewise by adaptive Gauss-Kronrod (tolerance 1e-12,
    up to 2000 subdivisions) after the same x = e^u split used by the
    fast path, and a :class:`QuadratureError` is raised if the reported
    error estimate is out of tolerance.

    Parameters
    ----------
    r : float
        Order, r > 0.
    zeta : float
        Argument, finite.
    """
    r = float(r)
    zeta = _validate_finite("zeta", zeta)
    if not (r > 0.0) or not math.isfinite(r):
        raise ValueError(f"a_integrals requires r > 0, got {r!r}")

    results = []
    for k in (0, 1, 2):
        logs, signs = [], []
        for lower in (True, False):
            val, scale, err = _a_piece_adaptive(r, zeta, k, lower)
            if err > 1e-8 * max(abs(val), 1.0):
                raise QuadratureError(
                    f"A_{k}({zeta}, {r}) piece did not converge", err
                )
            if val != 0.0:
                logs.append(math.log(abs(val)) + scale)
                signs.append(math.copysign(1.0, val))
        if not logs:
            results.append(LogValue(log_abs=-math.inf, sign=1))
            continue
        log_abs, sign = _signed_log_sum(
            np.asarray(logs)[:, None], np.asarray(signs)[:, None]
        )
        results.append(LogValue(log_abs=float(log_abs[0]), sign=int(sign[0])))
    return AIntegrals(zeta=zeta, r=r, a=results[0], a_r=results[1], a_rr=results[2])


# ----------------------------------------------------------------------
# Classical special functions
# ----------------------------------------------------------------------

def erf(x):
    """Error function."""
    return sps.erf(x)


def log_gamma(r):
    """ln Gamma(r) for r > 0."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0):
        raise ValueError("log_gamma requires r > 0")
    out = sps.gammaln(r_arr)
    return float(out) if np.ndim(r) == 0 else out


def digamma(r):
    """Digamma function psi(r) for r > 0."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0):
        raise ValueError("digamma requires r > 0 (poles at 0, -1, -2, ...)")
    out = sps.psi(r_arr)
    return float(out) if np.ndim(r) == 0 else out


def trigamma(r):
    """Trigamma function psi_1(r) for r > 0."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0):
        raise ValueError("trigamma requires r > 0 (poles at 0, -1, -2, ...)")
    out = sps.polygamma(1, r_arr)
    return float(out) if np.ndim(r) == 0 else out
