"""Gamma-normal distribution: density, inference and diagnostics.

The package models the sum of an independent gamma and normal random
variable, GN(alpha, r, mu, sigma^2), through a closed-form density built
on parabolic cylinder functions, together with analytic score equations
and the observed Fisher information for maximum-likelihood estimation.
The exponential-normal (r = 1) and overdispersed chi-squared
(alpha = 1/2) families are exposed as first-class special cases.
"""

from .dataset import Dataset
from .dist import (
    EnParams,
    GnParams,
    Moments,
    OdChi2Params,
    cdf,
    convolve_params,
    log_pdf,
    moments,
    normal_approx,
    pdf,
    pdf_b,
    pdf_en,
    quantile,
    sample,
)
from .mle import (
    FitResult,
    FitSpec,
    InfoSums,
    ScoreSums,
    fit,
    fit_en,
    fit_gn,
    fit_od_chi2,
    identifiability_report,
    ks_test,
    log_likelihood,
    observed_info,
    plug_in_fit,
    score,
    sprott_residual,
    reduced_system_residual,
)
from .specfun import (
    AIntegrals,
    PcfEval,
    QuadratureError,
    a_integrals,
    pcf_d,
    pcf_d_prime,
    pcf_ratio,
    pcf_ratio_dr,
    pcf_ratio_dzeta,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "GnParams",
    "EnParams",
    "OdChi2Params",
    "Moments",
    "log_pdf",
    "pdf",
    "pdf_en",
    "pdf_b",
    "cdf",
    "quantile",
    "sample",
    "moments",
    "convolve_params",
    "normal_approx",
    "FitSpec",
    "FitResult",
    "ScoreSums",
    "InfoSums",
    "fit",
    "fit_gn",
    "fit_en",
    "fit_od_chi2",
    "plug_in_fit",
    "log_likelihood",
    "score",
    "observed_info",
    "sprott_residual",
    "reduced_system_residual",
    "ks_test",
    "identifiability_report",
    "PcfEval",
    "AIntegrals",
    "QuadratureError",
    "pcf_d",
    "pcf_d_prime",
    "pcf_ratio",
    "pcf_ratio_dzeta",
    "pcf_ratio_dr",
    "a_integrals",
    "__version__",
]
