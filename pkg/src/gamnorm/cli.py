"""Command-line interface.

Subcommands
-----------
fit       maximum-likelihood fit of a data file, JSON report
table     critical-value (upper-quantile) table of the overdispersed
          chi-squared family, plus the plain chi-squared reference rows
pdf, cdf, quantile
          batch evaluation at points given as arguments or in a file
sample    write a reproducible sample to CSV
gof       one-sample Kolmogorov-Smirnov test of a data file

Exit codes: 0 success, 1 usage or I/O error, 2 fit did not converge
(a report is still emitted).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional

import numpy as np
from scipy import stats

from . import mle
from .dataset import Dataset
from .dist import EnParams, GnParams, OdChi2Params, cdf, log_pdf, pdf, quantile, sample

__all__ = ["main", "entry_point"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2

_TABLE_P = (0.5, 0.9, 0.95, 0.99, 0.999)
_TABLE_SIGMA = (1.0, 2.0, 5.0, 10.0)
_TABLE_NU = (1, 2, 3, 4, 5, 10)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so usage errors map to 1."""

    def error(self, message):
        raise _UsageError(message)


def _read_values(path: str) -> np.ndarray:
    """One value per line; '#' comments and a single non-numeric header allowed."""
    values = []
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            token = line.split(",")[0].strip()
            try:
                values.append(float(token))
            except ValueError:
                if not header_seen and not values:
                    header_seen = True
                    continue
                raise _UsageError(f"{path}:{lineno}: cannot parse value {token!r}")
    if not values:
        raise _UsageError(f"{path}: no data values found")
    return np.asarray(values)


def _parse_fix(items) -> dict:
    fixed = {}
    for item in items or []:
        if "=" not in item:
            raise _UsageError(f"--fix expects name=value, got {item!r}")
        name, _, val = item.partition("=")
        name = name.strip()
        try:
            fixed[name] = float(val)
        except ValueError:
            raise _UsageError(f"--fix {name}: cannot parse value {val!r}")
    return fixed


def _params_from_args(args) -> GnParams:
    kind = args.dist
    mu = args.mu if args.mu is not None else 0.0  # location defaults to 0
    try:
        if kind == "gn":
            missing = [n for n in ("alpha", "r", "sigma") if getattr(args, n) is None]
            if missing:
                raise _UsageError(f"--dist gn requires --{', --'.join(missing)}")
            return GnParams(args.alpha, args.r, mu, args.sigma)
        if kind == "en":
            if args.r is not None:
                raise _UsageError("--dist en pins r = 1; do not pass --r")
            missing = [n for n in ("alpha", "sigma") if getattr(args, n) is None]
            if missing:
                raise _UsageError(f"--dist en requires --{', --'.join(missing)}")
            return EnParams(args.alpha, mu, args.sigma).to_gn()
        if args.alpha is not None:
            raise _UsageError("--dist odchi2 pins alpha = 1/2; do not pass --alpha")
        missing = [n for n in ("nu", "sigma") if getattr(args, n) is None]
        if missing:
            raise _UsageError(f"--dist odchi2 requires --{', --'.join(missing)}")
        return OdChi2Params(args.nu, mu, args.sigma).to_gn()
    except ValueError as exc:
        raise _UsageError(str(exc))


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _fit_report(result: mle.FitResult, data: Dataset) -> dict:
    th = result.theta_hat
    names = result.free_names()
    cov = result.covariance
    se = result.standard_errors
    d_n, p_value = mle.ks_test(data, th)
    report = {
        "n": result.n_obs,
        "shift": data.shift,
        "free_parameters": names,
        "params": {
            "alpha": th.alpha,
            "r": th.r,
            "mu": th.mu,
            "sigma": th.sigma,
            "sigma2": th.sigma2,
            "nu": th.nu,
        },
        "standard_errors": (
            {name: float(v) for name, v in zip(names, se)} if se is not None else None
        ),
        "covariance": cov.tolist() if cov is not None else None,
        "covariance_reason": None if cov is not None else "information matrix not positive definite",
        "observed_info": result.observed_info.tolist(),
        "eigenvalues": result.eigenvalues.tolist(),
        "determinant": _finite_or_none(result.determinant),
        "positive_definite": result.positive_definite,
        "log_likelihood": _finite_or_none(result.log_likelihood),
        "sprott_residual": _finite_or_none(mle.sprott_residual(result, data)),
        "sprott_implied_alpha": _finite_or_none(mle.sprott_implied_alpha(result, data)),
        "sprott_implied_r": _finite_or_none(mle.sprott_implied_r(result, data)),
        "ks": {"d_n": d_n, "p_value": p_value},
        "convergence": {
            "converged": result.converged,
            "iterations": result.iterations,
            "score_inf_norm": float(np.max(np.abs(result.score_residual))),
        },
    }
    diag = mle.identifiability_report(result)
    report["identifiability"] = {
        "eig_ratio": _finite_or_none(diag.eig_ratio),
        "condition_number": _finite_or_none(diag.condition_number),
        "det_scaled": _finite_or_none(diag.det_scaled),
        "flagged_near_singular": diag.flagged_near_singular,
    }
    return report


def _emit(text: str, output: Optional[str]):
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def _cmd_fit(args) -> int:
    values = _read_values(args.input)
    data = Dataset(values)
    fixed = _parse_fix(args.fix)
    kind = args.dist
    if kind == "en":
        if "r" in fixed:
            raise _UsageError("--dist en already fixes r = 1")
        fixed["r"] = 1.0
    elif kind == "odchi2":
        if "alpha" in fixed:
            raise _UsageError("--dist odchi2 already fixes alpha = 1/2")
        if "nu" in fixed:
            fixed["r"] = 0.5 * fixed.pop("nu")
        fixed["alpha"] = 0.5
    elif "nu" in fixed:
        raise _UsageError("--fix nu is only meaningful with --dist odchi2")

    kwargs = {}
    if args.tol_score is not None:
        kwargs["score_tol"] = args.tol_score
    if args.max_iter is not None:
        kwargs["max_iter"] = args.max_iter
    result = mle.fit_gn(data, fixed=fixed, **kwargs)
    report = _fit_report(result, data)
    _emit(json.dumps(report, indent=2) + "\n", args.output)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _float_list(text, name):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise _UsageError(f"--{name} expects a comma-separated list of numbers")


def _cmd_table(args) -> int:
    p_list = _float_list(args.p_list, "p-list") if args.p_list else list(_TABLE_P)
    sigma_list = _float_list(args.sigma_list, "sigma-list") if args.sigma_list else list(_TABLE_SIGMA)
    nu_list = _float_list(args.nu_list, "nu-list") if args.nu_list else list(_TABLE_NU)
    rows = []
    for p in p_list:
        if not (0.0 < p < 1.0):
            raise _UsageError(f"table probabilities must lie in (0, 1), got {p}")
        for sg in sigma_list:
            for nu in nu_list:
                params = OdChi2Params(nu, 0.0, sg).to_gn()
                rows.append({"p": p, "sigma": sg, "nu": nu,
                             "quantile": quantile(params, p)})
        if not args.no_chi2:
            for nu in nu_list:
                rows.append({"p": p, "sigma": "chi2", "nu": nu,
                             "quantile": float(stats.chi2.ppf(p, nu))})

    if args.out == "json":
        text = json.dumps(rows, indent=2) + "\n"
    elif args.out == "text":
        lines = [f"{'p':>8} {'sigma':>8} {'nu':>6} {'quantile':>12}"]
        for row in rows:
            lines.append(
                f"{row['p']:>8} {str(row['sigma']):>8} {row['nu']:>6} {row['quantile']:>12.3f}"
            )
        text = "\n".join(lines) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["p", "sigma", "nu", "quantile"])
        writer.writeheader()
        for row in rows:
            writer.writerow({**row, "quantile": f"{row['quantile']:.6f}"})
        text = buf.getvalue()
    _emit(text, args.output)
    return EXIT_OK


def _collect_points(args) -> np.ndarray:
    pts = [float(p) for p in args.points]
    if args.input:
        pts.extend(_read_values(args.input).tolist())
    if not pts:
        raise _UsageError("no evaluation points given (pass values or --input FILE)")
    return np.asarray(pts)


def _emit_values(points, values, args):
    if args.out == "json":
        text = json.dumps(
            [{"z": float(z), "value": float(v)} for z, v in zip(points, values)],
            indent=2,
        ) + "\n"
    elif args.out == "csv":
        lines = ["z,value"] + [f"{float(z)!r},{float(v)!r}" for z, v in zip(points, values)]
        text = "\n".join(lines) + "\n"
    else:
        text = "\n".join(f"{float(v)!r}" for v in values) + "\n"
    _emit(text, args.output)


def _cmd_pdf(args) -> int:
    params = _params_from_args(args)
    pts = _collect_points(args)
    vals = [pdf(params, z) for z in pts]
    _emit_values(pts, vals, args)
    return EXIT_OK


def _cmd_cdf(args) -> int:
    params = _params_from_args(args)
    pts = _collect_points(args)
    vals = [cdf(params, z) for z in pts]
    if args.pvalue:
        vals = [1.0 - v for v in vals]
    _emit_values(pts, vals, args)
    return EXIT_OK


def _cmd_quantile(args) -> int:
    params = _params_from_args(args)
    probs = [float(p) for p in args.points]
    if args.p is not None:
        probs.append(args.p)
    if args.input:
        probs.extend(_read_values(args.input).tolist())
    if not probs:
        raise _UsageError("no probabilities given (pass values, --p, or --input FILE)")
    for p in probs:
        if not (0.0 < p < 1.0):
            raise _UsageError(f"probabilities must lie in (0, 1), got {p}")
    vals = [quantile(params, p) for p in probs]
    _emit_values(np.asarray(probs), vals, args)
    return EXIT_OK


def _cmd_sample(args) -> int:
    params = _params_from_args(args)
    if args.n < 1:
        raise _UsageError(f"--n must be at least 1, got {args.n}")
    if args.seed is None:
        raise _UsageError("--seed is required for sample (reproducibility contract)")
    data = sample(params, args.n, args.seed)
    header = (
        f"# gamnorm sample dist={args.dist} alpha={params.alpha!r} r={params.r!r} "
        f"mu={params.mu!r} sigma={params.sigma!r} n={args.n} seed={args.seed}\n"
    )
    body = "\n".join(f"{float(v)!r}" for v in data.values) + "\n"
    _emit(header + body, args.output)
    return EXIT_OK


def _cmd_gof(args) -> int:
    params = _params_from_args(args)
    values = _read_values(args.input)
    data = Dataset(values)
    d_n, p_value = mle.ks_test(data, params)
    text = json.dumps({"n": data.n, "d_n": d_n, "p_value": p_value}, indent=2) + "\n"
    _emit(text, args.output)
    return EXIT_OK


# ----------------------------------------------------------------------
# Parser assembly
# ----------------------------------------------------------------------

def _add_param_flags(p: _Parser):
    p.add_argument("--dist", choices=("gn", "en", "odchi2"), default="gn")
    p.add_argument("--alpha", type=float, default=None, help="gamma rate")
    p.add_argument("--r", type=float, default=None, help="gamma shape")
    p.add_argument("--mu", type=float, default=None, help="normal mean")
    p.add_argument("--sigma", type=float, default=None,
                   help="normal standard deviation (not the variance)")
    p.add_argument("--nu", type=float, default=None,
                   help="degrees of freedom (odchi2 only; nu = 2r)")


def _add_output_flags(p: _Parser, default_out="text"):
    p.add_argument("--out", choices=("json", "csv", "text"), default=default_out)
    p.add_argument("--output", default=None, help="write to PATH instead of stdout")


def build_parser() -> _Parser:
    parser = _Parser(prog="gamnorm", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="maximum-likelihood fit of a data file")
    p_fit.add_argument("input", help="data file, one value per line")
    p_fit.add_argument("--dist", choices=("gn", "en", "odchi2"), default="gn")
    p_fit.add_argument("--fix", action="append", metavar="NAME=VALUE",
                       help="hold a parameter fixed (repeatable)")
    p_fit.add_argument("--tol-score", type=float, default=None)
    p_fit.add_argument("--max-iter", type=int, default=None)
    p_fit.add_argument("--out", choices=("json",), default="json")
    p_fit.add_argument("--output", default=None)
    p_fit.set_defaults(func=_cmd_fit)

    p_table = sub.add_parser("table", help="critical-value table")
    p_table.add_argument("--p-list", default=None)
    p_table.add_argument("--sigma-list", default=None)
    p_table.add_argument("--nu-list", default=None)
    p_table.add_argument("--no-chi2", action="store_true",
                         help="omit the chi-squared reference rows")
    _add_output_flags(p_table, default_out="csv")
    p_table.set_defaults(func=_cmd_table)

    for name, func, extra in (
        ("pdf", _cmd_pdf, ()),
        ("cdf", _cmd_cdf, ("pvalue",)),
        ("quantile", _cmd_quantile, ("p",)),
    ):
        sp = sub.add_parser(name, help=f"evaluate the {name} at given points")
        _add_param_flags(sp)
        sp.add_argument("points", nargs="*", help="evaluation points")
        sp.add_argument("--input", default=None, help="read points from FILE")
        if "pvalue" in extra:
            sp.add_argument("--pvalue", action="store_true",
                            help="print 1 - cdf (upper-tail p-value)")
        if "p" in extra:
            sp.add_argument("--p", type=float, default=None,
                            help="single probability to invert")
        _add_output_flags(sp)
        sp.set_defaults(func=func)

    p_sample = sub.add_parser("sample", help="draw a reproducible sample")
    _add_param_flags(p_sample)
    p_sample.add_argument("--n", type=int, required=True)
    p_sample.add_argument("--seed", type=int, default=None)
    p_sample.add_argument("--output", default=None)
    p_sample.set_defaults(func=_cmd_sample)

    p_gof = sub.add_parser("gof", help="one-sample Kolmogorov-Smirnov test")
    p_gof.add_argument("input", help="data file, one value per line")
    _add_param_flags(p_gof)
    _add_output_flags(p_gof, default_out="json")
    p_gof.set_defaults(func=_cmd_gof)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
