"""Weighted least-squares fits of the two candidate scaling laws,
beta = a + b ln N and beta = c N^alpha, with 95% confidence intervals
from classic regression theory (t-distribution, scaled covariance).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

# Reference constants for the 2d spin-glass crossover: the gap's
# discreteness washes out beyond N^(theta/2) ~ beta, after which the
# specific heat behaves as T^(2 nu), implying beta ~ N^(1/(2 nu)).
CROSSOVER_THETA = 0.5
NU_2D = 3.53
NU_2D_ERR = 0.07
ALPHA_CONTINUOUS = 2.0 * NU_2D
BETA_POWER_2D = 1.0 / (2.0 * NU_2D)  # ~ 0.1416


@dataclass(frozen=True)
class ScalingFit:
    model: str  # "log_law" or "power_law"
    params: dict
    ci95: dict  # symmetric intervals on the fitted (transformed) scale
    rss: float  # residual sum of squares on the original (N, y) scale
    n_points: int
    n_values: np.ndarray
    y: np.ndarray
    y_err: Optional[np.ndarray]

    def predict(self, n_values) -> np.ndarray:
        n_values = np.asarray(n_values, dtype=np.float64)
        if self.model == "log_law":
            return self.params["a"] + self.params["b"] * np.log(n_values)
        return self.params["c"] * n_values ** self.params["alpha"]

    def report(self) -> dict:
        flags = []
        if self.model == "power_law":
            lo, hi = self.ci95["alpha"]
            if lo <= BETA_POWER_2D <= hi:
                flags.append("alpha_ci_contains_2d_crossover_prediction")
        return {
            "model": self.model,
            "params": self.params,
            "ci95": {k: list(v) for k, v in self.ci95.items()},
            "rss": self.rss,
            "n_points": self.n_points,
            "flags": flags,
        }


def _parse_points(points):
    n_values, y, errs = [], [], []
    for p in points:
        if len(p) == 2:
            n_i, y_i, e_i = p[0], p[1], None
        else:
            n_i, y_i, e_i = p
        n_values.append(float(n_i))
        y.append(float(y_i))
        errs.append(None if e_i is None else float(e_i))
    n_values = np.asarray(n_values)
    y = np.asarray(y)
    if len(n_values) < 3:
        raise ValueError("need at least 3 points")
    if len(np.unique(n_values)) != len(n_values):
        raise ValueError("problem sizes must be distinct")
    if any(e is None or e <= 0 for e in errs):
        y_err = None  # unweighted fallback when any error is absent
    else:
        y_err = np.asarray(errs, dtype=np.float64)
    return n_values, y, y_err


def _wls_line(x, y, y_err):
    """Weighted straight-line fit; returns (intercept, slope, half-widths).

    Half-widths are 95% from the t-distribution on n-2 dof with the
    covariance scaled by the reduced chi-square, i.e. errors fix relative
    weights only.
    """
    w = np.ones_like(x) if y_err is None else 1.0 / y_err ** 2
    design = np.column_stack([np.ones_like(x), x])
    wa = design * w[:, None]
    ata = design.T @ wa
    try:
        cov_unscaled = np.linalg.inv(ata)
    except np.linalg.LinAlgError as exc:
        raise ValueError("rank-deficient design; cannot fit") from exc
    params = cov_unscaled @ (wa.T @ y)
    resid = y - design @ params
    dof = len(x) - 2
    if dof <= 0:
        raise ValueError("need more points than parameters")
    scale = float(resid @ (w * resid)) / dof
    cov = cov_unscaled * scale
    tq = stats.t.ppf(0.975, dof)
    half = tq * np.sqrt(np.diag(cov))
    return params, half


def fit_log_law(points) -> ScalingFit:
    """Fit y = a + b ln N by (weighted) least squares."""
    n_values, y, y_err = _parse_points(points)
    params, half = _wls_line(np.log(n_values), y, y_err)
    a, b = params
    fit = ScalingFit(
        model="log_law",
        params={"a": float(a), "b": float(b)},
        ci95={"a": (float(a - half[0]), float(a + half[0])),
              "b": (float(b - half[1]), float(b + half[1]))},
        rss=float(np.sum((y - (a + b * np.log(n_values))) ** 2)),
        n_points=len(n_values),
        n_values=n_values,
        y=y,
        y_err=y_err,
    )
    return fit


def fit_power_law(points) -> ScalingFit:
    """Fit y = c N^alpha by least squares of ln y on ln N."""
    n_values, y, y_err = _parse_points(points)
    if np.any(y <= 0):
        raise ValueError("power-law fit needs positive y values")
    ln_err = None if y_err is None else y_err / y
    params, half = _wls_line(np.log(n_values), np.log(y), ln_err)
    ln_c, alpha = params
    c = float(np.exp(ln_c))
    pred = c * n_values ** alpha
    return ScalingFit(
        model="power_law",
        params={"c": c, "alpha": float(alpha)},
        ci95={
            "c": (float(np.exp(ln_c - half[0])), float(np.exp(ln_c + half[0]))),
            "alpha": (float(alpha - half[1]), float(alpha + half[1])),
        },
        rss=float(np.sum((y - pred) ** 2)),
        n_points=len(n_values),
        n_values=n_values,
        y=y,
        y_err=y_err,
    )


@dataclass(frozen=True)
class ModelComparison:
    rss_log: float
    rss_power: float
    ratio: float  # rss_log / rss_power
    preferred: str
    indistinguishable: bool

    def report(self) -> dict:
        return {
            "rss_log": self.rss_log,
            "rss_power": self.rss_power,
            "ratio_log_over_power": self.ratio,
            "preferred": self.preferred,
            "indistinguishable": self.indistinguishable,
        }


def compare_models(fit_log: ScalingFit, fit_power: ScalingFit) -> ModelComparison:
    """RSS comparison on the original scale; within a factor of two the
    two laws are flagged indistinguishable."""
    if fit_log.model != "log_law" or fit_power.model != "power_law":
        raise ValueError("pass (log fit, power fit) in that order")
    if not (np.array_equal(fit_log.n_values, fit_power.n_values)
            and np.array_equal(fit_log.y, fit_power.y)):
        raise ValueError("fits must share the same underlying points")
    tiny = 1e-300
    ratio = (fit_log.rss + tiny) / (fit_power.rss + tiny)
    return ModelComparison(
        rss_log=fit_log.rss,
        rss_power=fit_power.rss,
        ratio=float(ratio),
        preferred="log" if fit_log.rss <= fit_power.rss else "power",
        indistinguishable=bool(0.5 <= ratio <= 2.0),
    )


def residual_scaling(points, drop_smallest: int = 0):
    """Power-law fits of the mean residual energy and of sigma(H) vs N.

    `points` holds (N, mean_residual, sigma) triples; `drop_smallest`
    excludes that many of the smallest sizes, mirroring the practice of
    fitting all sizes but the smallest.  Returns (mean_fit, sigma_fit).
    """
    pts = sorted((float(n), float(m), float(s)) for n, m, s in points)
    if drop_smallest:
        pts = pts[drop_smallest:]
    mean_fit = fit_power_law([(n, m) for n, m, _ in pts])
    sigma_fit = fit_power_law([(n, s) for n, _, s in pts])
    return mean_fit, sigma_fit
