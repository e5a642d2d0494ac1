"""Estimation-quality metrics, likelihood comparisons, and fit diagnostics.

Covers kernel recovery error (RMISE), baseline error on the log scale,
interval score / coverage / width for credible intervals, best-observed
likelihood ratios across subsampling ratios, the time-rescaling uniformity
check, and the compensator information-loss ratio with its analytic bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.stats import kstest

from .core import EventSequence, HawkesParams, _prefix_state
from .results import CredibleIntervals

__all__ = [
    "EstimationReport",
    "FitComparison",
    "QQReport",
    "kernel_ise",
    "rmise",
    "mae_mu",
    "interval_score",
    "coverage_and_width",
    "estimation_report",
    "bodl_rbodl",
    "time_rescaling_qq",
    "qq_pairs",
    "info_loss_ratio",
    "info_loss_bound",
]


def kernel_ise(a1, b1, a2, b2):
    """``int_0^inf (a1 b1 e^{-b1 t} - a2 b2 e^{-b2 t})^2 dt``, elementwise."""
    a1, b1, a2, b2 = np.broadcast_arrays(a1, b1, a2, b2)
    return a1**2 * b1 / 2.0 + a2**2 * b2 / 2.0 - 2.0 * a1 * a2 * b1 * b2 / (b1 + b2)


def rmise(truth: HawkesParams, est: HawkesParams, mask: np.ndarray | None = None) -> float:
    """Average over kernel pairs of the root integrated squared error.

    ``mask`` restricts the average to selected pairs (typically the nonzero
    true weights in sparse scenarios).
    """
    ise = kernel_ise(truth.alpha, truth.beta, est.alpha, est.beta)
    per_pair = np.sqrt(np.maximum(ise, 0.0))
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != per_pair.shape:
            raise ValueError("mask shape must match the weight matrix")
        if not mask.any():
            raise ValueError("mask selects no kernel pairs")
        per_pair = per_pair[mask]
    return float(per_pair.mean())


def mae_mu(true_mu: np.ndarray, est_mu: np.ndarray) -> float:
    """Mean absolute log-scale error of the baseline rates."""
    true_mu = np.asarray(true_mu, dtype=np.float64)
    est_mu = np.asarray(est_mu, dtype=np.float64)
    if np.any(est_mu <= 0.0) or np.any(true_mu <= 0.0):
        raise ValueError("baseline rates must be positive")
    return float(np.mean(np.abs(np.log(true_mu) - np.log(est_mu))))


def interval_score(lo, hi, x, level: float = 0.95) -> float:
    """Mean interval score: width plus ``2/(1-level)`` times any exceedance."""
    lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
    hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(lo > hi):
        raise ValueError("interval lower bounds must not exceed upper bounds")
    pen = 2.0 / (1.0 - level)
    score = (hi - lo) + pen * np.maximum(lo - x, 0.0) + pen * np.maximum(x - hi, 0.0)
    return float(score.mean())


def _theta_vector(params: HawkesParams) -> np.ndarray:
    return np.concatenate([params.mu, params.alpha.ravel(), params.beta.ravel()])


def coverage_and_width(
    intervals: CredibleIntervals, truth: HawkesParams
) -> tuple[float, float]:
    """Fraction of the 2K^2+K parameters covered, and the mean interval width."""
    lo = intervals.lows()
    hi = intervals.highs()
    x = _theta_vector(truth)
    if lo.shape != x.shape:
        raise ValueError("intervals and truth disagree on the parameter count")
    acr = float(np.mean((lo <= x) & (x <= hi)))
    aiw = float(np.mean(hi - lo))
    return acr, aiw


@dataclass
class EstimationReport:
    """One row of the estimation-metric tables; NaN where no intervals exist."""

    rmise: float
    mae_mu: float
    is95: float
    acr: float
    aiw: float

    def to_dict(self) -> dict:
        return {
            "rmise": self.rmise,
            "mae_mu": self.mae_mu,
            "is95": self.is95,
            "acr": self.acr,
            "aiw": self.aiw,
        }


def estimation_report(
    truth: HawkesParams,
    est: HawkesParams,
    intervals: CredibleIntervals | None,
    mask: np.ndarray | None = None,
) -> EstimationReport:
    if intervals is None:
        is95 = acr = aiw = float("nan")
    else:
        x = _theta_vector(truth)
        is95 = interval_score(intervals.lows(), intervals.highs(), x, intervals.level)
        acr, aiw = coverage_and_width(intervals, truth)
    return EstimationReport(rmise(truth, est, mask), mae_mu(truth.mu, est.mu), is95, acr, aiw)


@dataclass
class FitComparison:
    """Best observed likelihood per subsampling ratio and ratios vs a reference."""

    ref_kappa: float
    bodl: dict[float, float]
    rbodl: dict[float, float]


def bodl_rbodl(
    odls_by_kappa: Mapping[float, Sequence[float]], ref_kappa: float
) -> FitComparison:
    """Best (over initializations) observed log-likelihood per kappa, plus ratios.

    The ratio is taken against ``ref_kappa``'s best value; it compares fits
    meaningfully when the likelihoods share a sign.
    """
    if ref_kappa not in odls_by_kappa:
        raise ValueError("reference kappa missing from the supplied runs")
    bodl: dict[float, float] = {}
    for kappa, odls in odls_by_kappa.items():
        odls = [float(v) for v in odls]
        if not odls:
            raise ValueError(f"no runs supplied for kappa={kappa}")
        bodl[kappa] = max(odls)
    ref = bodl[ref_kappa]
    rbodl = {kappa: val / ref for kappa, val in bodl.items()}
    return FitComparison(ref_kappa, bodl, rbodl)


@dataclass
class QQReport:
    """Per-dimension rescaled inter-arrival uniforms with KS statistics."""

    z: list
    ks_stat: np.ndarray
    p_value: np.ndarray


def _compensator_at_events(seq: EventSequence, params: HawkesParams) -> np.ndarray:
    """``Lambda_{d_i}(t_i)`` for every event, by the closed-form kernel integral."""
    n, K = seq.n, seq.K
    if n == 0:
        return np.zeros(0)
    S1, _ = _prefix_state(seq.times, seq.dims, K, params.beta, with_dt=False)
    onehot = np.zeros((n, K))
    onehot[np.arange(n), seq.dims] = 1.0
    prior_counts = np.cumsum(onehot, axis=0) - onehot
    return params.mu[seq.dims] * seq.times + np.einsum(
        "ik,ki->i", prior_counts - S1, params.alpha[:, seq.dims]
    )


def time_rescaling_qq(seq: EventSequence, params: HawkesParams) -> QQReport:
    """Transform per-dimension inter-arrivals through the fitted compensator.

    Under a well-specified model the values ``z = 1 - exp(-dLambda)`` are
    iid Uniform(0,1); each dimension gets a KS statistic and p-value against
    that. Dimensions with no events report NaN.
    """
    lam = _compensator_at_events(seq, params)
    z_by_dim: list[np.ndarray] = []
    ks = np.full(seq.K, np.nan)
    pv = np.full(seq.K, np.nan)
    for ell in range(seq.K):
        vals = lam[seq.dims == ell]
        if vals.size == 0:
            z_by_dim.append(np.zeros(0))
            continue
        gaps = np.diff(vals, prepend=0.0)
        z = -np.expm1(-np.maximum(gaps, 0.0))
        z_by_dim.append(z)
        res = kstest(z, "uniform")
        ks[ell] = res.statistic
        pv[ell] = res.pvalue
    return QQReport(z_by_dim, ks, pv)


def qq_pairs(z: np.ndarray) -> np.ndarray:
    """Sorted empirical values against uniform plotting positions, (n, 2)."""
    z = np.sort(np.asarray(z, dtype=np.float64))
    n = z.shape[0]
    theo = (np.arange(1, n + 1) - 0.5) / n
    return np.column_stack([theo, z])


def info_loss_ratio(beta: float, delta: float, T: float) -> float:
    """Average relative error of the near-horizon compensator surrogate.

    The integrand is the relative shortfall of each possible event position's
    contribution: events far from the horizon contribute their full kernel
    integral against a surrogate of one, events within ``delta`` of it are
    measured against the linearized value ``beta (T - t)``.
    """
    if beta <= 0.0 or delta <= 0.0 or T <= 0.0:
        raise ValueError("beta, delta, T must be positive")
    if delta >= T:
        raise ValueError("delta must be smaller than T")

    def far(t):
        return np.exp(-beta * (T - t))

    def near(t):
        u = beta * (T - t)
        return np.where(u > 0.0, 1.0 + np.expm1(-u) / np.where(u > 0.0, u, 1.0), 0.0)

    far_part, _ = quad(far, 0.0, T - delta, limit=200)
    near_part, _ = quad(near, T - delta, T, limit=200)
    return (far_part + near_part) / T


def info_loss_bound(beta: float, delta: float, T: float) -> float:
    """Analytic two-part bound on the information loss ratio."""
    return float(
        (1.0 - np.exp(-beta * (T - delta))) / (beta * T) + beta * delta**2 / (4.0 * T)
    )
