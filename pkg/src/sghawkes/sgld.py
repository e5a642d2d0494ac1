"""Stochastic-gradient Langevin sampling in log-parameter space.

Each iteration draws a window, forms an unbiased estimate of the gradient of
the negative log posterior (the window log-likelihood is rescaled by 1/kappa
so the stationary target stays the full-data posterior), and takes a Langevin
step on xi = log(theta) with injected Gaussian noise. Working on the log
scale keeps every parameter positive and adds a Jacobian term to the
potential.
"""

from __future__ import annotations

import numpy as np

from .core import (
    EXACT,
    CompensatorMode,
    EventSequence,
    GammaPriorSet,
    HawkesParams,
    compensator_matrix,
    log_likelihood,
    log_likelihood_flags,
    responsibility_sums,
)
from .results import CredibleIntervals, FitResult, SampleChain, pack_log_params, unpack_log_params
from .schedule import Budget, BudgetClock, StepSchedule
from .sgem import init_params
from .subsample import WindowDraw, draw_window

__all__ = [
    "sgld_step_scale",
    "potential",
    "grad_potential",
    "sgld_step",
    "fit_sgld",
]

_XI_DIVERGED = 50.0


def sgld_step_scale(T: float, kappa: float) -> float:
    """Default base step size, inversely proportional to the window length."""
    return 0.1 / (kappa * T)


def _beta_compensator_grad(
    events: EventSequence, params: HawkesParams, mode: CompensatorMode
) -> np.ndarray:
    """``alpha * d/d(beta) of the kernel-integral compensator term``, (K, K).

    Zero under the event-count approximation, constant lag sums under the
    boundary correction, and ``sum_j dt_j exp(-beta dt_j)`` exactly.
    """
    K = events.K
    out = np.zeros((K, K))
    if mode.kind == "lewis":
        return out
    dt_all = events.T - events.times
    if mode.kind == "boundary":
        near = dt_all < mode.delta
        lag = np.zeros(K)
        if near.any():
            np.add.at(lag, events.dims[near], dt_all[near])
        return params.alpha * lag[:, None]
    for k in range(K):
        dt = dt_all[events.dims == k]
        if dt.size == 0:
            continue
        out[k, :] = np.sum(dt[:, None] * np.exp(-np.outer(dt, params.beta[k, :])), axis=0)
    return params.alpha * out


def potential(
    xi: np.ndarray,
    window: WindowDraw,
    priors: GammaPriorSet,
    mode: CompensatorMode = EXACT,
) -> float:
    """Negative log target at ``xi``: rescaled window likelihood, prior, Jacobian."""
    params = unpack_log_params(xi, window.events.K)
    ll, under = log_likelihood_flags(window.events, params, mode)
    if under:
        return np.inf
    inv = 1.0 / window.kappa
    return -inv * ll - priors.log_pdf(params) - float(np.sum(xi))


def grad_potential(
    xi: np.ndarray,
    window: WindowDraw,
    priors: GammaPriorSet,
    mode: CompensatorMode = EXACT,
) -> np.ndarray:
    """Gradient of :func:`potential` with respect to ``xi``.

    The chain rule through ``theta = exp(xi)`` turns Gamma priors plus the
    Jacobian into ``rate * theta - shape`` and scales the likelihood part by
    ``theta``; the data sums come from the same responsibility kernel the
    other fitters use, with the full intensity in every denominator.
    """
    ev = window.events
    K = ev.K
    params = unpack_log_params(xi, K)
    inv = 1.0 / window.kappa
    self_sum, pair_sum, pair_dt_sum, _ = responsibility_sums(
        ev.times, ev.dims, K, params.mu, params.alpha * params.beta, params.beta
    )
    S = compensator_matrix(ev, params, mode)
    g_mu = -inv * (self_sum - params.mu * ev.T) + priors.b * params.mu - priors.a
    g_alpha = -inv * (pair_sum - params.alpha * S) + priors.f * params.alpha - priors.e
    comp_beta = _beta_compensator_grad(ev, params, mode)
    g_beta = (
        -inv * (pair_sum - params.beta * pair_dt_sum - params.beta * comp_beta)
        + priors.s * params.beta
        - priors.w
    )
    return np.concatenate([g_mu, g_alpha.ravel(), g_beta.ravel()])


def sgld_step(
    xi: np.ndarray,
    window: WindowDraw,
    priors: GammaPriorSet,
    rho: float,
    rng: np.random.Generator,
    mode: CompensatorMode = EXACT,
) -> np.ndarray:
    """One Langevin update: drift ``-rho/2 * grad U`` plus ``N(0, rho)`` noise."""
    g = grad_potential(xi, window, priors, mode)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("non-finite gradient")
    return xi - 0.5 * rho * g + np.sqrt(rho) * rng.standard_normal(xi.shape)


def fit_sgld(
    seq: EventSequence,
    priors: GammaPriorSet,
    sched: StepSchedule,
    kappa: float,
    budget: Budget,
    rng: np.random.Generator | int,
    mode: CompensatorMode = EXACT,
    init: HawkesParams | None = None,
    thin: int = 1,
    burn_frac: float = 0.5,
    trace_every: int | None = None,
    keep_chain: bool = False,
) -> FitResult:
    """Posterior sampling by stochastic-gradient Langevin dynamics.

    The first ``burn_frac`` of stored draws is discarded; the point estimate
    is the componentwise posterior median and intervals are equal-tailed
    percentiles of the retained draws. A draw whose log parameters leave
    ``[-50, 50]`` or whose gradient is non-finite marks the fit failed.
    """
    if mode.kind == "lewis":
        raise ValueError("use the exact or boundary_corrected gradient for this sampler")
    if thin < 1:
        raise ValueError("thin must be a positive integer")
    if not 0.0 <= burn_frac < 1.0:
        raise ValueError("burn_frac must lie in [0, 1)")
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    gen = np.random.default_rng(rng) if seed is not None else rng
    K = seq.K
    point = init if init is not None else init_params(priors, gen)
    xi = pack_log_params(point)
    clock = BudgetClock(budget)
    draws = [xi.copy()]
    trace: list[tuple[int, float]] = []
    failed = False
    failure = None
    r = 0
    while True:
        window = draw_window(seq, kappa, gen)
        try:
            xi = sgld_step(xi, window, priors, sched(r), gen, mode)
        except FloatingPointError:
            failed = True
            failure = f"non-finite gradient at iteration {r}"
            break
        r += 1
        if np.max(np.abs(xi)) > _XI_DIVERGED:
            failed = True
            failure = f"diverged at iteration {r}"
            break
        if r % thin == 0:
            draws.append(xi.copy())
        if trace_every is not None and r % trace_every == 0:
            trace.append((r, log_likelihood(seq, unpack_log_params(xi, K), EXACT)))
        if clock.exhausted(r):
            break
    xi_arr = np.asarray(draws)
    burn = int(burn_frac * xi_arr.shape[0])
    chain = SampleChain(xi_arr, K, burn_in=burn, thin=thin)
    kept = chain.theta()
    if failed or kept.shape[0] == 0:
        params = unpack_log_params(xi_arr[-1], K)
        intervals = None
    else:
        med = np.median(kept, axis=0)
        params = HawkesParams(
            med[:K], med[K:K + K * K].reshape(K, K), med[K + K * K:].reshape(K, K)
        )
        intervals = CredibleIntervals.from_draws(kept, K)
    odl = log_likelihood(seq, params, EXACT)
    mode_label = mode.kind if mode.delta is None else f"{mode.kind}:{mode.delta}"
    return FitResult(
        method="sgld" if mode.kind == "exact" else "sgld-apx",
        params=params,
        intervals=intervals,
        odl=odl,
        iterations=r,
        elapsed=clock.elapsed(),
        converged=False,
        kappa=kappa,
        mode=mode_label,
        seed=seed,
        trace=trace,
        failed=failed,
        failure=failure,
        extras={"burn_in": burn, "thin": thin, "n_draws": int(xi_arr.shape[0])},
        chain=chain if keep_chain else None,
    )
