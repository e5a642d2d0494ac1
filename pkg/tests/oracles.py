"""Slow reference implementations the test suite trusts.

Everything here trades speed for directness: plain Python loops over events,
adaptive quadrature instead of closed forms, exhaustive enumeration of latent
structures, and Monte Carlo where nothing simpler exists. None of it imports
the package's numerical kernels.
"""

import itertools
import math

import numpy as np
from scipy import integrate
from scipy.optimize import minimize_scalar
from scipy.special import digamma, gammaln


def direct_intensity(t, times, dims, mu, alpha, beta):
    """Intensity vector at t by summing every kernel term, O(nK)."""
    lam = np.array(mu, dtype=float).copy()
    K = lam.size
    for tj, dj in zip(times, dims):
        if tj < t:
            for l in range(K):
                a = alpha[dj][l]
                b = beta[dj][l]
                lam[l] += a * b * math.exp(-b * (t - tj))
    return lam


def quad_compensator(times, dims, T, mu, alpha, beta, K):
    """Integrated total intensity on [0, T], adaptive quadrature per piece.

    The integrand is smooth between events, so the integral is split at the
    event times and each piece handled by scipy with tight tolerances.
    """
    knots = [0.0] + [float(t) for t in times if 0.0 < t < T] + [float(T)]
    total = 0.0
    for l in range(K):
        def f(u, l=l):
            return direct_intensity(u, times, dims, mu, alpha, beta)[l]

        for lo, hi in zip(knots[:-1], knots[1:]):
            if hi <= lo:
                continue
            val, _ = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
            total += val
    return total


def quad_log_likelihood(times, dims, T, mu, alpha, beta, K):
    """Observed log-likelihood with the compensator done by quadrature."""
    ll = 0.0
    for i, (ti, di) in enumerate(zip(times, dims)):
        lam = direct_intensity(ti, times, dims, mu, alpha, beta)[di]
        ll += math.log(lam)
    return ll - quad_compensator(times, dims, T, mu, alpha, beta, K)


def direct_compensator(times, dims, T, mu, alpha, beta, K, kind="exact", delta=None):
    """Compensator total under each approximation, written longhand."""
    total = sum(mu) * T
    for tj, dj in zip(times, dims):
        for l in range(K):
            a = alpha[dj][l]
            b = beta[dj][l]
            rem = T - tj
            if kind == "exact":
                total += a * (1.0 - math.exp(-b * rem))
            elif kind == "lewis":
                total += a
            elif kind == "boundary":
                total += a * b * rem if rem < delta else a
            else:
                raise ValueError(kind)
    return total


def all_branchings(n):
    """Every parent assignment of an n-event sequence.

    Entry i of a tuple is i for an immigrant or j < i for a triggered event;
    there are n! such tuples for distinct candidate counts 1, 2, .., n.
    """
    return itertools.product(*(range(i + 1) for i in range(n)))


def direct_complete_ll(times, dims, T, parents, mu, alpha, beta, K, kind="exact", delta=None):
    """Complete-data log-likelihood of one branching, written longhand."""
    ll = 0.0
    for i, p in enumerate(parents):
        if p == i:
            ll += math.log(mu[dims[i]])
        else:
            k, l = dims[p], dims[i]
            if alpha[k][l] <= 0.0:
                return -math.inf
            dt = times[i] - times[p]
            ll += math.log(alpha[k][l]) + math.log(beta[k][l]) - beta[k][l] * dt
    return ll - direct_compensator(times, dims, T, mu, alpha, beta, K, kind, delta)


def naive_responsibilities(times, dims, K, self_w, pair_scale, decay):
    """Row-normalised parent weights aggregated the slow way.

    Mirrors the contract of the package's aggregation: returns
    (self_sum, pair_sum, pair_dt_sum) without any prefix tricks.
    """
    n = len(times)
    self_sum = np.zeros(K)
    pair_sum = np.zeros((K, K))
    pair_dt_sum = np.zeros((K, K))
    for i in range(n):
        li = dims[i]
        wj = []
        for j in range(i):
            kj = dims[j]
            dt = times[i] - times[j]
            wj.append(pair_scale[kj][li] * math.exp(-decay[kj][li] * dt))
        denom = self_w[li] + sum(wj)
        self_sum[li] += self_w[li] / denom
        for j in range(i):
            kj = dims[j]
            dt = times[i] - times[j]
            pair_sum[kj, li] += wj[j] / denom
            pair_dt_sum[kj, li] += wj[j] * dt / denom
    return self_sum, pair_sum, pair_dt_sum


def fd_gradient(f, x, h=1e-5):
    """Central finite differences, one coordinate at a time."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def argmax_concave_gamma(c1, c2, hi=1e4):
    """Numerical maximiser of c1*log(x) - c2*x on (0, hi)."""
    res = minimize_scalar(
        lambda x: -(c1 * math.log(x) - c2 * x),
        bounds=(1e-12, hi),
        method="bounded",
        options={"xatol": 1e-13},
    )
    return float(res.x)


def quad_kernel_ise(a1, b1, a2, b2):
    """Integrated squared difference of two exponential kernels by quadrature."""

    def f(x):
        return (a1 * b1 * math.exp(-b1 * x) - a2 * b2 * math.exp(-b2 * x)) ** 2

    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=400)
    return val


def quad_gamma_expect(fn, shape, rate):
    """E[fn(X)] for X ~ Gamma(shape, rate) by quadrature on the density."""

    def f(x):
        logpdf = shape * math.log(rate) - gammaln(shape) + (shape - 1.0) * math.log(x) - rate * x
        return fn(x) * math.exp(logpdf)

    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=400)
    return val


def mc_elbo(times, dims, T, K, q_shapes, q_rates, priors, kind, delta, rng, n_samples=200000):
    """Monte Carlo estimate of the evidence lower bound, with standard error.

    q factorises as independent Gammas over (mu, alpha, beta) plus an
    independent categorical parent per event. The parent distribution is the
    standard optimal one: weights exp(E[log mu]) for the event itself and
    exp(E[log alpha] + E[log beta]) * exp(-E[beta] dt) for earlier events.
    ``q_shapes``/``q_rates`` are dicts with 'mu', 'alpha', 'beta' arrays;
    ``priors`` is a dict with 'a','b','e','f','w','s'.
    """
    sh_m, ra_m = q_shapes["mu"], q_rates["mu"]
    sh_a, ra_a = q_shapes["alpha"], q_rates["alpha"]
    sh_b, ra_b = q_shapes["beta"], q_rates["beta"]
    self_w = np.exp(digamma(sh_m)) / ra_m
    pair_scale = np.exp(digamma(sh_a) + digamma(sh_b)) / (ra_a * ra_b)
    mean_b = sh_b / ra_b

    n = len(times)
    rows = []
    for i in range(n):
        li = dims[i]
        w = [self_w[li]]
        for j in range(i):
            kj = dims[j]
            dt = times[i] - times[j]
            w.append(pair_scale[kj][li] * math.exp(-mean_b[kj][li] * dt))
        w = np.array(w)
        rows.append(w / w.sum())

    def gamma_logpdf(x, shape, rate):
        return float(
            np.sum(shape * np.log(rate) - gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x)
        )

    vals = np.empty(n_samples)
    for s in range(n_samples):
        mu = rng.gamma(sh_m, 1.0 / ra_m)
        alpha = rng.gamma(sh_a, 1.0 / ra_a)
        beta = rng.gamma(sh_b, 1.0 / ra_b)
        parents = []
        log_qb = 0.0
        for i in range(n):
            c = rng.choice(rows[i].size, p=rows[i])
            # candidate 0 is the event itself, candidate j+1 is event j
            parents.append(i if c == 0 else c - 1)
            log_qb += math.log(rows[i][c])
        log_p = direct_complete_ll(times, dims, T, parents, mu, alpha, beta, K, kind, delta)
        log_p += gamma_logpdf(mu, np.asarray(priors["a"]), np.asarray(priors["b"]))
        log_p += gamma_logpdf(alpha, np.asarray(priors["e"]), np.asarray(priors["f"]))
        log_p += gamma_logpdf(beta, np.asarray(priors["w"]), np.asarray(priors["s"]))
        log_q = (
            gamma_logpdf(mu, sh_m, ra_m)
            + gamma_logpdf(alpha, sh_a, ra_a)
            + gamma_logpdf(beta, sh_b, ra_b)
            + log_qb
        )
        vals[s] = log_p - log_q
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))


def quad_info_loss(beta, delta, T):
    """Averaged relative compensator error of the boundary-corrected scheme.

    Splits the average over event positions into the far region (plain
    truncation error) and the near region (Taylor remainder over the kernel
    mass), both integrated numerically.
    """

    def far(t):
        return math.exp(-beta * (T - t))

    # near the horizon the error is the Taylor remainder of the kernel
    # integral, exp(-beta u) - 1 + beta u, relative to the linearized mass
    def near_rel(t):
        u = beta * (T - t)
        if u <= 0.0:
            return 0.0
        return (math.exp(-u) - 1.0 + u) / u

    a, _ = integrate.quad(far, 0.0, T - delta, epsabs=1e-14, epsrel=1e-14, limit=400)
    b, _ = integrate.quad(near_rel, T - delta, T, epsabs=1e-14, epsrel=1e-14, limit=400)
    return (a + b) / T
