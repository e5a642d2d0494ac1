import math

import numpy as np
import pytest
from scipy.special import digamma
from scipy.stats import gamma as gamma_dist

import oracles
from sghawkes import (
    EXACT,
    LEWIS,
    CompensatorMode,
    EventSequence,
    GammaPriorSet,
    HawkesParams,
    dense3,
    log_likelihood,
    simulate,
)
from sghawkes.schedule import Budget, StepSchedule
from sghawkes.sgem import init_params
from sghawkes.sgvi import (
    VariationalState,
    elbo,
    fit_sgvi,
    global_update,
    init_state,
    local_update,
    variational_intervals,
)
from sghawkes.subsample import WindowDraw

BC = CompensatorMode.boundary_corrected(0.25)


def random_state(rng, K):
    return VariationalState(
        rng.uniform(1.5, 6.0, K),
        rng.uniform(0.5, 8.0, K),
        rng.uniform(1.5, 6.0, (K, K)),
        rng.uniform(0.5, 8.0, (K, K)),
        rng.uniform(1.5, 6.0, (K, K)),
        rng.uniform(0.2, 3.0, (K, K)),
    )


def pseudo(state):
    self_w = np.exp(digamma(state.eta_mu1)) / state.eta_mu2
    pair_scale = np.exp(digamma(state.eta_alpha1) + digamma(state.eta_beta1)) / (
        state.eta_alpha2 * state.eta_beta2
    )
    decay = state.eta_beta1 / state.eta_beta2
    return self_w, pair_scale, decay


def test_init_state_means_match_point(params2):
    st = init_state(params2, shape=3.0)
    m = st.means()
    np.testing.assert_allclose(m.mu, params2.mu, rtol=1e-14)
    np.testing.assert_allclose(m.alpha, params2.alpha, rtol=1e-14)
    np.testing.assert_allclose(m.beta, params2.beta, rtol=1e-14)
    assert np.all(st.eta_mu1 == 3.0) and np.all(st.eta_beta1 == 3.0)
    with pytest.raises(ValueError):
        VariationalState(
            np.array([1.0]), np.array([-1.0]), np.ones((1, 1)), np.ones((1, 1)),
            np.ones((1, 1)), np.ones((1, 1)),
        )


def test_local_update_matches_naive_aggregation(seq5):
    rng = np.random.default_rng(8)
    st = random_state(rng, 2)
    P = local_update(seq5, st)
    assert P.shape == (5, 5)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, rtol=1e-12)
    assert np.all(P[np.triu_indices(5, k=1)] == 0.0)
    self_w, pair_scale, decay = pseudo(st)
    self_sum, pair_sum, pair_dt_sum = oracles.naive_responsibilities(
        seq5.times, seq5.dims, 2, self_w, pair_scale, decay
    )
    got_self = np.zeros(2)
    got_pair = np.zeros((2, 2))
    got_dt = np.zeros((2, 2))
    for i in range(5):
        got_self[seq5.dims[i]] += P[i, i]
        for j in range(i):
            k, l = seq5.dims[j], seq5.dims[i]
            got_pair[k, l] += P[i, j]
            got_dt[k, l] += P[i, j] * (seq5.times[i] - seq5.times[j])
    np.testing.assert_allclose(got_self, self_sum, rtol=1e-10)
    np.testing.assert_allclose(got_pair, pair_sum, rtol=1e-10)
    np.testing.assert_allclose(got_dt, pair_dt_sum, rtol=1e-10)


def test_local_update_dimension_mismatch(seq5):
    st = random_state(np.random.default_rng(0), 3)
    with pytest.raises(ValueError):
        local_update(seq5, st)
    with pytest.raises(ValueError):
        elbo(seq5, st, GammaPriorSet.constant(3))


def test_exact_alpha_integral_vs_quadrature(seq5):
    from sghawkes.sgvi import _exact_alpha_integral

    rng = np.random.default_rng(17)
    b1 = rng.uniform(1.5, 5.0, (2, 2))
    b2 = rng.uniform(0.3, 2.0, (2, 2))
    got = _exact_alpha_integral(seq5, b1, b2)
    for k in range(2):
        dts = seq5.T - seq5.times[seq5.dims == k]
        for l in range(2):
            want = sum(
                1.0 - oracles.quad_gamma_expect(lambda x, d=d: math.exp(-x * d), b1[k, l], b2[k, l])
                for d in dts
            )
            assert got[k, l] == pytest.approx(want, rel=1e-8)


def test_global_update_full_batch_formulas(seq5, priors2):
    rng = np.random.default_rng(4)
    st = random_state(rng, 2)
    w = WindowDraw(seq5, 0.0, 1.0, seq5.T)
    new = global_update(w, st, priors2, 1.0, LEWIS)
    self_w, pair_scale, decay = pseudo(st)
    self_sum, pair_sum, pair_dt_sum = oracles.naive_responsibilities(
        seq5.times, seq5.dims, 2, self_w, pair_scale, decay
    )
    np.testing.assert_allclose(new.eta_mu1, self_sum + priors2.a, rtol=1e-10)
    np.testing.assert_allclose(new.eta_mu2, seq5.T + priors2.b, rtol=1e-12)
    np.testing.assert_allclose(new.eta_beta1, pair_sum + priors2.w, rtol=1e-10)
    np.testing.assert_allclose(new.eta_beta2, pair_dt_sum + priors2.s, rtol=1e-10)
    np.testing.assert_allclose(new.eta_alpha1, pair_sum + priors2.e, rtol=1e-10)
    # the weight rate uses the freshly updated decay posteriors
    integ = np.zeros((2, 2))
    for k in range(2):
        for l in range(2):
            for d in seq5.T - seq5.times[seq5.dims == k]:
                integ[k, l] += 1.0 - (1.0 + d / new.eta_beta2[k, l]) ** (-new.eta_beta1[k, l])
    np.testing.assert_allclose(new.eta_alpha2, integ + priors2.f, rtol=1e-10)


def test_global_update_rho_zero_only_resets_mu_rate(seq5, priors2):
    st = random_state(np.random.default_rng(12), 2)
    w = WindowDraw(seq5, 0.0, 1.0, seq5.T)
    new = global_update(w, st, priors2, 0.0, LEWIS)
    np.testing.assert_array_equal(new.eta_mu1, st.eta_mu1)
    np.testing.assert_array_equal(new.eta_alpha1, st.eta_alpha1)
    np.testing.assert_array_equal(new.eta_alpha2, st.eta_alpha2)
    np.testing.assert_array_equal(new.eta_beta1, st.eta_beta1)
    np.testing.assert_array_equal(new.eta_beta2, st.eta_beta2)
    # the baseline rate is deterministic given T and is always pinned
    np.testing.assert_allclose(new.eta_mu2, seq5.T + priors2.b)


def test_global_update_boundary_lag_term(seq5, priors2):
    st = random_state(np.random.default_rng(5), 2)
    w = WindowDraw(seq5, 0.0, 1.0, seq5.T)
    base = global_update(w, st, priors2, 1.0, LEWIS)
    wide = CompensatorMode.boundary_corrected(2.0)
    corr = global_update(w, st, priors2, 1.0, wide)
    lag = np.array([seq5.T - 2.2, seq5.T - 3.1])
    mean_alpha = st.eta_alpha1 / st.eta_alpha2
    want = base.eta_beta2 + mean_alpha * lag[:, None]
    np.testing.assert_allclose(corr.eta_beta2, want, rtol=1e-12)
    np.testing.assert_array_equal(corr.eta_beta1, base.eta_beta1)


def test_global_update_validations(seq5, priors2):
    st = random_state(np.random.default_rng(1), 2)
    w = WindowDraw(seq5, 0.0, 1.0, seq5.T)
    with pytest.raises(ValueError):
        global_update(w, st, priors2, -0.1, LEWIS)
    with pytest.raises(ValueError):
        global_update(w, st, priors2, 0.5, EXACT)


@pytest.mark.parametrize(
    "mode",
    [LEWIS, EXACT, CompensatorMode.boundary_corrected(1.0)],
    ids=["lewis", "exact", "boundary"],
)
def test_elbo_matches_monte_carlo(seq5, priors2, mode):
    st = init_state(
        HawkesParams(np.array([0.5, 0.8]), np.full((2, 2), 0.3), np.full((2, 2), 2.0)),
        shape=3.0,
    )
    got = elbo(seq5, st, priors2, mode)
    q_shapes = {"mu": st.eta_mu1, "alpha": st.eta_alpha1, "beta": st.eta_beta1}
    q_rates = {"mu": st.eta_mu2, "alpha": st.eta_alpha2, "beta": st.eta_beta2}
    pri = {"a": priors2.a, "b": priors2.b, "e": priors2.e, "f": priors2.f,
           "w": priors2.w, "s": priors2.s}
    mean, se = oracles.mc_elbo(
        seq5.times, seq5.dims, seq5.T, 2, q_shapes, q_rates, pri,
        mode.kind, mode.delta, np.random.default_rng(99), n_samples=60000,
    )
    assert got == pytest.approx(mean, abs=4.5 * se + 0.01)


def test_elbo_full_batch_sweeps_never_decrease():
    seq = simulate(dense3(40.0), 21)
    priors = GammaPriorSet.constant(3)
    w = WindowDraw(seq, 0.0, 1.0, seq.T)
    point = HawkesParams(np.full(3, 0.2), np.full((3, 3), 0.1), np.full((3, 3), 2.0))
    st = init_state(point)
    vals = []
    for _ in range(60):
        st = global_update(w, st, priors, 1.0, LEWIS)
        vals.append(elbo(seq, st, priors, LEWIS))
    d = np.diff(np.array(vals))
    assert d.min() > 0.0
    assert vals[-1] == pytest.approx(291.2027223610, abs=1e-3)


def test_variational_intervals_are_gamma_quantiles():
    st = random_state(np.random.default_rng(23), 2)
    ci = variational_intervals(st, level=0.9)
    assert ci.level == 0.9
    np.testing.assert_allclose(
        ci.mu_lo, gamma_dist.ppf(0.05, a=st.eta_mu1, scale=1.0 / st.eta_mu2), rtol=1e-12
    )
    np.testing.assert_allclose(
        ci.beta_hi, gamma_dist.ppf(0.95, a=st.eta_beta1, scale=1.0 / st.eta_beta2), rtol=1e-12
    )
    assert np.all(ci.mu_lo < ci.mu_hi)
    assert np.all(ci.alpha_lo < ci.alpha_hi)
    m = st.means()
    assert np.all((ci.mu_lo < m.mu) & (m.mu < ci.mu_hi))


def test_fit_sgvi_runs_and_is_deterministic(dense3_T100, priors3):
    spec, seq = dense3_T100
    sched = StepSchedule(0.05)
    a = fit_sgvi(seq, priors3, sched, 0.1, Budget(max_iters=500), 42)
    b = fit_sgvi(seq, priors3, sched, 0.1, Budget(max_iters=500), 42)
    np.testing.assert_array_equal(a.params.mu, b.params.mu)
    np.testing.assert_array_equal(a.params.beta, b.params.beta)
    assert a.odl == b.odl
    assert a.method == "sgvi" and a.mode == "lewis"
    assert a.intervals is not None and a.intervals.level == 0.95
    assert "eta_mu1" in a.extras and len(a.extras["eta_mu1"]) == 3
    assert a.iterations <= 500
    start = init_params(priors3, np.random.default_rng(42))
    assert a.odl > log_likelihood(seq, start, EXACT) + 20.0


def test_fit_sgvi_boundary_label_and_exact_rejection(dense3_T100, priors3):
    spec, seq = dense3_T100
    r = fit_sgvi(seq, priors3, StepSchedule(0.05), 0.1, Budget(max_iters=50), 7, mode=BC)
    assert r.method == "sgvi-c"
    assert r.mode == "boundary:0.25"
    with pytest.raises(ValueError):
        fit_sgvi(seq, priors3, StepSchedule(0.05), 0.1, Budget(max_iters=10), 7, mode=EXACT)
