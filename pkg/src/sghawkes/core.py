"""Model primitives for multivariate Hawkes processes with exponential kernels.

Conventions used throughout the package:

* A process has ``K`` dimensions indexed ``0 .. K-1``.
* ``alpha[k, l]`` and ``beta[k, l]`` describe the influence of events in
  *source* dimension ``k`` on *target* dimension ``l``; the kernel is
  ``phi_{k,l}(dt) = alpha[k, l] * beta[k, l] * exp(-beta[k, l] * dt)``, so
  ``alpha`` is the expected offspring count and ``beta`` the decay rate.
* Intensities are left-continuous: ``lambda_l(t)`` sums kernel contributions
  of events strictly before ``t``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "EventSequence",
    "HawkesParams",
    "GammaPriorSet",
    "CompensatorMode",
    "EXACT",
    "LEWIS",
    "BranchingProbs",
    "intensity",
    "compensator",
    "compensator_matrix",
    "log_likelihood",
    "log_likelihood_flags",
    "complete_log_likelihood",
    "branching_probs",
    "responsibility_sums",
    "approx_errors",
    "lambdas_at_events",
    "read_events_csv",
    "write_events_csv",
]

_TINY = float(np.finfo(np.float64).tiny)


# ---------------------------------------------------------------------------
# data types


@dataclass
class EventSequence:
    """A finite realisation of a marked point process on ``[0, T]``.

    ``times`` must be sorted non-decreasing and lie in ``[0, T]``; ``dims``
    holds the integer mark of each event in ``[0, K)``. Arrays are frozen
    (read-only) after construction so sequences can be shared freely.
    """

    times: np.ndarray
    dims: np.ndarray
    T: float
    K: int

    def __post_init__(self) -> None:
        self.times = np.ascontiguousarray(self.times, dtype=np.float64)
        self.dims = np.ascontiguousarray(self.dims, dtype=np.int64)
        self.T = float(self.T)
        self.K = int(self.K)
        if self.times.ndim != 1 or self.dims.ndim != 1:
            raise ValueError("times and dims must be one-dimensional")
        if self.times.size != self.dims.size:
            raise ValueError("times and dims must have equal length")
        if self.T <= 0.0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        if self.K < 1:
            raise ValueError(f"K must be at least 1, got {self.K}")
        if self.times.size:
            if np.any(np.diff(self.times) < 0.0):
                raise ValueError("times must be sorted non-decreasing")
            if self.times[0] < 0.0 or self.times[-1] > self.T:
                raise ValueError("times must lie within [0, T]")
            if self.dims.min() < 0 or self.dims.max() >= self.K:
                raise ValueError("dims must lie in [0, K)")
        self.times.setflags(write=False)
        self.dims.setflags(write=False)

    @property
    def n(self) -> int:
        return int(self.times.size)

    def counts(self) -> np.ndarray:
        """Event count per dimension, shape ``(K,)``."""
        return np.bincount(self.dims, minlength=self.K).astype(np.int64)


@dataclass
class HawkesParams:
    """Parameter triple ``(mu, alpha, beta)`` of an exponential-kernel MHP.

    ``mu`` has shape ``(K,)`` with strictly positive baselines, ``alpha`` and
    ``beta`` have shape ``(K, K)`` with ``alpha >= 0`` and ``beta > 0``.
    """

    mu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self) -> None:
        self.mu = np.ascontiguousarray(self.mu, dtype=np.float64)
        self.alpha = np.ascontiguousarray(self.alpha, dtype=np.float64)
        self.beta = np.ascontiguousarray(self.beta, dtype=np.float64)
        K = self.mu.shape[0] if self.mu.ndim == 1 else -1
        if K < 1:
            raise ValueError("mu must be a one-dimensional array")
        if self.alpha.shape != (K, K) or self.beta.shape != (K, K):
            raise ValueError("alpha and beta must have shape (K, K)")
        if not np.all(self.mu > 0.0):
            raise ValueError("mu entries must be strictly positive")
        if not np.all(self.alpha >= 0.0):
            raise ValueError("alpha entries must be non-negative")
        if not np.all(self.beta > 0.0):
            raise ValueError("beta entries must be strictly positive")
        for a in (self.mu, self.alpha, self.beta):
            a.setflags(write=False)

    @property
    def K(self) -> int:
        return int(self.mu.shape[0])

    def spectral_radius(self) -> float:
        """Spectral radius of the branching matrix; < 1 means subcritical."""
        return float(np.max(np.abs(np.linalg.eigvals(self.alpha))))

    def copy(self) -> "HawkesParams":
        return HawkesParams(self.mu.copy(), self.alpha.copy(), self.beta.copy())


@dataclass
class GammaPriorSet:
    """Independent Gamma(shape, rate) priors for every model parameter.

    ``a``/``b`` are the shape/rate for each ``mu[l]``; ``e``/``f`` for each
    ``alpha[k, l]``; ``w``/``s`` for each ``beta[k, l]``.
    """

    a: np.ndarray
    b: np.ndarray
    e: np.ndarray
    f: np.ndarray
    w: np.ndarray
    s: np.ndarray

    def __post_init__(self) -> None:
        self.a = np.ascontiguousarray(self.a, dtype=np.float64)
        self.b = np.ascontiguousarray(self.b, dtype=np.float64)
        self.e = np.ascontiguousarray(self.e, dtype=np.float64)
        self.f = np.ascontiguousarray(self.f, dtype=np.float64)
        self.w = np.ascontiguousarray(self.w, dtype=np.float64)
        self.s = np.ascontiguousarray(self.s, dtype=np.float64)
        K = self.a.shape[0] if self.a.ndim == 1 else -1
        if K < 1 or self.b.shape != (K,):
            raise ValueError("a and b must be one-dimensional of equal length")
        for m in (self.e, self.f, self.w, self.s):
            if m.shape != (K, K):
                raise ValueError("e, f, w, s must have shape (K, K)")
        for m in (self.a, self.b, self.e, self.f, self.w, self.s):
            if not np.all(m > 0.0):
                raise ValueError("all hyperparameters must be positive")
            m.setflags(write=False)

    @property
    def K(self) -> int:
        return int(self.a.shape[0])

    @classmethod
    def constant(
        cls,
        K: int,
        a: float = 2.0,
        b: float = 4.0,
        e: float = 2.0,
        f: float = 4.0,
        w: float = 2.0,
        s: float = 0.5,
    ) -> "GammaPriorSet":
        """Priors with one scalar per hyperparameter, broadcast to all entries."""
        one = np.ones(K)
        sq = np.ones((K, K))
        return cls(a * one, b * one, e * sq, f * sq, w * sq, s * sq)

    def log_pdf(self, params: HawkesParams) -> float:
        """Normalised log prior density at ``params``."""
        out = _gamma_logpdf(params.mu, self.a, self.b)
        out += _gamma_logpdf(params.alpha, self.e, self.f)
        out += _gamma_logpdf(params.beta, self.w, self.s)
        return float(out)


def _gamma_logpdf(x: np.ndarray, shape: np.ndarray, rate: np.ndarray) -> float:
    if np.any(x <= 0.0):
        return -math.inf
    return float(
        np.sum(shape * np.log(rate) - gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x)
    )


@dataclass(frozen=True)
class CompensatorMode:
    """Which approximation the compensator uses for the kernel integral.

    ``kind`` is one of ``"exact"``, ``"lewis"`` (every kernel integral is
    taken as its full mass ``alpha``) or ``"boundary"`` (Lewis, but events
    within ``delta`` of the horizon get a first-order correction).
    """

    kind: str
    delta: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("exact", "lewis", "boundary"):
            raise ValueError(f"unknown compensator mode {self.kind!r}")
        if self.kind == "boundary":
            if self.delta is None or not (self.delta > 0.0):
                raise ValueError("boundary mode requires delta > 0")
        elif self.delta is not None:
            raise ValueError(f"mode {self.kind!r} takes no delta")

    @classmethod
    def exact(cls) -> "CompensatorMode":
        return cls("exact")

    @classmethod
    def lewis(cls) -> "CompensatorMode":
        return cls("lewis")

    @classmethod
    def boundary_corrected(cls, delta: float) -> "CompensatorMode":
        return cls("boundary", float(delta))


EXACT = CompensatorMode.exact()
LEWIS = CompensatorMode.lewis()


# ---------------------------------------------------------------------------
# shared numerical kernels

# The exponential kernel admits prefix recursions: every quantity we need is
# a sum of exp(-b * (t_i - t_j)) over earlier events, which equals
# exp(-b t_i) * sum_j exp(b t_j). The cumulative sums are kept in log space
# (logaddexp.accumulate) so b * t up to thousands cannot overflow.


def _prefix_state(
    times: np.ndarray,
    dims: np.ndarray,
    K: int,
    decay: np.ndarray,
    with_dt: bool,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Per-event excitation sums under pairwise decay rates.

    Returns ``S1`` of shape ``(n, K)`` with
    ``S1[i, k] = sum_{j<i, d_j=k} exp(-decay[k, d_i] (t_i - t_j))`` and, if
    requested, ``SD[i, k] = sum_{j<i, d_j=k} (t_i - t_j) * exp(...)``.
    """
    n = times.size
    S1 = np.zeros((n, K))
    SD = np.zeros((n, K)) if with_dt else None
    if n == 0:
        return S1, SD
    src_by_dim = [times[dims == k] for k in range(K)]
    tgt_by_dim = [np.nonzero(dims == l)[0] for l in range(K)]
    for k in range(K):
        src = src_by_dim[k]
        if src.size == 0:
            continue
        for l in range(K):
            tgt = tgt_by_dim[l]
            if tgt.size == 0:
                continue
            b = decay[k, l]
            tt = times[tgt]
            # number of dimension-k events strictly before each target time
            m = np.searchsorted(src, tt, side="left")
            has = m > 0
            idx = np.maximum(m - 1, 0)
            logcum = np.logaddexp.accumulate(b * src)
            vals = np.zeros(tt.size)
            vals[has] = np.exp(logcum[idx[has]] - b * tt[has])
            S1[tgt, k] = vals
            if with_dt:
                with np.errstate(divide="ignore"):
                    logw = np.log(src) + b * src
                logcumw = np.logaddexp.accumulate(logw)
                sub = np.zeros(tt.size)
                ok = has & np.isfinite(logcumw[idx])
                sub[ok] = np.exp(logcumw[idx[ok]] - b * tt[ok])
                dvals = tt * vals - sub
                SD[tgt, k] = np.maximum(dvals, 0.0)
    return S1, SD


def lambdas_at_events(seq: EventSequence, params: HawkesParams) -> np.ndarray:
    """Intensity of each event's own dimension evaluated at its time.

    Left-continuous: the event itself and simultaneous events are excluded.
    Shape ``(n,)``.
    """
    S1, _ = _prefix_state(seq.times, seq.dims, seq.K, params.beta, with_dt=False)
    ab = params.alpha * params.beta
    return params.mu[seq.dims] + np.einsum("ik,ki->i", S1, ab[:, seq.dims])


def responsibility_sums(
    times: np.ndarray,
    dims: np.ndarray,
    K: int,
    self_w: np.ndarray,
    pair_scale: np.ndarray,
    decay: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Aggregated branching responsibilities under generic row weights.

    Each event ``i`` is given the unnormalised parent weights
    ``self_w[d_i]`` (itself) and ``pair_scale[d_j, d_i] *
    exp(-decay[d_j, d_i] (t_i - t_j))`` for ``j < i``; rows are normalised.
    Returns ``(self_sum, pair_sum, pair_dt_sum, min_denom)`` where

    * ``self_sum[l]``     = sum over events of dim l of the self probability,
    * ``pair_sum[k, l]``  = total probability mass assigned to dim-k parents
      by dim-l events,
    * ``pair_dt_sum[k,l]``= the same mass weighted by the parent lag,
    * ``min_denom``       = smallest row normaliser seen (underflow guard).

    With ``self_w = mu``, ``pair_scale = alpha * beta`` and ``decay = beta``
    these are the expected sufficient statistics of the latent branching
    structure.
    """
    self_sum = np.zeros(K)
    pair_sum = np.zeros((K, K))
    pair_dt_sum = np.zeros((K, K))
    n = times.size
    if n == 0:
        return self_sum, pair_sum, pair_dt_sum, math.inf
    S1, SD = _prefix_state(times, dims, K, decay, with_dt=True)
    exc = pair_scale[:, dims] * S1.T  # (K, n)
    denom = self_w[dims] + exc.sum(axis=0)
    min_denom = float(denom.min())
    if min_denom <= _TINY:
        return self_sum, pair_sum, pair_dt_sum, min_denom
    inv = 1.0 / denom
    excd = pair_scale[:, dims] * SD.T
    selfp = self_w[dims] * inv
    for l in range(K):
        sel = dims == l
        self_sum[l] = selfp[sel].sum()
        pair_sum[:, l] = (exc[:, sel] * inv[sel]).sum(axis=1)
        pair_dt_sum[:, l] = (excd[:, sel] * inv[sel]).sum(axis=1)
    return self_sum, pair_sum, pair_dt_sum, min_denom


# ---------------------------------------------------------------------------
# model operations


def intensity(
    t: float,
    seq: EventSequence,
    params: HawkesParams,
    dim: int | None = None,
) -> float | np.ndarray:
    """Conditional intensity at time ``t`` given the history in ``seq``.

    Returns the length-``K`` vector, or the scalar ``lambda_dim(t)`` when
    ``dim`` is given. ``t`` must lie in ``[0, T]``; only events strictly
    before ``t`` contribute.
    """
    if params.K != seq.K:
        raise ValueError("params and sequence disagree on K")
    if not 0.0 <= t <= seq.T:
        raise ValueError(f"t={t} outside observation window [0, {seq.T}]")
    if dim is not None and not 0 <= dim < seq.K:
        raise ValueError(f"dimension {dim} out of range for K={seq.K}")
    m = int(np.searchsorted(seq.times, t, side="left"))
    lam = params.mu.copy()
    if m:
        d = seq.dims[:m]
        dt = t - seq.times[:m]
        A = params.alpha[d, :]
        B = params.beta[d, :]
        lam += (A * B * np.exp(-B * dt[:, None])).sum(axis=0)
    return lam if dim is None else float(lam[dim])


def compensator_matrix(
    seq: EventSequence,
    params: HawkesParams,
    mode: CompensatorMode = EXACT,
    T: float | None = None,
) -> np.ndarray:
    """Per-pair kernel integral totals ``S[k, l]`` under the given mode.

    ``S[k, l]`` multiplies ``alpha[k, l]`` in the compensator: exact mode
    integrates each kernel up to the horizon, Lewis counts each source event
    as full mass 1, boundary mode subtracts a first-order correction
    ``1 - beta * (T - t_i)`` for source events within ``delta`` of ``T``.
    """
    horizon = seq.T if T is None else float(T)
    if seq.n and horizon < seq.times[-1]:
        raise ValueError("horizon T lies before the last event")
    K = seq.K
    S = np.zeros((K, K))
    for k in range(K):
        dt = horizon - seq.times[seq.dims == k]
        nk = dt.size
        if mode.kind == "exact":
            S[k, :] = np.sum(1.0 - np.exp(-params.beta[k, :] * dt[:, None]), axis=0)
        elif mode.kind == "lewis":
            S[k, :] = nk
        else:
            near = dt[dt < mode.delta]
            S[k, :] = nk - np.sum(1.0 - params.beta[k, :] * near[:, None], axis=0)
    return S


def compensator(
    seq: EventSequence,
    params: HawkesParams,
    mode: CompensatorMode = EXACT,
    T: float | None = None,
) -> float:
    """Integrated total intensity over ``[0, T]`` under the given mode."""
    horizon = seq.T if T is None else float(T)
    S = compensator_matrix(seq, params, mode, horizon)
    return float(params.mu.sum() * horizon + (params.alpha * S).sum())


def log_likelihood_flags(
    seq: EventSequence,
    params: HawkesParams,
    mode: CompensatorMode = EXACT,
) -> tuple[float, bool]:
    """Observed log-likelihood plus an underflow flag.

    The flag is set (and ``-inf`` returned) if any event intensity underflows
    to zero; callers should treat that as a diagnostic, not an exception.
    """
    if params.K != seq.K:
        raise ValueError("params and sequence disagree on K")
    comp = compensator(seq, params, mode)
    if seq.n == 0:
        return -comp, False
    lam = lambdas_at_events(seq, params)
    if np.any(lam <= _TINY):
        return -math.inf, True
    return float(np.log(lam).sum() - comp), False


def log_likelihood(
    seq: EventSequence,
    params: HawkesParams,
    mode: CompensatorMode = EXACT,
) -> float:
    """Observed-data log-likelihood: sum of event log-intensities minus the
    compensator under the requested mode."""
    value, _ = log_likelihood_flags(seq, params, mode)
    return value


def complete_log_likelihood(
    seq: EventSequence,
    branching: np.ndarray,
    params: HawkesParams,
    mode: CompensatorMode = EXACT,
) -> float:
    """Complete-data log-likelihood for one latent branching assignment.

    ``branching[i]`` is the parent index of event ``i``: ``branching[i] == i``
    marks an immigrant, ``branching[i] == j < i`` attributes event ``i`` to
    event ``j``. Summing ``exp`` of this quantity over all assignments
    recovers ``exp(log_likelihood)`` for the same mode.
    """
    par = np.asarray(branching, dtype=np.int64)
    if par.shape != (seq.n,):
        raise ValueError("branching must assign one parent per event")
    idx = np.arange(seq.n)
    if np.any(par > idx) or np.any(par < 0):
        raise ValueError("branching may only reference the event itself or earlier events")
    own = par == idx
    out = np.log(params.mu[seq.dims[own]]).sum() if own.any() else 0.0
    child = ~own
    if child.any():
        ci = idx[child]
        pj = par[child]
        sd = seq.dims[pj]
        td = seq.dims[ci]
        a = params.alpha[sd, td]
        if np.any(a <= 0.0):
            return -math.inf
        b = params.beta[sd, td]
        dt = seq.times[ci] - seq.times[pj]
        out += float(np.sum(np.log(a) + np.log(b) - b * dt))
    return float(out) - compensator(seq, params, mode)


@dataclass
class BranchingProbs:
    """Dense posterior parent probabilities; ``probs[i, j]`` for ``j <= i``.

    Row ``i`` is supported on ``{0, .., i}`` with ``probs[i, i]`` the
    immigrant probability; rows sum to one. Dense storage is intended for
    small to moderate ``n``.
    """

    probs: np.ndarray

    @property
    def n(self) -> int:
        return int(self.probs.shape[0])

    def row(self, i: int) -> np.ndarray:
        return self.probs[i, : i + 1]


def branching_probs(seq: EventSequence, params: HawkesParams) -> BranchingProbs:
    """Posterior probabilities of every candidate parent for every event.

    Event ``i`` weighs itself by ``mu[d_i]`` and each earlier event ``j`` by
    the kernel value ``alpha * beta * exp(-beta (t_i - t_j))``; rows are
    normalised. The first event is always an immigrant.
    """
    if params.K != seq.K:
        raise ValueError("params and sequence disagree on K")
    n = seq.n
    W = np.zeros((n, n))
    if n == 0:
        return BranchingProbs(W)
    d = seq.dims
    dt = seq.times[:, None] - seq.times[None, :]
    A = params.alpha[d[:, None], d[None, :]].T  # [i, j] -> alpha[d_j, d_i]
    B = params.beta[d[:, None], d[None, :]].T
    with np.errstate(over="ignore"):
        W = A * B * np.exp(-B * dt)
    W[~np.tri(n, dtype=bool)] = 0.0
    np.fill_diagonal(W, params.mu[d])
    W /= W.sum(axis=1, keepdims=True)
    return BranchingProbs(W)


def approx_errors(beta: float, dt: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise kernel-integral errors of the two compensator shortcuts.

    Returns ``(R0, Ra)`` at lag ``dt``: ``R0 = exp(-beta dt)`` is the error of
    counting a full kernel mass, ``Ra = exp(-beta dt) - 1 + beta dt`` the
    error of the first-order boundary correction. The two cross at
    ``dt = 1/beta`` where both equal ``1/e``.
    """
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    x = np.asarray(dt, dtype=np.float64)
    if np.any(x < 0.0):
        raise ValueError("dt must be non-negative")
    r0 = np.exp(-beta * x)
    ra = np.expm1(-beta * x) + beta * x
    return r0, ra


# ---------------------------------------------------------------------------
# event CSV interchange


def write_events_csv(seq: EventSequence, path) -> None:
    """Write ``time,dim`` rows; times must be strictly increasing."""
    if seq.n and np.any(np.diff(seq.times) <= 0.0):
        raise ValueError("event CSV requires strictly increasing times")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "dim"])
        for t, d in zip(seq.times, seq.dims):
            writer.writerow([repr(float(t)), int(d)])


def read_events_csv(path, T: float | None = None, K: int | None = None) -> EventSequence:
    """Parse an event CSV, validating as it goes.

    Malformed rows raise ``ValueError`` mentioning the 1-based line number.
    ``T`` defaults to the last event time and ``K`` to ``max(dim) + 1``.
    """
    times: list[float] = []
    dims: list[int] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["time", "dim"]:
            raise ValueError(f"{path}: line 1: expected header 'time,dim'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}: line {lineno}: expected two fields, got {len(row)}")
            try:
                t = float(row[0])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: bad time {row[0]!r}") from None
            try:
                d = int(row[1])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: bad dimension {row[1]!r}") from None
            if not math.isfinite(t) or t < 0.0:
                raise ValueError(f"{path}: line {lineno}: time must be finite and non-negative")
            if times and t <= times[-1]:
                raise ValueError(f"{path}: line {lineno}: times must be strictly increasing")
            if d < 0:
                raise ValueError(f"{path}: line {lineno}: dimension must be non-negative")
            times.append(t)
            dims.append(d)
    if K is None:
        K = (max(dims) + 1) if dims else 1
    elif dims and max(dims) >= K:
        raise ValueError(f"{path}: dimension {max(dims)} exceeds declared K={K}")
    if T is None:
        if not times:
            raise ValueError(f"{path}: empty file needs an explicit horizon T")
        T = times[-1]
    return EventSequence(np.asarray(times), np.asarray(dims, dtype=np.int64), T, K)
