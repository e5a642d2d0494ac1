"""Fit outputs: point estimates, credible intervals, and sample chains."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import HawkesParams

__all__ = [
    "CredibleIntervals",
    "FitResult",
    "SampleChain",
    "pack_log_params",
    "unpack_log_params",
]


def pack_log_params(params: HawkesParams) -> np.ndarray:
    """Flatten ``(mu, alpha, beta)`` into a log-parameter vector.

    Layout: ``K`` baselines, then ``alpha`` row-major, then ``beta``
    row-major; total length ``K + 2 K**2``.
    """
    return np.log(np.concatenate([params.mu, params.alpha.ravel(), params.beta.ravel()]))


def unpack_log_params(xi: np.ndarray, K: int) -> HawkesParams:
    """Inverse of :func:`pack_log_params`."""
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape != (K + 2 * K * K,):
        raise ValueError(f"expected length {K + 2 * K * K}, got {xi.shape}")
    theta = np.exp(xi)
    return HawkesParams(
        theta[:K],
        theta[K : K + K * K].reshape(K, K),
        theta[K + K * K :].reshape(K, K),
    )


def _xi_labels(K: int) -> list[str]:
    labels = [f"xi_mu_{l}" for l in range(K)]
    labels += [f"xi_alpha_{k}_{l}" for k in range(K) for l in range(K)]
    labels += [f"xi_beta_{k}_{l}" for k in range(K) for l in range(K)]
    return labels


@dataclass
class CredibleIntervals:
    """Elementwise equal-tailed intervals for every model parameter."""

    mu_lo: np.ndarray
    mu_hi: np.ndarray
    alpha_lo: np.ndarray
    alpha_hi: np.ndarray
    beta_lo: np.ndarray
    beta_hi: np.ndarray
    level: float = 0.95

    def lows(self) -> np.ndarray:
        return np.concatenate([self.mu_lo, self.alpha_lo.ravel(), self.beta_lo.ravel()])

    def highs(self) -> np.ndarray:
        return np.concatenate([self.mu_hi, self.alpha_hi.ravel(), self.beta_hi.ravel()])

    @classmethod
    def from_draws(cls, draws: np.ndarray, K: int, level: float = 0.95) -> "CredibleIntervals":
        """Empirical equal-tailed intervals from parameter draws, one row each."""
        tail = 100.0 * (1.0 - level) / 2.0
        lo = np.percentile(draws, tail, axis=0)
        hi = np.percentile(draws, 100.0 - tail, axis=0)
        return cls(
            lo[:K],
            hi[:K],
            lo[K : K + K * K].reshape(K, K),
            hi[K : K + K * K].reshape(K, K),
            lo[K + K * K :].reshape(K, K),
            hi[K + K * K :].reshape(K, K),
            level,
        )


@dataclass
class FitResult:
    """Outcome of one fitting run.

    ``odl`` is the exact observed-data log-likelihood of the full sequence at
    the point estimate, evaluated once after fitting (it is the model-choice
    score used to pick among initialisations). ``trace`` holds optional
    ``(iteration, odl)`` samples taken during the run.
    """

    method: str
    params: HawkesParams
    intervals: CredibleIntervals | None
    odl: float | None
    iterations: int
    elapsed: float
    converged: bool
    kappa: float | None = None
    mode: str = "exact"
    seed: int | None = None
    trace: list[tuple[int, float]] = field(default_factory=list)
    failed: bool = False
    failure: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)
    # Raw sample chain, attached only when a sampler is asked to keep it.
    # Never serialised; reloaded results have chain=None.
    chain: Any = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "method": self.method,
            "mu": self.params.mu.tolist(),
            "alpha": self.params.alpha.tolist(),
            "beta": self.params.beta.tolist(),
            "odl": self.odl,
            "iterations": self.iterations,
            "elapsed": self.elapsed,
            "converged": self.converged,
            "kappa": self.kappa,
            "mode": self.mode,
            "seed": self.seed,
            "trace": [[int(i), float(v)] for i, v in self.trace],
            "failed": self.failed,
            "failure": self.failure,
            "extras": self.extras,
        }
        if self.intervals is not None:
            d["intervals"] = {
                "level": self.intervals.level,
                "mu_lo": self.intervals.mu_lo.tolist(),
                "mu_hi": self.intervals.mu_hi.tolist(),
                "alpha_lo": self.intervals.alpha_lo.tolist(),
                "alpha_hi": self.intervals.alpha_hi.tolist(),
                "beta_lo": self.intervals.beta_lo.tolist(),
                "beta_hi": self.intervals.beta_hi.tolist(),
            }
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "FitResult":
        params = HawkesParams(np.array(d["mu"]), np.array(d["alpha"]), np.array(d["beta"]))
        intervals = None
        if "intervals" in d and d["intervals"] is not None:
            iv = d["intervals"]
            intervals = CredibleIntervals(
                np.array(iv["mu_lo"]),
                np.array(iv["mu_hi"]),
                np.array(iv["alpha_lo"]),
                np.array(iv["alpha_hi"]),
                np.array(iv["beta_lo"]),
                np.array(iv["beta_hi"]),
                float(iv.get("level", 0.95)),
            )
        return cls(
            method=d["method"],
            params=params,
            intervals=intervals,
            odl=d.get("odl"),
            iterations=int(d.get("iterations", 0)),
            elapsed=float(d.get("elapsed", 0.0)),
            converged=bool(d.get("converged", False)),
            kappa=d.get("kappa"),
            mode=d.get("mode", "exact"),
            seed=d.get("seed"),
            trace=[(int(i), float(v)) for i, v in d.get("trace", [])],
            failed=bool(d.get("failed", False)),
            failure=d.get("failure"),
            extras=d.get("extras", {}),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "FitResult":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class SampleChain:
    """Ordered posterior draws in log-parameter space.

    ``xi`` has one row per retained draw (layout of
    :func:`pack_log_params`); ``burn_in`` rows at the start are warm-up.
    """

    xi: np.ndarray
    K: int
    burn_in: int
    thin: int = 1

    def __post_init__(self) -> None:
        self.xi = np.asarray(self.xi, dtype=np.float64)
        if self.xi.ndim != 2 or self.xi.shape[1] != self.K + 2 * self.K**2:
            raise ValueError("chain shape does not match K")
        if not 0 <= self.burn_in <= self.xi.shape[0]:
            raise ValueError("burn_in out of range")

    @property
    def n_draws(self) -> int:
        return int(self.xi.shape[0])

    def theta(self, post_burn: bool = True) -> np.ndarray:
        """Draws on the natural scale, optionally dropping warm-up."""
        rows = self.xi[self.burn_in :] if post_burn else self.xi
        return np.exp(rows)

    def params_at(self, i: int) -> HawkesParams:
        return unpack_log_params(self.xi[i], self.K)

    def to_csv(self, path) -> None:
        """One row per draw, columns the flattened log parameters."""
        header = ",".join(_xi_labels(self.K))
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in self.xi:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
