"""Robbins-Monro step sizes, iteration budgets, and convergence tracking."""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass

__all__ = ["StepSchedule", "step_size", "Budget", "BudgetClock", "SurrogateTracker"]


@dataclass(frozen=True)
class StepSchedule:
    """Polynomially decaying step size ``rho_r = rho0 * (r + tau1) ** -tau2``.

    ``tau2`` must lie in ``(0.5, 1]`` (the usual stochastic-approximation
    window: square-summable but not summable) and ``tau1 >= 0`` delays the
    decay.
    """

    rho0: float
    tau1: float = 1.0
    tau2: float = 0.51

    def __post_init__(self) -> None:
        if not self.rho0 > 0.0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        if self.tau1 < 0.0:
            raise ValueError(f"tau1 must be non-negative, got {self.tau1}")
        if not 0.5 < self.tau2 <= 1.0:
            raise ValueError(f"tau2 must lie in (0.5, 1], got {self.tau2}")

    def __call__(self, r: int) -> float:
        return step_size(r, self)


def step_size(r: int, sched: StepSchedule) -> float:
    """Step size at iteration ``r`` (0-based)."""
    if r < 0:
        raise ValueError("iteration index must be non-negative")
    base = r + sched.tau1
    if base <= 0.0:
        raise ValueError("r + tau1 must be positive; use tau1 > 0 when starting at r = 0")
    return sched.rho0 * base ** (-sched.tau2)


@dataclass(frozen=True)
class Budget:
    """Stopping rule: wall-clock seconds, an iteration cap, or both."""

    seconds: float | None = None
    max_iters: int | None = None

    def __post_init__(self) -> None:
        if self.seconds is None and self.max_iters is None:
            raise ValueError("budget needs seconds, max_iters, or both")
        if self.seconds is not None and not self.seconds > 0.0:
            raise ValueError("budget seconds must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("budget max_iters must be at least 1")


class BudgetClock:
    """Tracks elapsed wall-clock time against a :class:`Budget`.

    The check happens after each completed iteration, so at least one
    iteration always runs regardless of how small the budget is.
    """

    def __init__(self, budget: Budget):
        self.budget = budget
        self.start = time.monotonic()

    def elapsed(self) -> float:
        return time.monotonic() - self.start

    def exhausted(self, iters_done: int) -> bool:
        if self.budget.max_iters is not None and iters_done >= self.budget.max_iters:
            return True
        if self.budget.seconds is not None and self.elapsed() >= self.budget.seconds:
            return True
        return False


class SurrogateTracker:
    """Declares convergence when a noisy objective stops moving.

    Values are smoothed with an exponential moving average; convergence needs
    the relative change over ``window`` iterations to stay below ``tol`` for
    ``patience`` consecutive checks, which keeps sub-sampling noise from
    triggering a spurious stop.
    """

    def __init__(self, window: int = 50, tol: float = 1e-6, patience: int = 25, smooth: float = 0.05):
        self.window = window
        self.tol = tol
        self.patience = patience
        self.smooth = smooth
        self._ema: float | None = None
        self._hist: deque[float] = deque(maxlen=window + 1)
        self._streak = 0

    def push(self, value: float) -> bool:
        """Record one surrogate value; returns True once converged."""
        if not math.isfinite(value):
            self._streak = 0
            return False
        self._ema = value if self._ema is None else self._ema + self.smooth * (value - self._ema)
        self._hist.append(self._ema)
        if len(self._hist) <= self.window:
            return False
        old = self._hist[0]
        rel = abs(self._ema - old) / (abs(old) + 1e-12)
        self._streak = self._streak + 1 if rel < self.tol else 0
        return self._streak >= self.patience
