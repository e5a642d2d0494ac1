"""Uniform contiguous-window subsampling of an event sequence.

A window of length ``kappa * T`` is placed uniformly at random inside
``[0, T]``, the events falling in it (half-open: the left edge included,
the right excluded) are rebased to start at zero, and downstream statistics
are rescaled by ``1 / kappa`` to stay unbiased for their full-data
counterparts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EventSequence

__all__ = ["WindowDraw", "draw_window"]


@dataclass
class WindowDraw:
    """A rebased subsample: ``events`` lives on ``[0, kappa * T_full]``."""

    events: EventSequence
    t0: float
    kappa: float
    T_full: float

    @property
    def horizon(self) -> float:
        return self.events.T


def _snap(x: float, T: float) -> float:
    # Round t0 down to a coarse binary grid so that (t - t0) is exact for all
    # event times below ~8 T; differences of rebased times then match the
    # original gaps bit for bit.
    g = math.ldexp(1.0, math.frexp(max(T, 1e-300))[1] - 38)
    return math.floor(x / g) * g


def draw_window(seq: EventSequence, kappa: float, rng: np.random.Generator) -> WindowDraw:
    """Draw one subsampling window.

    ``kappa = 1`` returns the full sequence unchanged (and consumes no
    randomness). Otherwise the window start is uniform on
    ``[0, (1 - kappa) T]`` and events in ``[t0, t0 + kappa T)`` are kept.
    """
    if not 0.0 < kappa <= 1.0:
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")
    if kappa == 1.0:
        return WindowDraw(seq, 0.0, 1.0, seq.T)
    T = seq.T
    width = kappa * T
    t0 = _snap(float(rng.uniform(0.0, (1.0 - kappa) * T)), T)
    lo = int(np.searchsorted(seq.times, t0, side="left"))
    hi = int(np.searchsorted(seq.times, t0 + width, side="left"))
    times = np.minimum(seq.times[lo:hi] - t0, width)
    sub = EventSequence(times, seq.dims[lo:hi], width, seq.K)
    return WindowDraw(sub, t0, kappa, T)
