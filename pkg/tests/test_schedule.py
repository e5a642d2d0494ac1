import math
import time

import pytest

from sghawkes.schedule import Budget, BudgetClock, StepSchedule, SurrogateTracker, step_size


def test_schedule_values():
    sched = StepSchedule(0.02)
    assert sched(0) == pytest.approx(0.02)
    # after 99 steps the decay factor is 100 ** -0.51
    assert sched(99) == pytest.approx(0.02 * 100.0 ** -0.51)
    assert sched(99) == pytest.approx(0.0019099851720428718)
    assert step_size(99, sched) == sched(99)


def test_schedule_monotone_decay():
    sched = StepSchedule(0.1, tau1=5.0, tau2=0.7)
    vals = [sched(r) for r in range(200)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[0] == pytest.approx(0.1 * 5.0 ** -0.7)


def test_schedule_validation():
    with pytest.raises(ValueError):
        StepSchedule(0.0)
    with pytest.raises(ValueError):
        StepSchedule(0.1, tau1=-1.0)
    with pytest.raises(ValueError):
        StepSchedule(0.1, tau2=0.5)
    with pytest.raises(ValueError):
        StepSchedule(0.1, tau2=1.2)
    with pytest.raises(ValueError):
        step_size(-1, StepSchedule(0.1))
    with pytest.raises(ValueError):
        step_size(0, StepSchedule(0.1, tau1=0.0))


def test_budget_validation():
    with pytest.raises(ValueError):
        Budget()
    with pytest.raises(ValueError):
        Budget(seconds=0.0)
    with pytest.raises(ValueError):
        Budget(max_iters=0)
    assert Budget(seconds=5.0).max_iters is None
    assert Budget(max_iters=10).seconds is None


def test_budget_clock_iteration_cap():
    clock = BudgetClock(Budget(max_iters=3))
    assert not clock.exhausted(2)
    assert clock.exhausted(3)
    assert clock.exhausted(4)


def test_budget_clock_wall_time():
    clock = BudgetClock(Budget(seconds=0.05))
    assert not clock.exhausted(1)
    time.sleep(0.06)
    assert clock.exhausted(1)
    assert clock.elapsed() >= 0.05


def test_tracker_converges_on_flat_signal():
    tracker = SurrogateTracker(window=10, tol=1e-6, patience=5)
    done = [tracker.push(1.0) for _ in range(40)]
    assert any(done)
    # convergence needs window + patience pushes at the least
    assert not any(done[:14])


def test_tracker_keeps_running_on_trend():
    tracker = SurrogateTracker(window=10, tol=1e-6, patience=5)
    assert not any(tracker.push(float(i)) for i in range(200))


def test_tracker_ignores_nan_and_resets():
    tracker = SurrogateTracker(window=5, tol=1e-3, patience=3)
    for _ in range(7):
        tracker.push(2.0)
    assert not tracker.push(math.nan)
    # the streak restarts after the bad value
    out = [tracker.push(2.0) for _ in range(3)]
    assert out == [False, False, True]


def test_tracker_smoothing_rides_out_noise():
    # alternating values with a tiny amplitude should still converge
    tracker = SurrogateTracker(window=10, tol=1e-4, patience=5, smooth=0.05)
    vals = [100.0 + (1e-4 if i % 2 else -1e-4) for i in range(200)]
    assert any(tracker.push(v) for v in vals)
