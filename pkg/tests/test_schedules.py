import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eitdsp.schedules import CosineRamp, CotangentRamp, Hold, LinearRamp, ScheduleError, Segment, SweepSchedule


@pytest.mark.parametrize(
    "ramp", [Hold(2.0), CosineRamp(3.0, 0.0), LinearRamp(0.0, 5.0), CotangentRamp(1e6, 0.0, 1.0), CotangentRamp(0.0, 7.0, 0.5)]
)
def test_ramps_hit_their_endpoints(ramp):
    lo, hi = ramp.endpoints
    assert float(ramp(0.0)) == lo
    assert float(ramp(1.0)) == hi


@given(st.floats(1e-3, 1e8), st.floats(1e-3, 10.0))
def test_cotangent_ramp_is_monotone_and_nonnegative(peak, scale):
    s = np.linspace(0, 1, 2001)
    down = CotangentRamp(peak, 0.0, scale)(s)
    assert np.all(down >= 0)
    assert np.all(np.diff(down) <= 1e-9 * peak)
    up = CotangentRamp(0.0, peak, scale)(s)
    np.testing.assert_allclose(up, down[::-1], rtol=1e-9, atol=1e-12 * peak)


def test_cotangent_ramp_angle_is_raised_cosine():
    r = CotangentRamp(100.0, 0.0, 2.0)
    s = np.array([0.25, 0.5, 0.75])
    x0, x1 = np.arctan(2.0 / 100.0), np.pi / 2
    x = x0 + (x1 - x0) * 0.5 * (1 - np.cos(np.pi * s))
    np.testing.assert_allclose(np.arctan2(2.0, r(s)), x, rtol=1e-13)


def test_cotangent_scale_must_be_positive():
    with pytest.raises(ScheduleError):
        CotangentRamp(1.0, 0.0, 0.0)


def test_fixed_grid_steps():
    sched = SweepSchedule.single(10.0, [LinearRamp(0, 1)], dt=0.3)
    starts, widths, mids = sched.step_arrays()
    assert widths.max() <= 0.3 + 1e-12
    assert widths.sum() == pytest.approx(10.0)
    np.testing.assert_allclose(mids, starts + widths / 2)


@given(st.floats(10.0, 1e5), st.floats(0.5, 4.0))
def test_adaptive_grid_bounds_phase_per_step(peak, c):
    seg = Segment(20.0, (CotangentRamp(peak, 0.0, 1.0),), dt=0.5, phase_per_step=c)
    sched = SweepSchedule((seg,), 0.5)
    starts, widths, mids = sched.step_arrays()
    assert widths.sum() == pytest.approx(20.0, rel=1e-12)
    assert starts[0] == 0.0
    om = sched.omega(mids)[:, 0]
    # local width tracks min(dt, c / Omega) up to the density sampling
    assert np.all(widths <= 0.5 * 1.05)
    assert np.all(widths * om <= c * 1.1)


def test_schedule_evaluates_segments_in_order():
    sched = SweepSchedule((Segment(1.0, (LinearRamp(0, 1),)), Segment(2.0, (LinearRamp(1, 3),))), 0.1)
    np.testing.assert_allclose(sched.omega([0.0, 0.5, 1.0, 2.0, 3.0, 4.0])[:, 0], [0, 0.5, 1.0, 2.0, 3.0, 3.0])
    assert sched.total_time == 3.0


def test_scaled_keeps_step_settings():
    seg = Segment(4.0, (CosineRamp(1, 0),), dt=0.2, phase_per_step=1.0)
    sched = SweepSchedule((seg,), 0.2).scaled(2.0)
    assert sched.total_time == 8.0
    assert sched.segments[0].phase_per_step == 1.0 and sched.segments[0].dt == 0.2


@pytest.mark.parametrize(
    "segments,dt",
    [
        ((), 0.1),
        ((Segment(1.0, (Hold(1.0),)),), 0.0),
        ((Segment(-1.0, (Hold(1.0),)),), 0.01),
        ((Segment(1.0, (Hold(1.0),)),), 0.5),
        ((Segment(1.0, (Hold(1.0),)), Segment(1.0, (Hold(1.0), Hold(1.0)))), 0.01),
        ((Segment(1.0, (Hold(-1.0),)),), 0.01),
        ((Segment(1.0, (Hold(1.0),), phase_per_step=0.0),), 0.01),
    ],
)
def test_invalid_schedules(segments, dt):
    with pytest.raises(ScheduleError):
        SweepSchedule(segments, dt)
