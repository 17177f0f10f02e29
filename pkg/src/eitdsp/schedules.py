"""Piecewise control-field schedules Omega_s(t)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

__all__ = ["Hold", "CosineRamp", "LinearRamp", "CotangentRamp", "Ramp", "Segment", "SweepSchedule", "ScheduleError"]


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Hold:
    value: float

    def __call__(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.value)

    @property
    def endpoints(self):
        return self.value, self.value


@dataclass(frozen=True)
class CosineRamp:
    """Raised-cosine ramp: zero slope at both ends."""

    start: float
    end: float

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return self.start + (self.end - self.start) * 0.5 * (1.0 - np.cos(np.pi * s))

    @property
    def endpoints(self):
        return self.start, self.end


@dataclass(frozen=True)
class LinearRamp:
    start: float
    end: float

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return self.start + (self.end - self.start) * s

    @property
    def endpoints(self):
        return self.start, self.end


@dataclass(frozen=True)
class CotangentRamp:
    """Omega = scale cot(x) with x raised-cosine between arctan(scale/start)
    and arctan(scale/end).

    With scale equal to a collective coupling, x tracks the mixing angle,
    which then turns at a bounded rate all the way to the dark limit.
    """

    start: float
    end: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ScheduleError("CotangentRamp scale must be > 0")

    def _angle(self, value):
        return np.pi / 2 if value == 0 else float(np.arctan(self.scale / value))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        x0, x1 = self._angle(self.start), self._angle(self.end)
        x = x0 + (x1 - x0) * 0.5 * (1.0 - np.cos(np.pi * s))
        out = self.scale * np.cos(x) / np.sin(x)
        # pin exact endpoints (cot(pi/2) is not exactly 0 in floating point)
        out = np.where(s <= 0, self.start, np.where(s >= 1, self.end, out))
        return np.maximum(out, 0.0)

    @property
    def endpoints(self):
        return self.start, self.end


Ramp = Union[Hold, CosineRamp, LinearRamp, CotangentRamp]


@dataclass(frozen=True)
class Segment:
    duration: float
    ramps: tuple[Ramp, ...]
    dt: float | None = None  # overrides the schedule step inside this segment
    # if set, steps are also no longer than phase_per_step / max_s Omega_s(t)
    phase_per_step: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "ramps", tuple(self.ramps))


_DENSITY_SAMPLES = 200_001


def _adaptive_grid(seg: Segment, step: float) -> np.ndarray:
    """Step edges in [0, duration] with local width min(step, c / max Omega).

    The step density 1/h(t) is integrated on a fine sample grid and the
    edges are placed at equal increments of the cumulative count.
    """
    u = np.linspace(0.0, 1.0, _DENSITY_SAMPLES)
    om = np.max(np.stack([r(u) for r in seg.ramps]), axis=0)
    density = np.maximum(1.0 / step, om / seg.phase_per_step)
    t = u * seg.duration
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(t))])
    n = max(10, int(np.ceil(cum[-1] - 1e-9)))
    grid = np.interp(np.linspace(0.0, cum[-1], n + 1), cum, t)
    grid[0], grid[-1] = 0.0, seg.duration
    return grid


@dataclass(frozen=True)
class SweepSchedule:
    """Ordered segments; each segment is cut into equal steps no longer than
    its own ``dt`` (or the schedule ``dt``)."""

    segments: tuple[Segment, ...]
    dt: float

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ScheduleError("schedule needs at least one segment")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ScheduleError("dt must be finite and > 0")
        n_fields = len(segs[0].ramps)
        for i, seg in enumerate(segs):
            if not (np.isfinite(seg.duration) and seg.duration > 0):
                raise ScheduleError(f"segment {i}: duration must be > 0")
            if len(seg.ramps) != n_fields:
                raise ScheduleError(f"segment {i}: expected {n_fields} ramps, got {len(seg.ramps)}")
            step = self.dt if seg.dt is None else seg.dt
            if not (np.isfinite(step) and step > 0):
                raise ScheduleError(f"segment {i}: dt must be finite and > 0")
            if step > seg.duration / 10 * (1 + 1e-12):
                raise ScheduleError(f"segment {i}: dt={step} exceeds duration/10={seg.duration / 10}")
            if seg.phase_per_step is not None and not (np.isfinite(seg.phase_per_step) and seg.phase_per_step > 0):
                raise ScheduleError(f"segment {i}: phase_per_step must be finite and > 0")
            for r in seg.ramps:
                lo, hi = r.endpoints
                # every ramp shape is monotone between its endpoints
                if min(lo, hi) < 0 or not (np.isfinite(lo) and np.isfinite(hi)):
                    raise ScheduleError(f"segment {i}: Rabi frequencies must be finite and >= 0")

    @property
    def n_fields(self) -> int:
        return len(self.segments[0].ramps)

    @property
    def total_time(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def omega(self, t) -> np.ndarray:
        """Rabi frequencies at time(s) t; shape (..., n_fields)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.n_fields,))
        start = 0.0
        for k, seg in enumerate(self.segments):
            last = k == len(self.segments) - 1
            mask = (t >= start) & ((t <= start + seg.duration) if last else (t < start + seg.duration))
            if k == 0:
                mask |= t < 0
            if last:
                mask |= t > start + seg.duration
            s = np.clip((t[mask] - start) / seg.duration, 0.0, 1.0)
            for j, r in enumerate(seg.ramps):
                out[mask, j] = r(s)
            start += seg.duration
        return out

    def steps(self) -> Iterator[tuple[float, float, float]]:
        """(t_start, step, t_mid) for every propagation step."""
        yield from zip(*self.step_arrays())

    def step_arrays(self):
        starts, widths = [], []
        t0 = 0.0
        for seg in self.segments:
            step = self.dt if seg.dt is None else seg.dt
            if seg.phase_per_step is None:
                n = int(np.ceil(seg.duration / step - 1e-9))
                grid = np.linspace(0.0, seg.duration, n + 1)
            else:
                grid = _adaptive_grid(seg, step)
            starts.append(t0 + grid[:-1])
            widths.append(np.diff(grid))
            t0 += seg.duration
        starts = np.concatenate(starts)
        widths = np.concatenate(widths)
        return starts, widths, starts + 0.5 * widths

    def scaled(self, factor: float) -> "SweepSchedule":
        """Same ramps with every duration multiplied by ``factor`` (dt unchanged)."""
        segs = tuple(Segment(s.duration * factor, s.ramps, s.dt, s.phase_per_step) for s in self.segments)
        return SweepSchedule(segs, self.dt)

    @property
    def n_steps(self) -> int:
        return len(self.step_arrays()[1])

    @classmethod
    def single(cls, duration: float, ramps: Sequence[Ramp], dt: float) -> "SweepSchedule":
        return cls((Segment(duration, tuple(ramps)),), dt)
