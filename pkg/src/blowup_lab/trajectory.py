"""Piecewise sampled trajectories with singular endpoints."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class SegmentTag(str, Enum):
    ORIGINAL = "Original"
    SINGULAR_GROWTH = "SingularGrowth"
    REFLECTED = "Reflected"
    PERIODIC = "Periodic"


@dataclass(frozen=True)
class Segment:
    """Samples on ``[t[0], t[-1]]``.  A singular endpoint stores ``inf``."""

    t: np.ndarray
    u: np.ndarray
    tag: SegmentTag
    singular_start: bool = False
    singular_end: bool = False

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if t.shape != u.shape or t.ndim != 1 or t.size < 2:
            raise ValueError("segment needs matching 1-d arrays with >= 2 samples")
        if np.any(np.diff(t) <= 0):
            raise ValueError("segment times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "u", u)

    @property
    def start(self) -> float:
        return float(self.t[0])

    @property
    def end(self) -> float:
        return float(self.t[-1])

    def shifted(self, dt: float, tag: SegmentTag | None = None) -> "Segment":
        return Segment(self.t + dt, self.u.copy(), tag or self.tag,
                       self.singular_start, self.singular_end)

    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.u)

    def l1_norm(self) -> float:
        """Trapezoid rule over finite samples; a singular endpoint contributes
        nothing beyond the last finite sample."""
        mask = self.finite_mask()
        return float(np.trapezoid(np.abs(self.u[mask]), self.t[mask]))

    def __call__(self, s):
        mask = self.finite_mask()
        return np.interp(s, self.t[mask], self.u[mask])


@dataclass
class PiecewiseTrajectory:
    segments: list[Segment] = field(default_factory=list)
    period: float | None = None

    def append(self, seg: Segment, gap_tol: float = 1e-12):
        if self.segments:
            prev = self.segments[-1]
            if abs(seg.start - prev.end) > gap_tol * max(1.0, abs(prev.end)):
                raise ValueError(f"segments do not abut: {prev.end} vs {seg.start}")
        self.segments.append(seg)

    @property
    def start(self) -> float:
        return self.segments[0].start

    @property
    def end(self) -> float:
        return self.segments[-1].end

    @property
    def t(self) -> np.ndarray:
        return np.concatenate([s.t for s in self.segments])

    @property
    def u(self) -> np.ndarray:
        return np.concatenate([s.u for s in self.segments])

    def __call__(self, s):
        """Evaluate by linear interpolation within the owning segment."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.full(s_arr.shape, np.nan)
        for i, x in enumerate(s_arr):
            for seg in self.segments:
                if seg.start <= x <= seg.end:
                    if (x == seg.end and seg.singular_end) or (x == seg.start and seg.singular_start):
                        out[i] = math.inf
                    else:
                        out[i] = float(seg(x))
                    break
        return out if np.ndim(s) else float(out[0])

    def l1_norm(self, a: float | None = None, b: float | None = None) -> float:
        a = self.start if a is None else a
        b = self.end if b is None else b
        total = 0.0
        for seg in self.segments:
            lo, hi = max(a, seg.start), min(b, seg.end)
            if hi <= lo:
                continue
            if lo == seg.start and hi == seg.end:
                total += seg.l1_norm()
                continue
            mask = seg.finite_mask() & (seg.t >= lo) & (seg.t <= hi)
            total += float(np.trapezoid(np.abs(seg.u[mask]), seg.t[mask]))
        return total

    def l1_norm_per_period(self) -> list[float]:
        if not self.period:
            return [self.l1_norm()]
        n = int(round((self.end - self.start) / self.period))
        return [self.l1_norm(self.start + k * self.period, self.start + (k + 1) * self.period)
                for k in range(n)]

    def rows(self):
        """(t, u, tag, is_singular_endpoint) rows in time order."""
        for seg in self.segments:
            last = len(seg.t) - 1
            for j, (ti, ui) in enumerate(zip(seg.t, seg.u)):
                singular = (j == 0 and seg.singular_start) or (j == last and seg.singular_end)
                yield float(ti), float(ui), seg.tag.value, bool(singular or not math.isfinite(ui))
