"""Model-agnostic refinement of predicted trajectories.

* :func:`m2f` - motion-aware median filtering: a rolling median whose
  window per sample is chosen from the local motion variance.
* :func:`ofe` - nudges each prediction one pixel along the displacement
  of the events around it in its time slot.
* :func:`blink_override` - replaces predictions on frames dominated by
  negative events with the nearest trusted prediction.

All rolling windows are centred and truncated at the sequence ends.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .events import EventStream, Trajectory
from .representation import FrameStack

log = logging.getLogger(__name__)


class MotionMethod(str, enum.Enum):
    DISPLACEMENT = "displacement"
    VELOCITY = "velocity"
    ACCELERATION = "acceleration"
    COVARIANCE = "covariance"
    FREQUENCY = "frequency"


@dataclass(frozen=True)
class M2FParams:
    w_base: int = 15
    w_min: int = 3
    w_max: int = 21
    percentile: float = 75.0
    method: MotionMethod = MotionMethod.VELOCITY

    def __post_init__(self):
        object.__setattr__(self, "method", MotionMethod(self.method))
        if self.w_min < 1 or self.w_max < 1 or self.w_min % 2 == 0 or self.w_max % 2 == 0:
            raise ValueError("w_min and w_max must be odd and >= 1")
        if self.w_min > self.w_max:
            raise ValueError("w_min must not exceed w_max")
        if self.w_base < 3:
            raise ValueError("w_base must be >= 3")
        if not 0.0 <= self.percentile <= 100.0:
            raise ValueError("percentile must be within [0, 100]")


@dataclass(frozen=True)
class OFEParams:
    tau: float = 1.0
    c: int = 5
    gamma: float = 3.0
    kappa: float = 0.5

    def __post_init__(self):
        if self.tau <= 0 or self.gamma <= 0:
            raise ValueError("tau and gamma must be positive")
        if self.c < 1:
            raise ValueError("count threshold c must be >= 1")
        if not 0.0 < self.kappa < 1.0:
            raise ValueError("kappa must lie in (0, 1)")


def window_bounds(n: int, i: int, size: int) -> tuple[int, int]:
    """Half-open range of the centred window of ``size`` at ``i``, clipped to ``[0, n)``."""
    lo = i - (size - 1) // 2
    return max(lo, 0), min(lo + size, n)


def _var(a: np.ndarray) -> float:
    return float(np.var(a)) if len(a) else 0.0


def _local_variance(pts: np.ndarray, method: MotionMethod) -> float:
    if method is MotionMethod.DISPLACEMENT:
        return _var(pts[:, 0]) + _var(pts[:, 1])
    if method is MotionMethod.VELOCITY:
        return _var(np.hypot(*np.diff(pts, axis=0).T))
    if method is MotionMethod.ACCELERATION:
        return _var(np.hypot(*np.diff(pts, n=2, axis=0).T))
    if method is MotionMethod.COVARIANCE:
        if len(pts) < 1:
            return 0.0
        d = pts - pts.mean(axis=0)
        return abs(float(np.mean(d[:, 0] * d[:, 1])))
    d = np.diff(pts, axis=0)
    if len(d) == 0:
        return 0.0
    return float(np.mean(np.sum((d - d.mean(axis=0)) ** 2, axis=1)))


def motion_variance(traj: Trajectory, method=MotionMethod.VELOCITY, w_base: int = 15) -> np.ndarray:
    """Per-sample motion variance over a centred window of ``w_base`` samples."""
    method = MotionMethod(method)
    if w_base < 3:
        raise ValueError("w_base must be >= 3")
    n = len(traj)
    out = np.zeros(n)
    if n < 3:
        return out
    pts = traj.points
    for i in range(n):
        lo, hi = window_bounds(n, i, w_base)
        out[i] = _local_variance(pts[lo:hi], method)
    return out


def rolling_mean(a: np.ndarray, size: int) -> np.ndarray:
    n = len(a)
    c = np.concatenate([[0.0], np.cumsum(a, dtype=np.float64)])
    out = np.empty(n)
    for i in range(n):
        lo, hi = window_bounds(n, i, size)
        out[i] = (c[hi] - c[lo]) / (hi - lo)
    return out


def rolling_percentile(a: np.ndarray, size: int, q: float) -> np.ndarray:
    n = len(a)
    out = np.empty(n)
    for i in range(n):
        lo, hi = window_bounds(n, i, size)
        out[i] = np.percentile(a[lo:hi], q)
    return out


def nearest_odd(v: np.ndarray) -> np.ndarray:
    """Nearest odd integer (exact even values round up), never below 1."""
    return np.maximum(2 * np.floor(np.asarray(v) / 2).astype(np.int64) + 1, 1)


def adaptive_windows(traj: Trajectory, params: M2FParams = M2FParams()) -> np.ndarray:
    """Odd median-window size per sample, in ``[w_min, w_max]``.

    High local motion variance maps to a large window.
    """
    n = len(traj)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    var = motion_variance(traj, params.method, params.w_base)
    smoothed = rolling_mean(var, params.w_base)
    median_window = np.clip(smoothed, params.w_min, params.w_max)
    adaptive = np.clip(rolling_percentile(median_window, params.w_base, params.percentile),
                       params.w_min, params.w_max)
    return nearest_odd(adaptive)


def rolling_median(points: np.ndarray, windows: np.ndarray) -> np.ndarray:
    """Per-coordinate median over the centred window ``windows[i]`` at each sample."""
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    out = np.empty_like(points)
    for i in range(n):
        lo, hi = window_bounds(n, i, int(windows[i]))
        out[i] = np.median(points[lo:hi], axis=0)
    return out


def m2f(traj: Trajectory, params: M2FParams = M2FParams()) -> Trajectory:
    if len(traj) == 0:
        return traj.replace(traj.points, traj.source + "+m2f")
    return traj.replace(rolling_median(traj.points, adaptive_windows(traj, params)), traj.source + "+m2f")


def ofe(traj: Trajectory, stream: EventStream, params: OFEParams = OFEParams()) -> Trajectory:
    """Shift each prediction by a unit step along its local event flow.

    The stream's time span is tiled into ``len(traj)`` equal slots. For
    slot ``j`` the events inside the square ROI of half-size ``R`` around
    prediction ``j`` are gathered; if there are more than ``10 * tau`` of
    them, the displacement from the first to the last ROI event (which is
    the sum of the consecutive event displacements) sets the shift
    direction. ``R`` starts at ``10 * tau`` and, once ``j > c``, is reset to
    ``(1 + kappa) * 10 * tau`` when the prediction jumps more than
    ``gamma * tau`` away from the mean of the previous ``c`` predictions
    and to ``(1 - kappa) * 10 * tau`` otherwise.
    """
    n = len(traj)
    if n == 0:
        raise ValueError("trajectory is empty")
    if len(stream) < 2 or stream.span_us <= 0:
        raise ValueError("event stream must span a positive time range")
    pts = traj.points
    t = stream.t
    ex = stream.x.astype(np.float64)
    ey = stream.y.astype(np.float64)
    t_min = int(t[0])
    timestep = stream.span_us / n
    base = params.tau * 10.0
    gate = params.tau * 10.0
    jump = params.tau * params.gamma
    roi = base
    edges = t_min + timestep * np.arange(n + 1)
    cuts = np.searchsorted(t, edges, side="left")
    cuts[-1] = len(t)

    out = pts.copy()
    for j in range(n):
        x, y = pts[j]
        if j > params.c:
            prev = pts[j - params.c:j]
            mx, my = prev.mean(axis=0)
            if abs(x - mx) > jump or abs(y - my) > jump:
                roi = (1.0 + params.kappa) * base
            else:
                roi = (1.0 - params.kappa) * base
        lo, hi = cuts[j], cuts[j + 1]
        wx = ex[lo:hi]
        wy = ey[lo:hi]
        inside = np.flatnonzero((np.abs(wx - x) <= roi) & (np.abs(wy - y) <= roi))
        if len(inside) <= gate:
            continue
        first, last = inside[0], inside[-1]
        dx = wx[last] - wx[first]
        dy = wy[last] - wy[first]
        norm = np.hypot(dx, dy)
        if norm > 0:
            out[j] = (x + dx / norm, y + dy / norm)
    return traj.replace(out, traj.source + "+ofe")


def blink_flags(stack: FrameStack, ratio_threshold: float = 0.09) -> np.ndarray:
    """True where the positive/negative event ratio is below the threshold.

    Frames with no events count as flagged; frames with only positive
    events do not.
    """
    pos = stack.pos_counts().astype(np.float64)
    neg = stack.neg_counts().astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(neg > 0, pos / np.where(neg > 0, neg, 1.0), np.inf)
    empty = (pos == 0) & (neg == 0)
    return empty | (ratio < ratio_threshold)


def nearest_unflagged(flags: np.ndarray) -> np.ndarray:
    """Index of the nearest unflagged sample for every sample (ties go earlier).

    Unflagged samples map to themselves. Requires at least one unflagged sample.
    """
    flags = np.asarray(flags, dtype=bool)
    good = np.flatnonzero(~flags)
    if len(good) == 0:
        raise ValueError("every sample is flagged")
    idx = np.arange(len(flags))
    k = np.searchsorted(good, idx)
    after = good[np.minimum(k, len(good) - 1)]
    before = good[np.maximum(k - 1, 0)]
    use_before = (idx - before) <= (after - idx)
    use_before |= after < idx
    use_before &= before <= idx
    return np.where(use_before, before, after)


def blink_override(traj: Trajectory, stack: FrameStack, ratio_threshold: float = 0.09) -> Trajectory:
    if len(stack) != len(traj):
        raise ValueError(f"{len(stack)} frames for {len(traj)} predictions")
    flags = blink_flags(stack, ratio_threshold)
    if flags.all():
        log.warning("blink override: every frame is flagged; predictions left unchanged")
        return traj.replace(traj.points, traj.source + "+blink")
    src = nearest_unflagged(flags)
    return traj.replace(traj.points[src], traj.source + "+blink")
