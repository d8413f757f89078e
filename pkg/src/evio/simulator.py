"""Synthetic pupil trajectories and a threshold-crossing DVS model.

The scene is a bright background (log intensity 0) with a dark pupil disk
(log intensity ``-contrast``). Pixel centres sit on integer coordinates, so
a label at ``(x, y)`` means the disk is centred on pixel ``(x, y)``.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .events import LABEL_PERIOD_US, EventStream, LabelTrack

FIXATION_JITTER_PX = 0.3
# labels are snapped to this dyadic grid so mirroring them is exact
LABEL_GRID_PX = 2.0 ** -16
# peak / mean speed of a minimum-jerk profile
MIN_JERK_PEAK_RATIO = 1.875


class MotionKind(str, enum.Enum):
    FIXATION = "fixation"
    PURSUIT = "pursuit"
    SACCADE = "saccade"
    BLINK = "blink"


@dataclass(frozen=True)
class SimConfig:
    width: int = 80
    height: int = 60
    pupil_radius: float = 4.0
    contrast: float = 1.0
    threshold: float = 0.25
    noise_rate_hz: float = 0.05
    frame_dt_us: int = 500
    seed: int = 42

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.contrast <= 0:
            raise ValueError("contrast must be positive")
        if self.frame_dt_us <= 0 or self.frame_dt_us > LABEL_PERIOD_US or LABEL_PERIOD_US % self.frame_dt_us:
            raise ValueError(f"frame_dt_us must divide {LABEL_PERIOD_US}, got {self.frame_dt_us}")
        if self.noise_rate_hz < 0:
            raise ValueError("noise rate must be non-negative")


@dataclass(frozen=True)
class Segment:
    """One piece of a motion script.

    ``target`` is where a saccade lands (required) or where a fixation
    sits (optional; defaults to the current position). Pursuit oscillates
    ``amplitude_px * sin(2 pi f t)`` along ``direction_deg`` around the
    position it starts from. A saccade given ``peak_velocity_px_s``
    finishes in ``1.875 * distance / peak_velocity`` and holds the target
    for the rest of the segment.
    """

    kind: MotionKind
    duration_us: int
    amplitude_px: float = 0.0
    frequency_hz: float = 0.0
    direction_deg: float = 0.0
    target: tuple[float, float] | None = None
    peak_velocity_px_s: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", MotionKind(self.kind))
        if self.duration_us <= 0:
            raise ValueError(f"segment duration must be positive: {self}")
        if self.kind is MotionKind.SACCADE and self.target is None:
            raise ValueError("saccade needs a target")

    @classmethod
    def from_dict(cls, d: dict) -> "Segment":
        d = dict(d)
        if "duration_ms" in d:
            d["duration_us"] = int(round(d.pop("duration_ms") * 1000))
        if d.get("target") is not None:
            d["target"] = tuple(float(v) for v in d["target"])
        return cls(**d)


@dataclass(frozen=True)
class MotionScript:
    segments: tuple[Segment, ...]
    width: int
    height: int
    margin: float = 0.0
    start: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def duration_us(self) -> int:
        return sum(s.duration_us for s in self.segments)

    def _check_point(self, p, what: str):
        x, y = p
        lo = self.margin
        if not (lo <= x <= self.width - 1 - lo and lo <= y <= self.height - 1 - lo):
            raise ValueError(f"{what} {p} outside {self.width}x{self.height} sensor with margin {lo}")


def min_jerk(u):
    """Normalised minimum-jerk position profile on ``u`` in [0, 1]."""
    u = np.clip(u, 0.0, 1.0)
    return u ** 3 * (10 - 15 * u + 6 * u ** 2)


def min_jerk_velocity(u):
    """Derivative of :func:`min_jerk` with respect to ``u``."""
    u = np.clip(u, 0.0, 1.0)
    return 30 * u ** 2 * (1 - u) ** 2


def synth_trajectory(script: MotionScript, seed: int = 0,
                     jitter_px: float = FIXATION_JITTER_PX) -> LabelTrack:
    if not script.segments:
        raise ValueError("motion script is empty")
    rng = np.random.default_rng(seed)
    pos = np.array(script.start if script.start is not None
                   else ((script.width - 1) / 2, (script.height - 1) / 2), dtype=np.float64)
    script._check_point(tuple(pos), "start position")

    n = math.ceil(script.duration_us / LABEL_PERIOD_US)
    t_lab = np.arange(n, dtype=np.int64) * LABEL_PERIOD_US
    xs = np.empty(n)
    ys = np.empty(n)
    blink = np.zeros(n, dtype=bool)

    seg_start = 0
    for seg in script.segments:
        seg_end = seg_start + seg.duration_us
        sel = (t_lab >= seg_start) & (t_lab < seg_end)
        tau = (t_lab[sel] - seg_start) * 1e-6
        dur = seg.duration_us * 1e-6
        if seg.kind is MotionKind.FIXATION:
            if seg.target is not None:
                script._check_point(seg.target, "fixation target")
                pos = np.array(seg.target, dtype=np.float64)
            jit = rng.normal(0.0, jitter_px, size=(len(tau), 2)) if jitter_px > 0 else np.zeros((len(tau), 2))
            pts = pos[None, :] + jit
            end = pos
        elif seg.kind is MotionKind.PURSUIT:
            a = math.radians(seg.direction_deg)
            d = np.array([math.cos(a), math.sin(a)])
            pts = pos[None, :] + (seg.amplitude_px * np.sin(2 * np.pi * seg.frequency_hz * tau))[:, None] * d
            end = pos + seg.amplitude_px * math.sin(2 * math.pi * seg.frequency_hz * dur) * d
        elif seg.kind is MotionKind.SACCADE:
            script._check_point(seg.target, "saccade target")
            target = np.array(seg.target, dtype=np.float64)
            delta = target - pos
            move = dur
            if seg.peak_velocity_px_s:
                move = MIN_JERK_PEAK_RATIO * float(np.hypot(*delta)) / seg.peak_velocity_px_s
                if move > dur:
                    raise ValueError(f"saccade cannot reach peak velocity {seg.peak_velocity_px_s} "
                                     f"within {seg.duration_us} us")
            u = tau / move if move > 0 else np.ones_like(tau)
            pts = pos[None, :] + min_jerk(u)[:, None] * delta
            pts[u >= 1.0] = target
            end = target
        else:
            pts = np.repeat(pos[None, :], len(tau), axis=0)
            blink[sel] = True
            end = pos
        xs[sel] = pts[:, 0]
        ys[sel] = pts[:, 1]
        pos = np.asarray(end, dtype=np.float64)
        seg_start = seg_end

    xs = np.round(xs / LABEL_GRID_PX) * LABEL_GRID_PX
    ys = np.round(ys / LABEL_GRID_PX) * LABEL_GRID_PX
    track = LabelTrack(xs, ys, blink)
    try:
        track.check_bounds(script.width, script.height)
    except ValueError as exc:
        raise ValueError(f"trajectory leaves the sensor: {exc}") from None
    return track


def render_events(track: LabelTrack, cfg: SimConfig) -> EventStream:
    """Render the disk along ``track`` and convert intensity changes to events.

    The rendering clock ticks every ``frame_dt_us`` over the track's span
    ``[start * 10 ms, (start + n) * 10 ms)``. The first tick only primes the
    pixel state. Positions are linearly interpolated between labels; the
    blink flag of the label slot hides the disk.
    """
    n = len(track)
    w, h = cfg.width, cfg.height
    if n == 0:
        return EventStream.empty(w, h)
    rng = np.random.default_rng(cfg.seed)
    t0 = track.start * LABEL_PERIOD_US
    t_end = t0 + n * LABEL_PERIOD_US
    ticks = np.arange(t0, t_end, cfg.frame_dt_us, dtype=np.int64)
    cx = np.interp(ticks, track.t_us, track.x)
    cy = np.interp(ticks, track.t_us, track.y)
    hidden = track.blink[(ticks - t0) // LABEL_PERIOD_US]

    gy, gx = np.mgrid[0:h, 0:w].astype(np.float64)
    r2 = cfg.pupil_radius ** 2
    theta = cfg.threshold
    eps = 1e-9 * theta

    def scene(k):
        if hidden[k]:
            return np.zeros((h, w))
        inside = (gx - cx[k]) ** 2 + (gy - cy[k]) ** 2 <= r2
        return np.where(inside, -cfg.contrast, 0.0)

    prev = scene(0)
    acc = np.zeros((h, w))
    chunks_t, chunks_i, chunks_p = [], [], []
    for k in range(1, len(ticks)):
        cur = scene(k)
        delta = cur - prev
        prev = cur
        changed = delta != 0
        if not changed.any():
            continue
        # residual is discarded when the change reverses polarity
        reverse = changed & (np.sign(delta) * np.sign(acc) < 0)
        acc = np.where(reverse, delta, acc + delta)
        counts = np.floor(np.abs(acc) / theta + 1e-9).astype(np.int64)
        fire = np.flatnonzero(counts)
        if fire.size == 0:
            continue
        c = counts.ravel()[fire]
        sgn = np.sign(acc.ravel()[fire])
        acc.ravel()[fire] -= sgn * c * theta
        small = np.abs(acc) < eps
        acc[small] = 0.0
        chunks_i.append(np.repeat(fire, c))
        chunks_p.append(np.repeat(sgn.astype(np.int8), c))
        chunks_t.append(np.full(int(c.sum()), ticks[k], dtype=np.int64))

    if chunks_t:
        t = np.concatenate(chunks_t)
        flat = np.concatenate(chunks_i)
        p = np.concatenate(chunks_p)
    else:
        t = np.zeros(0, dtype=np.int64)
        flat = np.zeros(0, dtype=np.int64)
        p = np.zeros(0, dtype=np.int8)
    x = flat % w
    y = flat // w

    expected = cfg.noise_rate_hz * w * h * (t_end - t0) * 1e-6
    m = int(rng.poisson(expected)) if expected > 0 else 0
    if m:
        t = np.concatenate([t, rng.integers(t0, t_end, size=m)])
        x = np.concatenate([x, rng.integers(0, w, size=m)])
        y = np.concatenate([y, rng.integers(0, h, size=m)])
        p = np.concatenate([p, rng.choice(np.array([-1, 1], dtype=np.int8), size=m)])

    # events sharing a tick carry no readout order; shuffle them reproducibly
    tiebreak = rng.permutation(len(t))
    order = np.lexsort((tiebreak, t))
    return EventStream(t[order], x[order], y[order], p[order], w, h)


@dataclass
class Scenario:
    config: SimConfig
    script: MotionScript
    jitter_px: float = FIXATION_JITTER_PX

    @classmethod
    def from_dict(cls, d: dict, seed: int | None = None) -> "Scenario":
        cfg = dict(d.get("config", {}))
        if seed is not None:
            cfg["seed"] = seed
        jitter = cfg.pop("fixation_jitter_px", FIXATION_JITTER_PX)
        start = cfg.pop("start", None)
        config = SimConfig(**cfg)
        script = MotionScript(
            tuple(Segment.from_dict(s) for s in d["script"]),
            config.width, config.height, margin=config.pupil_radius,
            start=tuple(start) if start is not None else None,
        )
        return cls(config, script, jitter)

    @classmethod
    def load(cls, path, seed: int | None = None) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")), seed)

    def run(self) -> tuple[EventStream, LabelTrack]:
        track = synth_trajectory(self.script, self.config.seed, self.jitter_px)
        return render_events(track, self.config), track


def simulate(script: MotionScript | Sequence[Segment], cfg: SimConfig | None = None,
             jitter_px: float = FIXATION_JITTER_PX) -> tuple[EventStream, LabelTrack]:
    """Trajectory plus events in one call, both seeded from ``cfg.seed``."""
    cfg = cfg or SimConfig()
    if not isinstance(script, MotionScript):
        script = MotionScript(tuple(script), cfg.width, cfg.height, margin=cfg.pupil_radius)
    track = synth_trajectory(script, cfg.seed, jitter_px)
    return render_events(track, cfg), track


def benchmark_config(seed: int = 42) -> SimConfig:
    """Sensor and DVS settings of the standard evaluation corpus."""
    return SimConfig(width=80, height=60, pupil_radius=2.5, contrast=1.0, threshold=0.25,
                     noise_rate_hz=0.05, frame_dt_us=500, seed=seed)


def benchmark_script(seed: int, cfg: SimConfig | None = None) -> MotionScript:
    """Five-second recording: pursuit, two saccades and one blink.

    Pursuit runs at 2 Hz with a 12 px amplitude along a random direction
    and every pursuit segment spans whole cycles, so it ends where it
    started. Saccade and fixation targets are drawn from the central part
    of the sensor.
    """
    cfg = cfg or benchmark_config(seed)
    rng = np.random.default_rng(10_000 + seed)
    w, h = cfg.width, cfg.height

    def target():
        return (float(rng.uniform(0.35 * w, 0.65 * w)), float(rng.uniform(0.4 * h, 0.6 * h)))

    def pursuit(ms):
        return Segment(MotionKind.PURSUIT, ms * 1000, amplitude_px=12.0, frequency_hz=2.0,
                       direction_deg=float(rng.uniform(0.0, 360.0)))

    segments = (
        Segment(MotionKind.FIXATION, 200_000, target=target()),
        pursuit(1500),
        Segment(MotionKind.SACCADE, 60_000, target=target()),
        pursuit(1000),
        Segment(MotionKind.BLINK, 150_000),
        pursuit(1000),
        Segment(MotionKind.SACCADE, 60_000, target=target()),
        pursuit(1000),
        Segment(MotionKind.FIXATION, 30_000),
    )
    return MotionScript(segments, w, h, margin=cfg.pupil_radius)


def benchmark_recording(seed: int) -> tuple[EventStream, LabelTrack]:
    cfg = benchmark_config(seed)
    track = synth_trajectory(benchmark_script(seed, cfg), seed)
    return render_events(track, cfg), track
