"""Event-level augmentations: temporal shift, spatial flips, event deletion."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .events import LABEL_PERIOD_US, EventStream, LabelTrack

log = logging.getLogger(__name__)

MAX_SHIFT_US = 200_000


@dataclass(frozen=True)
class AugSpec:
    shift_us: int = 0
    flip_h: bool = False
    flip_v: bool = False
    delete_frac: float = 0.05
    seed: int = 42

    def __post_init__(self):
        if abs(self.shift_us) > MAX_SHIFT_US:
            raise ValueError(f"|shift_us| must be <= {MAX_SHIFT_US}")
        if not 0.0 <= self.delete_frac <= 1.0:
            raise ValueError("delete_frac must lie in [0, 1]")

    @classmethod
    def random(cls, seed: int, delete_frac: float = 0.05) -> "AugSpec":
        """Shift uniform in +-200 ms, each flip with probability 1/2."""
        rng = np.random.default_rng(seed)
        return cls(int(rng.integers(-MAX_SHIFT_US, MAX_SHIFT_US + 1)),
                   bool(rng.integers(2)), bool(rng.integers(2)), delete_frac, seed)


def label_offset(shift_us: int) -> int:
    """Whole label periods in ``shift_us``, rounded toward zero."""
    k = abs(int(shift_us)) // LABEL_PERIOD_US
    return k if shift_us >= 0 else -k


def temporal_shift(stream: EventStream, track: LabelTrack, shift_us: int) -> tuple[EventStream, LabelTrack]:
    """Shift every event by ``shift_us`` and move labels by the whole-period part.

    The label at new index ``j`` is the original label at ``j - k``. Events
    pushed before time 0 are dropped, and so are the labels whose new
    slot would precede index 0. A positive shift leaves the first ``k``
    label slots without a source; the returned track then starts at index
    ``k``.
    """
    if abs(shift_us) > MAX_SHIFT_US:
        raise ValueError(f"|shift_us| must be <= {MAX_SHIFT_US}")
    n = len(track)
    span = n * LABEL_PERIOD_US
    if shift_us != 0 and abs(shift_us) >= span:
        log.warning("temporal shift of %d us exceeds the %d us recording; result is empty", shift_us, span)
        return EventStream.empty(stream.width, stream.height), LabelTrack([], [], [], start=0)

    k = label_offset(shift_us)
    t = stream.t + shift_us
    keep = t >= 0
    shifted = EventStream(t[keep], stream.x[keep], stream.y[keep], stream.p[keep], stream.width, stream.height)

    new_start = track.start + k
    drop = max(0, -new_start)
    labels = LabelTrack(track.x[drop:], track.y[drop:], track.blink[drop:], start=new_start + drop)
    return shifted, labels


def spatial_flip(stream: EventStream, track: LabelTrack, flip_h: bool = False,
                 flip_v: bool = False) -> tuple[EventStream, LabelTrack]:
    """Mirror events and labels: ``x -> width - 1 - x`` and/or ``y -> height - 1 - y``."""
    w, h = stream.width, stream.height
    ex = stream.x.astype(np.int64)
    ey = stream.y.astype(np.int64)
    lx, ly = track.x, track.y
    if flip_h:
        ex = (w - 1) - ex
        lx = (w - 1) - lx
    if flip_v:
        ey = (h - 1) - ey
        ly = (h - 1) - ly
    return (EventStream(stream.t, ex, ey, stream.p, w, h),
            LabelTrack(lx, ly, track.blink, start=track.start))


def deletion_uniforms(n: int, seed: int, offset: int = 0) -> np.ndarray:
    """Uniform draws for event ordinals ``offset .. offset + n - 1`` under ``seed``.

    Draw ``i`` depends only on ``(seed, i)``: a Philox counter generator is
    advanced to the ordinal, so chunks can be drawn independently.
    """
    bitgen = np.random.Philox(key=seed)
    # each 64-bit double consumes one of the four 64-bit words per counter step
    q, r = divmod(offset, 4)
    bitgen.advance(q)
    u = np.random.Generator(bitgen).random(n + r)
    return u[r:]


def event_deletion(stream: EventStream, frac: float = 0.05, seed: int = 42) -> EventStream:
    """Drop each event independently with probability ``frac``."""
    if not 0.0 <= frac <= 1.0:
        raise ValueError("frac must lie in [0, 1]")
    if frac == 0.0:
        return stream
    keep = deletion_uniforms(len(stream), seed) >= frac
    return stream.take(keep)


def augment(stream: EventStream, track: LabelTrack, spec: AugSpec) -> tuple[EventStream, LabelTrack]:
    """Shift, flip, then delete, in that order."""
    s, t = temporal_shift(stream, track, spec.shift_us)
    s, t = spatial_flip(s, t, spec.flip_h, spec.flip_v)
    return event_deletion(s, spec.delete_frac, spec.seed), t
