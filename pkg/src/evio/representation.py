"""Frame-style event representations.

Frames are aligned to the 100 Hz label grid. Frame ``i`` collects the
events of the 10 ms slot that starts at its label index, i.e. events with
``index * 10_000 <= t < (index + 1) * 10_000``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import LABEL_PERIOD_US, EventStream, LabelTrack


@dataclass(frozen=True, eq=False)
class Frame:
    counts_pos: np.ndarray
    counts_neg: np.ndarray

    @property
    def height(self) -> int:
        return self.counts_pos.shape[0]

    @property
    def width(self) -> int:
        return self.counts_pos.shape[1]

    @property
    def total(self) -> np.ndarray:
        return self.counts_pos + self.counts_neg

    def __eq__(self, other) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return np.array_equal(self.counts_pos, other.counts_pos) and np.array_equal(
            self.counts_neg, other.counts_neg)


@dataclass(frozen=True, eq=False)
class FrameStack:
    """Per-label event count frames.

    ``pos`` and ``neg`` have shape ``(n_frames, height, width)``.
    ``n_dropped`` counts events that fell outside every frame slot.
    """

    pos: np.ndarray
    neg: np.ndarray
    bin_window_us: int = LABEL_PERIOD_US
    start: int = 0
    n_dropped: int = 0

    def __len__(self) -> int:
        return self.pos.shape[0]

    def __getitem__(self, i: int) -> Frame:
        return Frame(self.pos[i], self.neg[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def height(self) -> int:
        return self.pos.shape[1]

    @property
    def width(self) -> int:
        return self.pos.shape[2]

    def pos_counts(self) -> np.ndarray:
        return self.pos.sum(axis=(1, 2))

    def neg_counts(self) -> np.ndarray:
        return self.neg.sum(axis=(1, 2))


@dataclass(frozen=True)
class WindowSpec:
    length: int
    stride: int = 1
    step: int = 1

    def __post_init__(self):
        if self.length < 1 or self.stride < 1 or self.step < 1:
            raise ValueError(f"window length, stride and step must be >= 1: {self}")


@dataclass(frozen=True, eq=False)
class BinaRep:
    values: np.ndarray
    bits: int

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def bit(self, k: int) -> np.ndarray:
        if not 0 <= k < self.bits:
            raise IndexError(k)
        return ((self.values >> k) & 1).astype(np.uint8)


def bin_to_frames(stream: EventStream, track: LabelTrack) -> FrameStack:
    n = len(track)
    h, w = stream.height, stream.width
    slot = stream.t // LABEL_PERIOD_US - track.start
    keep = (slot >= 0) & (slot < n)
    flat = (slot[keep] * h + stream.y[keep].astype(np.int64)) * w + stream.x[keep].astype(np.int64)
    positive = stream.p[keep] > 0
    size = n * h * w
    pos = np.bincount(flat[positive], minlength=size).reshape(n, h, w)
    neg = np.bincount(flat[~positive], minlength=size).reshape(n, h, w)
    return FrameStack(pos, neg, LABEL_PERIOD_US, track.start, int((~keep).sum()))


def binarize(frame: Frame | np.ndarray) -> np.ndarray:
    """1 where the cell saw any event. Accepts a Frame or a raw count grid/stack."""
    total = frame.total if isinstance(frame, Frame) else np.asarray(frame)
    return (total > 0).astype(np.uint8)


def binarize_stack(stack: FrameStack) -> np.ndarray:
    return ((stack.pos + stack.neg) > 0).astype(np.uint8)


def bina_rep(grids) -> BinaRep:
    """Stack ``b`` binary grids as bit planes; grid 0 is the least significant bit."""
    grids = [np.asarray(g) for g in grids]
    b = len(grids)
    if not 1 <= b <= 16:
        raise ValueError(f"bina-rep needs 1..16 grids, got {b}")
    shape = grids[0].shape
    if any(g.shape != shape for g in grids):
        raise ValueError("bina-rep grids differ in shape")
    values = np.zeros(shape, dtype=np.uint32)
    for k, g in enumerate(grids):
        values |= (g != 0).astype(np.uint32) << k
    return BinaRep(values, b)


def downsample(frame: Frame, fx: int, fy: int) -> Frame:
    """Sum-pool each polarity over ``fx`` x ``fy`` blocks."""
    h, w = frame.height, frame.width
    if fx < 1 or fy < 1 or w % fx or h % fy:
        raise ValueError(f"factors ({fx}, {fy}) do not divide {w}x{h}")
    return Frame(_pool(frame.counts_pos, fx, fy), _pool(frame.counts_neg, fx, fy))


def _pool(a: np.ndarray, fx: int, fy: int) -> np.ndarray:
    *lead, h, w = a.shape
    return a.reshape(*lead, h // fy, fy, w // fx, fx).sum(axis=(-3, -1))


def downsample_stack(stack: FrameStack, fx: int, fy: int) -> FrameStack:
    if fx < 1 or fy < 1 or stack.width % fx or stack.height % fy:
        raise ValueError(f"factors ({fx}, {fy}) do not divide {stack.width}x{stack.height}")
    return FrameStack(_pool(stack.pos, fx, fy), _pool(stack.neg, fx, fy),
                      stack.bin_window_us, stack.start, stack.n_dropped)


def sliding_windows(n_frames: int, spec: WindowSpec) -> np.ndarray:
    """Index vectors of every full window, shape ``(n_windows, length)``."""
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    reach = (spec.length - 1) * spec.step
    starts = np.arange(0, max(n_frames - reach, 0), spec.stride, dtype=np.int64)
    return starts[:, None] + spec.step * np.arange(spec.length, dtype=np.int64)[None, :]


def frame_features(stack: FrameStack, factor: int = 1) -> np.ndarray:
    """Flattened binary maps, optionally downsampled first; shape ``(n, features)``."""
    if factor > 1:
        stack = downsample_stack(stack, factor, factor)
    return binarize_stack(stack).reshape(len(stack), -1).astype(np.float64)
