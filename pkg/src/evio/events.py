"""Core event, label and trajectory containers plus their file formats.

Events are held column-wise in numpy arrays. Timestamps are integer
microseconds; polarity is stored as int8 in {-1, +1} and written to disk
as {0, 1}.
"""
from __future__ import annotations

import csv
import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

LABEL_PERIOD_US = 10_000
LABEL_RATE_HZ = 100

BIN_MAGIC = b"EVIO"
BIN_VERSION = 1
_HEADER = struct.Struct("<4sHHHIH")
_RECORD = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "u1"), ("pad", "u1")])
assert _HEADER.size == 16 and _RECORD.itemsize == 14


class EventFormatError(ValueError):
    """Raised for malformed event, label or trajectory files."""


class BoundsError(ValueError):
    """Raised when coordinates fall outside the declared sensor geometry."""


class Polarity(enum.IntEnum):
    NEGATIVE = -1
    POSITIVE = 1


class Event(NamedTuple):
    t_us: int
    x: int
    y: int
    p: Polarity


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EventStream:
    """Time-sorted DVS events on a ``width`` x ``height`` sensor.

    Use :meth:`from_arrays` to build one from unsorted data; the plain
    constructor validates but never reorders.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.int64)
        x = np.asarray(self.x, dtype=np.int64)
        y = np.asarray(self.y, dtype=np.int64)
        p = np.asarray(self.p, dtype=np.int8)
        if not (t.ndim == x.ndim == y.ndim == p.ndim == 1):
            raise ValueError("event columns must be 1-D")
        if not (len(t) == len(x) == len(y) == len(p)):
            raise ValueError("event columns differ in length")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"invalid sensor geometry {self.width}x{self.height}")
        if len(t):
            if t.min() < 0:
                raise ValueError("negative timestamp")
            if np.any(np.diff(t) < 0):
                raise ValueError("events are not sorted by timestamp")
            bad = (x < 0) | (x >= self.width) | (y < 0) | (y >= self.height)
            if bad.any():
                i = int(np.argmax(bad))
                raise BoundsError(
                    f"event {i} at ({x[i]}, {y[i]}) outside {self.width}x{self.height} sensor"
                )
            if not np.all((p == 1) | (p == -1)):
                raise ValueError("polarity must be -1 or +1")
        object.__setattr__(self, "t", _frozen(t))
        object.__setattr__(self, "x", _frozen(x.astype(np.uint16)))
        object.__setattr__(self, "y", _frozen(y.astype(np.uint16)))
        object.__setattr__(self, "p", _frozen(p))

    @classmethod
    def from_arrays(cls, t, x, y, p, width: int, height: int) -> "EventStream":
        """Build a stream, stable-sorting by timestamp so ties keep input order."""
        t = np.asarray(t, dtype=np.int64)
        order = np.argsort(t, kind="stable")
        return cls(t[order], np.asarray(x)[order], np.asarray(y)[order],
                   np.asarray(p)[order], width, height)

    @classmethod
    def empty(cls, width: int, height: int) -> "EventStream":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, z, z, width, height)

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[Event]:
        for t, x, y, p in zip(self.t.tolist(), self.x.tolist(), self.y.tolist(), self.p.tolist()):
            yield Event(t, x, y, Polarity(p))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )

    def take(self, mask_or_index) -> "EventStream":
        """Subset of events; the selection must keep time order."""
        return EventStream(self.t[mask_or_index], self.x[mask_or_index], self.y[mask_or_index],
                           self.p[mask_or_index], self.width, self.height)

    @property
    def span_us(self) -> int:
        return int(self.t[-1] - self.t[0]) if len(self) else 0


def slice_events(stream: EventStream, t0: int, t1: int) -> EventStream:
    """Events with ``t0 <= t < t1``."""
    if t0 > t1:
        raise ValueError(f"slice start {t0} is after end {t1}")
    lo = np.searchsorted(stream.t, t0, side="left")
    hi = np.searchsorted(stream.t, t1, side="left")
    return stream.take(slice(lo, hi))


@dataclass(frozen=True, eq=False)
class LabelTrack:
    """Ground-truth pupil centres on the 100 Hz label grid.

    Label ``i`` of the track has index ``start + i`` and timestamp
    ``index * 10_000`` us. ``start`` is 0 for recorded tracks and only
    moves when a temporal shift trims leading labels.
    """

    x: np.ndarray
    y: np.ndarray
    blink: np.ndarray
    start: int = 0
    rate_hz: int = field(default=LABEL_RATE_HZ, init=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        blink = np.asarray(self.blink, dtype=bool)
        if not (x.shape == y.shape == blink.shape) or x.ndim != 1:
            raise ValueError("label columns must be 1-D and equal length")
        if self.start < 0:
            raise ValueError("label start index must be non-negative")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "blink", _frozen(blink))

    def __len__(self) -> int:
        return len(self.x)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelTrack):
            return NotImplemented
        return (
            self.start == other.start
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.blink, other.blink)
        )

    @property
    def index(self) -> np.ndarray:
        return np.arange(self.start, self.start + len(self), dtype=np.int64)

    @property
    def t_us(self) -> np.ndarray:
        return self.index * LABEL_PERIOD_US

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    def check_bounds(self, width: int, height: int) -> None:
        open_ = ~self.blink
        bad = open_ & ((self.x < 0) | (self.x >= width) | (self.y < 0) | (self.y >= height))
        if bad.any():
            i = int(np.argmax(bad))
            raise BoundsError(f"label {self.start + i} at ({self.x[i]}, {self.y[i]}) outside sensor")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Predicted pupil centres, one row per label."""

    points: np.ndarray
    source: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        object.__setattr__(self, "points", _frozen(pts))

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def replace(self, points, source: str | None = None) -> "Trajectory":
        return Trajectory(points, self.source if source is None else source)


# ---------------------------------------------------------------- file I/O

def format_decimal(v: float) -> str:
    # shortest repr that round-trips, padded to at least 4 fractional digits
    return np.format_float_positional(float(v), unique=True, min_digits=4, trim="k")


def _open_rows(path, header: Sequence[str]):
    path = Path(path)
    fh = path.open(newline="", encoding="utf-8")
    reader = csv.reader(fh)
    first = next(reader, None)
    if first is None or [c.strip() for c in first] != list(header):
        fh.close()
        raise EventFormatError(f"{path}: line 1: expected header {','.join(header)!r}")
    return fh, reader


def read_events_csv(path, width: int | None = None, height: int | None = None) -> EventStream:
    """Read a ``t_us,x,y,p`` CSV.

    Sensor geometry is not part of the CSV; when ``width``/``height`` are
    omitted they are inferred as ``max + 1`` of the coordinates.
    """
    fh, reader = _open_rows(path, ("t_us", "x", "y", "p"))
    t, x, y, p = [], [], [], []
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                if len(row) != 4:
                    raise ValueError(f"expected 4 fields, got {len(row)}")
                ti, xi, yi, pi = (int(c) for c in row)
                if pi not in (0, 1):
                    raise ValueError(f"polarity {pi} not in {{0,1}}")
                if ti < 0 or xi < 0 or yi < 0:
                    raise ValueError("negative value")
            except ValueError as exc:
                raise EventFormatError(f"{path}: line {lineno}: {exc}") from None
            if (width is not None and xi >= width) or (height is not None and yi >= height):
                raise BoundsError(f"{path}: line {lineno}: ({xi}, {yi}) outside {width}x{height} sensor")
            t.append(ti)
            x.append(xi)
            y.append(yi)
            p.append(1 if pi else -1)
    if width is None:
        width = max(x) + 1 if x else 1
    if height is None:
        height = max(y) + 1 if y else 1
    return EventStream.from_arrays(np.array(t, dtype=np.int64), np.array(x, dtype=np.int64),
                                   np.array(y, dtype=np.int64), np.array(p, dtype=np.int8),
                                   width, height)


def write_events_csv(stream: EventStream, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("t_us,x,y,p\n")
        disk_p = (stream.p > 0).astype(np.int64)
        rows = np.column_stack([stream.t, stream.x.astype(np.int64), stream.y.astype(np.int64), disk_p])
        if len(rows):
            np.savetxt(fh, rows, fmt="%d", delimiter=",")


def write_events_bin(stream: EventStream, path) -> None:
    rec = np.zeros(len(stream), dtype=_RECORD)
    rec["t"] = stream.t
    rec["x"] = stream.x
    rec["y"] = stream.y
    rec["p"] = stream.p > 0
    header = _HEADER.pack(BIN_MAGIC, BIN_VERSION, stream.width, stream.height, len(stream), 0)
    with Path(path).open("wb") as fh:
        fh.write(header)
        fh.write(rec.tobytes())


def read_events_bin(path) -> EventStream:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise EventFormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, width, height, count, _ = _HEADER.unpack_from(data)
    if magic != BIN_MAGIC:
        raise EventFormatError(f"{path}: bad magic {magic!r}")
    if version != BIN_VERSION:
        raise EventFormatError(f"{path}: unsupported version {version}")
    body = len(data) - _HEADER.size
    if body % _RECORD.itemsize:
        raise EventFormatError(f"{path}: body of {body} bytes is not a whole number of records")
    if body // _RECORD.itemsize != count:
        raise EventFormatError(f"{path}: header says {count} records, file holds {body // _RECORD.itemsize}")
    rec = np.frombuffer(data, dtype=_RECORD, offset=_HEADER.size)
    if np.any(rec["p"] > 1):
        raise EventFormatError(f"{path}: polarity byte outside {{0,1}}")
    t = rec["t"].astype(np.int64)
    p = np.where(rec["p"] == 1, 1, -1).astype(np.int8)
    return EventStream(t, rec["x"], rec["y"], p, width, height)


def read_events(path, width: int | None = None, height: int | None = None) -> EventStream:
    """Dispatch on extension: ``.bin`` is the EVIO binary format, anything else CSV."""
    if Path(path).suffix == ".bin":
        return read_events_bin(path)
    return read_events_csv(path, width, height)


def write_events(stream: EventStream, path) -> None:
    if Path(path).suffix == ".bin":
        write_events_bin(stream, path)
    else:
        write_events_csv(stream, path)


def _read_indexed(path, header):
    fh, reader = _open_rows(path, header)
    rows = []
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise EventFormatError(f"{path}: line {lineno}: expected {len(header)} fields")
            try:
                rows.append((lineno, int(row[0]), *(float(c) for c in row[1:])))
            except ValueError as exc:
                raise EventFormatError(f"{path}: line {lineno}: {exc}") from None
    for k in range(1, len(rows)):
        if rows[k][1] != rows[k - 1][1] + 1:
            raise EventFormatError(
                f"{path}: line {rows[k][0]}: index {rows[k][1]} does not follow {rows[k - 1][1]}"
            )
    if rows and rows[0][1] < 0:
        raise EventFormatError(f"{path}: line 2: negative index")
    return rows


def read_labels_csv(path) -> LabelTrack:
    rows = _read_indexed(path, ("idx", "x", "y", "blink"))
    for lineno, _, _, _, b in rows:
        if b not in (0.0, 1.0):
            raise EventFormatError(f"{path}: line {lineno}: blink must be 0 or 1")
    start = rows[0][1] if rows else 0
    return LabelTrack(
        np.array([r[2] for r in rows]),
        np.array([r[3] for r in rows]),
        np.array([r[4] == 1.0 for r in rows], dtype=bool),
        start=start,
    )


def write_labels_csv(track: LabelTrack, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("idx,x,y,blink\n")
        for i, x, y, b in zip(track.index.tolist(), track.x, track.y, track.blink):
            fh.write(f"{i},{format_decimal(x)},{format_decimal(y)},{int(b)}\n")


def read_trajectory_csv(path, source: str = "") -> Trajectory:
    """Read ``idx,x,y``; a label CSV is accepted too and its blink column ignored."""
    with Path(path).open(encoding="utf-8") as fh:
        header = fh.readline().strip()
    if header == "idx,x,y,blink":
        track = read_labels_csv(path)
        return Trajectory(track.points, source or Path(path).stem)
    rows = _read_indexed(path, ("idx", "x", "y"))
    return Trajectory(np.array([(r[2], r[3]) for r in rows]).reshape(-1, 2), source or Path(path).stem)


def write_trajectory_csv(traj: Trajectory, path, start: int = 0) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("idx,x,y\n")
        for i, (x, y) in enumerate(traj.points, start=start):
            fh.write(f"{i},{format_decimal(x)},{format_decimal(y)}\n")
