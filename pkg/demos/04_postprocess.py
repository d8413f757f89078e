"""Refining a raw trajectory: adaptive median filter, event-flow nudge,
and the blink override."""
import numpy as np

from evio.events import Trajectory
from evio.metrics import pixel_error
from evio.postprocess import adaptive_windows, blink_flags, blink_override, m2f, ofe
from evio.representation import bin_to_frames
from evio.simulator import benchmark_recording
from evio.trackers import centroid_track

stream, track = benchmark_recording(5)
stack = bin_to_frames(stream, track)
raw = centroid_track(stack)


def err(t):
    return round(pixel_error(t, track).pixel_error, 4)


w = adaptive_windows(raw)
sizes, counts = np.unique(w, return_counts=True)
print("median window sizes used:", dict(zip(sizes.tolist(), counts.tolist())))
smooth = m2f(raw)
print("centroid", err(raw), "-> m2f", err(smooth))

flags = blink_flags(stack)
print("frames flagged as blink:", np.flatnonzero(flags).tolist()[:20], "...")
print("truth blink frames:     ", np.flatnonzero(track.blink).tolist())
final = blink_override(smooth, stack)
print("-> blink override", err(final))

# OFE expects predictions that trail the pupil; fake a 2 px lag to see it work
v = np.gradient(track.points, axis=0)
speed = np.hypot(v[:, 0], v[:, 1])[:, None]
lagging = Trajectory(track.points - 2 * np.divide(v, speed, out=np.zeros_like(v), where=speed > 0))
print("2 px lag", err(lagging), "-> ofe", err(ofe(lagging, stream)))
