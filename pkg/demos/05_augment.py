"""Training-time augmentations and what they do to labels."""
import numpy as np

from evio.augment import AugSpec, augment, event_deletion, spatial_flip, temporal_shift
from evio.representation import bin_to_frames
from evio.simulator import benchmark_recording

stream, track = benchmark_recording(2)

s2, t2 = temporal_shift(stream, track, 200_000)
print("shift +200 ms: labels now start at index", t2.start, "events", len(stream), "->", len(s2))
same = np.array_equal(bin_to_frames(s2, t2).pos, bin_to_frames(stream, track).pos)
print("frames under shifted labels match the originals:", same)

s3, t3 = temporal_shift(stream, track, -125_000)
print("shift -125 ms: dropped", len(track) - len(t3), "labels and", len(stream) - len(s3), "events")

fs, ft = spatial_flip(stream, track, flip_h=True)
print("flip: first label x", track.x[0], "->", ft.x[0], "(width", stream.width, ")")
print("double flip restores everything:", spatial_flip(fs, ft, flip_h=True) == (stream, track))

kept = [len(event_deletion(stream, 0.05, seed)) / len(stream) for seed in range(5)]
print("kept fraction after 5% deletion:", np.round(kept, 4))

spec = AugSpec.random(seed=11)
a_stream, a_track = augment(stream, track, spec)
print(spec, "->", len(a_stream), "events,", len(a_track), "labels")
