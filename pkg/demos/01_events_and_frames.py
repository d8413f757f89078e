"""Events on disk and the frame views built from them.

Run: python3 demos/01_events_and_frames.py
"""
import tempfile
from pathlib import Path

import numpy as np

from evio import events as ev
from evio.representation import WindowSpec, bin_to_frames, bina_rep, binarize_stack, downsample_stack, sliding_windows
from evio.simulator import benchmark_recording

stream, track = benchmark_recording(3)
print(f"{len(stream)} events on a {stream.width}x{stream.height} sensor, {len(track)} labels at 100 Hz")
print("first events (t_us, x, y, p):", list(stream)[:3])

# CSV and the 14-byte binary records hold the same stream
tmp = Path(tempfile.mkdtemp())
ev.write_events(stream, tmp / "e.bin")
ev.write_events(stream, tmp / "e.csv")
print("bin bytes:", (tmp / "e.bin").stat().st_size, " csv bytes:", (tmp / "e.csv").stat().st_size)
assert ev.read_events(tmp / "e.bin") == ev.read_events(tmp / "e.csv", stream.width, stream.height) == stream

# one count frame per label slot
stack = bin_to_frames(stream, track)
total = stack.pos.sum() + stack.neg.sum()
print(f"binned {total} events, dropped {stack.n_dropped}")
busiest = int(np.argmax(stack.pos_counts() + stack.neg_counts()))
print("busiest frame", busiest, "pos/neg", stack.pos_counts()[busiest], stack.neg_counts()[busiest])

# eight consecutive binary maps packed into one integer image
grids = binarize_stack(stack)[busiest:busiest + 8]
rep = bina_rep(list(grids))
print("bina-rep max value", rep.values.max(), "of", 2 ** rep.bits - 1)
assert np.array_equal(rep.bit(0), grids[0])

small = downsample_stack(stack, 4, 4)
print("downsampled frame shape", small.pos.shape[1:], "same total:", small.pos.sum() == stack.pos.sum())

win = sliding_windows(len(stack), WindowSpec(length=30, stride=15, step=2))
print(f"{len(win)} training windows of 30 frames, first spans {win[0, 0]}..{win[0, -1]}")
