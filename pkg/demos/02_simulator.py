"""Synthetic eye movements and the DVS events they produce."""
import numpy as np

from evio.simulator import MotionKind, Segment, SimConfig, min_jerk_velocity, simulate

cfg = SimConfig(width=80, height=60, pupil_radius=4.0, noise_rate_hz=0.0, seed=1)
script = [
    Segment(MotionKind.FIXATION, 200_000, target=(25.0, 30.0)),
    Segment(MotionKind.SACCADE, 100_000, target=(55.0, 30.0)),
    Segment(MotionKind.PURSUIT, 500_000, amplitude_px=6.0, frequency_hz=2.0, direction_deg=90.0),
    Segment(MotionKind.BLINK, 100_000),
    Segment(MotionKind.FIXATION, 100_000),
]
stream, track = simulate(script, cfg)

# the saccade crosses 30 px in 100 ms; minimum jerk peaks at 1.875x the mean speed
u = np.linspace(0, 1, 10_001)
print("analytic peak speed (px/s):", 30 / 0.1 * min_jerk_velocity(u).max())
vx = np.diff(track.x[20:31]) / 0.01
print("sampled peak speed (px/s): ", vx.max().round(1))

for name, lo, hi in [("fixation", 0, 200), ("saccade", 200, 300), ("pursuit", 300, 800),
                     ("blink onset", 800, 810), ("blink rest", 810, 900), ("reopen", 900, 910)]:
    sel = (stream.t >= lo * 1000) & (stream.t < hi * 1000)
    pos = int(np.sum(stream.p[sel] > 0))
    neg = int(np.sum(stream.p[sel] < 0))
    print(f"{name:12s} {pos:6d} +  {neg:6d} -")

# a darker pupil crosses more thresholds
for contrast in (0.25, 0.5, 1.0):
    n = len(simulate(script[:3], SimConfig(contrast=contrast, noise_rate_hz=0.0))[0])
    print(f"contrast {contrast}: {n} events")
